"""Invariant suite behind ``lqccsim verify``.

Every check returns ``(passed, detail)``.  ``quick`` mode shrinks sample
counts so the suite finishes in seconds; ``full`` mode uses the counts
the invariants are stated with.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import numerics as nx
from .concentrate import build_filter, gamma_max, shift_flip_extract
from .lqcc import (
    LocalOperation,
    apply_pair,
    branch_weights,
    dilate,
    joint_vector,
    random_kraus,
    simulate_measurement,
    transfer_to_alice_side,
)
from .states import (
    PureBipartiteState,
    Side,
    is_maximally_entangled,
    marginal,
    random_pure_state,
    schmidt_coefficients,
    schmidt_decompose,
    state_from_schmidt,
)
from .superdense import Decoder, encode, qubit_state, run_batch, success_probability
from .theorem import (
    check_matrix_condition,
    commutant_unitary,
    proposition_falsifier,
    shared_concentrator,
    shared_marginal_partner,
)


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    tag: str
    fn: Callable[[bool, int], tuple[bool, str]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    module: str
    tag: str
    passed: bool
    detail: str
    seconds: float

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "module": self.module,
            "tag": self.tag,
            "passed": self.passed,
            "detail": self.detail,
        }


def _n(quick: bool, small: int, large: int) -> int:
    return small if quick else large


def _rng(seed, *names):
    return nx.derive_rng(seed, "verify", *names)


def svd_round_trip(quick, seed):
    rng = _rng(seed, "svd")
    worst = 0.0
    for _ in range(_n(quick, 20, 200)):
        m, n = rng.integers(1, 9, size=2)
        a = nx.complex_gaussian(rng, (m, n))
        u, s, v = nx.svd(a)
        worst = max(worst, np.linalg.norm(a - (u * s) @ v.conj().T) / np.linalg.norm(a))
    return worst <= 1e-10, f"max relative residual {worst:.2e}"


def eigh_reconstruction(quick, seed):
    rng = _rng(seed, "eigh")
    worst = 0.0
    for _ in range(_n(quick, 20, 200)):
        n = int(rng.integers(1, 9))
        g = nx.complex_gaussian(rng, (n, n))
        h = g + g.conj().T
        e, q = nx.eigh(h)
        res = np.linalg.norm(h - (q * e) @ q.conj().T) / max(1.0, np.linalg.norm(h))
        worst = max(worst, res, np.linalg.norm(q.conj().T @ q - np.eye(n)))
    return worst <= 1e-10, f"max residual {worst:.2e}"


def isometry_completion(quick, seed):
    rng = _rng(seed, "iso")
    worst = 0.0
    for _ in range(_n(quick, 20, 200)):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, n + 1))
        v = nx.random_haar_unitary(n, rng)[:, :k]
        u = nx.complete_isometry(v)
        worst = max(worst, np.linalg.norm(u.conj().T @ u - np.eye(n)), np.abs(u[:, :k] - v).max())
    return worst <= 1e-10, f"max unitarity/extension error {worst:.2e}"


def kron_mixed_product(quick, seed):
    rng = _rng(seed, "kron")
    worst = 0.0
    for _ in range(_n(quick, 20, 200)):
        a, b, c, d = (nx.complex_gaussian(rng, (2, 2)) for _ in range(4))
        worst = max(worst, np.abs(nx.kron(a, b) @ nx.kron(c, d) - nx.kron(a @ c, b @ d)).max())
    return worst <= 1e-12, f"max entry error {worst:.2e}"


def schmidt_round_trip(quick, seed):
    worst = 0.0
    rng = _rng(seed, "schmidt")
    for i in range(_n(quick, 20, 200)):
        m, n = rng.integers(1, 9, size=2)
        s = random_pure_state(int(m), int(n), rng)
        worst = max(worst, np.abs(schmidt_decompose(s).reconstruct() - s.coeff).max())
    return worst <= 1e-9, f"max reconstruction error {worst:.2e}"


def marginal_symmetry(quick, seed):
    rng = _rng(seed, "marg")
    worst = 0.0
    for _ in range(_n(quick, 20, 200)):
        m, n = (int(x) for x in rng.integers(1, 9, size=2))
        s = random_pure_state(m, n, rng)
        ea = np.linalg.eigvalsh(marginal(s, Side.ALICE).matrix)[::-1]
        eb = np.linalg.eigvalsh(marginal(s, Side.BOB).matrix)[::-1]
        r = min(m, n)
        worst = max(worst, np.abs(ea[:r] - eb[:r]).max())
    return worst <= 1e-9, f"max spectrum mismatch {worst:.2e}"


def local_unitary_invariance(quick, seed):
    rng = _rng(seed, "lu")
    worst = 0.0
    for _ in range(_n(quick, 20, 200)):
        n = int(rng.integers(2, 7))
        s = random_pure_state(n, n, rng)
        ua, ub = nx.random_haar_unitary(n, rng), nx.random_haar_unitary(n, rng)
        t = PureBipartiteState(s.apply_local(ua, ub))
        worst = max(worst, np.abs(schmidt_coefficients(s) - schmidt_coefficients(t)).max())
        rho = marginal(s, Side.ALICE).matrix
        rho_b = marginal(PureBipartiteState(s.apply_local(None, ub)), Side.ALICE).matrix
        worst = max(worst, np.abs(rho - rho_b).max())
    return worst <= 1e-9, f"max deviation {worst:.2e}"


def probe_commutation(quick, seed):
    rng = _rng(seed, "comm")
    worst = 0.0
    for _ in range(_n(quick, 10, 100)):
        n = int(rng.integers(2, 5))
        s = random_pure_state(n, n, rng)
        d = dilate(LocalOperation(Side.ALICE, random_kraus(n, rng)))
        ub = nx.random_haar_unitary(n, rng)
        v = joint_vector(s, d.probe_dim)
        u_ap = np.kron(d.unitary, np.eye(n))
        u_b = np.kron(np.eye(n * d.probe_dim), ub)
        worst = max(worst, np.abs(u_ap @ (u_b @ v) - u_b @ (u_ap @ v)).max())
    return worst <= 1e-10, f"max commutator entry {worst:.2e}"


def dilation_probability(quick, seed):
    rng = _rng(seed, "dil")
    worst = 0.0
    for _ in range(_n(quick, 10, 100)):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        op = LocalOperation(Side.ALICE, random_kraus(n, rng))
        d = dilate(op)
        worst = max(worst, nx.spectral_norm(d.unitary.conj().T @ d.unitary - np.eye(d.unitary.shape[0])))
        _, p = apply_pair(s, op)
        worst = max(worst, abs(branch_weights(d, s)[d.success_outcome] - p))
    # Monte Carlo agreement on one fixed instance
    s = state_from_schmidt([0.75, 0.25])
    d = dilate(build_filter(s))
    trials = _n(quick, 2000, 10000)
    hits = sum(simulate_measurement(d, s, nx.derive_rng(seed, "dil-mc", t))[0] == 1 for t in range(trials))
    sigma = np.sqrt(0.25 / trials)
    ok_mc = abs(hits / trials - 0.5) <= 5 * sigma
    return worst <= 1e-10 and ok_mc, f"analytic gap {worst:.2e}; MC {hits / trials:.4f} vs 0.5"


def side_transfer(quick, seed):
    rng = _rng(seed, "transfer")
    worst = 0.0
    for _ in range(_n(quick, 20, 100)):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        b = LocalOperation(Side.BOB, random_kraus(n, rng))
        t = transfer_to_alice_side(s, b)
        lhs = t.scale * s.apply_local(t.alice_op.kraus, t.bob_fix)
        worst = max(worst, np.abs(lhs - s.apply_local(None, b.kraus)).max())
    return worst <= 1e-9, f"max defining-equality error {worst:.2e}"


def sequential_composition(quick, seed):
    rng = _rng(seed, "compose")
    worst = 0.0
    for _ in range(_n(quick, 20, 100)):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        a1 = LocalOperation(Side.ALICE, random_kraus(n, rng))
        a2 = LocalOperation(Side.ALICE, random_kraus(n, rng))
        mid, p1 = apply_pair(s, a1)
        out, p2 = apply_pair(mid, a2)
        direct, p = apply_pair(s, LocalOperation(Side.ALICE, a2.kraus @ a1.kraus))
        worst = max(worst, abs(p1 * p2 - p), np.abs(out.coeff - direct.coeff).max())
    return worst <= 1e-10, f"max composition error {worst:.2e}"


def optimal_filter(quick, seed):
    rng = _rng(seed, "gamma")
    worst = 0.0
    maximal = True
    for _ in range(_n(quick, 100, 1000)):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        out, p = apply_pair(s, build_filter(s))
        worst = max(worst, abs(p - gamma_max(s)))
        maximal &= is_maximally_entangled(out, 1e-8)
    return worst <= 1e-9 and maximal, f"max |p - N*lambda_N| {worst:.2e}; outputs maximal: {maximal}"


def shift_flip_through_filter(quick, seed):
    rng = _rng(seed, "shiftflip")
    worst = 0.0
    for _ in range(_n(quick, 10, 50)):
        n = int(rng.integers(2, 7))
        lam = np.sort(rng.dirichlet(np.ones(n)))[::-1]
        s = state_from_schmidt(lam)
        d = dilate(build_filter(s))
        gamma = n * lam[-1]
        for k in range(n):
            for m in range(n):
                sub = shift_flip_extract(s, k, m)
                expected = np.zeros((n, n))
                expected[k, m] = 2 * np.sqrt(lam[k])
                worst = max(worst, np.abs(sub.coeff - expected).max())
                # success branch of the dilation on the extracted vector
                u = d.unitary.reshape(n, d.probe_dim, n, d.probe_dim)[:, d.success_outcome, :, 0]
                succ = u @ sub.coeff
                target = np.zeros((n, n))
                target[k, m] = np.sqrt(4 * gamma / n)
                worst = max(worst, np.abs(succ - target).max())
    return worst <= 1e-9, f"max amplitude error {worst:.2e}"


def filter_covariance(quick, seed):
    rng = _rng(seed, "cov")
    worst = 0.0
    for _ in range(_n(quick, 20, 100)):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        k = build_filter(s)
        ua, ub = nx.random_haar_unitary(n, rng), nx.random_haar_unitary(n, rng)
        t = PureBipartiteState(s.apply_local(ua, ub))
        _, p = apply_pair(s, k)
        _, q = apply_pair(t, LocalOperation(Side.ALICE, ua @ k.kraus @ ua.conj().T))
        worst = max(worst, abs(p - q))
    return worst <= 1e-10, f"max probability gap {worst:.2e}"


def degenerate_spectrum(rng, n):
    """Random spectrum with at least one repeated value (for nontrivial commutants)."""
    blocks = []
    left = n
    while left:
        size = int(rng.integers(1, left + 1))
        blocks.append(size)
        left -= size
    if all(b == 1 for b in blocks) and n > 1:
        blocks = [2] + [1] * (n - 2)
    weights = rng.dirichlet(np.ones(len(blocks)))
    lam = np.concatenate([np.full(b, w / b) for b, w in zip(blocks, weights)])
    return np.sort(lam)[::-1]


def sufficiency(quick, seed):
    rng = _rng(seed, "suff")
    worst = 0.0
    failures = 0
    count = _n(quick, 20, 200)
    for i in range(count):
        n = int(rng.integers(2, 6))
        if i % 2:
            lam = degenerate_spectrum(rng, n)
            s = state_from_schmidt(lam, nx.random_haar_unitary(n, rng), nx.random_haar_unitary(n, rng))
        else:
            s = random_pure_state(n, n, rng)
        side = Side.ALICE if i % 4 < 2 else Side.BOB
        t = shared_marginal_partner(s, side, rng)
        v = shared_concentrator(s, t, side)
        if not (v.concentratable and all(v.outputs_maximal)):
            failures += 1
        worst = max(worst, abs(v.probabilities[0] - v.probabilities[1]))
    return failures == 0 and worst <= 1e-10, f"{failures}/{count} failures; max probability gap {worst:.2e}"


def random_distinct_pair(rng, n, min_distance=0.01):
    while True:
        s1 = random_pure_state(n, n, rng)
        s2 = random_pure_state(n, n, rng)
        r1, r2 = marginal(s1, Side.ALICE).matrix, marginal(s2, Side.ALICE).matrix
        if np.linalg.norm(r1 - r2) > min_distance and min(schmidt_coefficients(s1)[-1], schmidt_coefficients(s2)[-1]) > 1e-6:
            return s1, s2


def necessity(quick, seed):
    rng = _rng(seed, "nec")
    count = _n(quick, 10, 200)
    budget = _n(quick, 2000, 100_000)
    bad = 0
    best = 0.0
    for i in range(count):
        n = int(rng.integers(2, 6))
        s1, s2 = random_distinct_pair(rng, n)
        v = shared_concentrator(s1, s2, Side.ALICE)
        out, _ = apply_pair(s2, build_filter(s1))
        if v.concentratable or is_maximally_entangled(out, 1e-3):
            bad += 1
        best = max(best, proposition_falsifier(s1, s2, budget, seed + i).best_score)
    return bad == 0 and best < 1 - 1e-4, f"{bad}/{count} misjudged; best falsifier score {best:.6f}"


def matrix_condition_implication(quick, seed):
    rng = _rng(seed, "cond")
    violations = 0
    positives = 0
    for i in range(_n(quick, 100, 1000)):
        n = int(rng.integers(2, 6))
        lam = np.sort(rng.dirichlet(np.ones(n)))[::-1]
        if i % 2:
            mu = lam.copy()
            u = commutant_unitary(lam, rng)
        else:
            mu = np.sort(rng.dirichlet(np.ones(n)))[::-1]
            u = nx.random_haar_unitary(n, rng)
        r = check_matrix_condition(u, lam, mu)
        positives += r.holds
        if r.holds and not (r.spectra_agree and r.constant_is_one):
            violations += 1
        if (i % 2) and not r.holds:
            violations += 1
    return violations == 0, f"{violations} violations; {positives} satisfied instances"


def falsifier_determinism(quick, seed):
    s1 = state_from_schmidt([0.75, 0.25])
    s2 = state_from_schmidt([0.5, 0.5])
    budget = _n(quick, 5000, 20000)
    a = proposition_falsifier(s1, s2, budget, seed).to_json()
    b = proposition_falsifier(s1, s2, budget, seed, workers=2).to_json()
    return a == b, f"bestScore {a['bestScore']:.6f} at trial {a['bestTrial']}"


def superdense_zero_error(quick, seed):
    rng = _rng(seed, "sd")
    errors = 0
    for _ in range(_n(quick, 20, 100)):
        s = random_pure_state(2, 2, rng)
        dec = Decoder(s)
        for msg in range(4):
            for _ in range(5):
                out = dec.run(msg, rng)
                errors += out.success and out.decoded != msg
    return errors == 0, f"{errors} decoding errors"


def superdense_rate(quick, seed):
    s = qubit_state(0.25)
    trials = _n(quick, 2000, 10000)
    r = run_batch(s, trials, seed)
    p = success_probability(s)
    sigma = np.sqrt(p * (1 - p) / trials)
    return abs(r["successRate"] - p) <= 5 * sigma, f"rate {r['successRate']:.4f} vs {p:.4f}"


def encoding_keeps_alice_marginal(quick, seed):
    rng = _rng(seed, "enc")
    worst = 0.0
    for _ in range(_n(quick, 20, 100)):
        s = random_pure_state(2, 2, rng)
        for msg in range(4):
            diff = marginal(encode(s, msg), Side.ALICE).matrix - marginal(s, Side.ALICE).matrix
            worst = max(worst, np.abs(diff).max())
    return worst <= 1e-12, f"max change {worst:.2e}"


CHECKS = [
    Check("svd round-trip", "numerics", "schmidt-form", svd_round_trip),
    Check("eigh reconstruction", "numerics", "marginal-spectrum", eigh_reconstruction),
    Check("isometry completion", "numerics", "probe-dilation", isometry_completion),
    Check("kron mixed product", "numerics", "local-product", kron_mixed_product),
    Check("schmidt reconstruction", "states", "schmidt-form", schmidt_round_trip),
    Check("marginal spectra agree", "states", "marginal-spectrum", marginal_symmetry),
    Check("local unitary invariance", "states", "local-unitary-frame", local_unitary_invariance),
    Check("probe/Bob commutation", "lqcc", "local-commutation", probe_commutation),
    Check("dilation probability", "lqcc", "postselected-probe", dilation_probability),
    Check("side transfer", "lqcc", "bob-to-alice-transfer", side_transfer),
    Check("sequential composition", "lqcc", "kraus-branch", sequential_composition),
    Check("optimal filter attains N*lambda_N", "concentrate", "optimal-probability", optimal_filter),
    Check("shift/flip through filter", "concentrate", "shift-flip-identity", shift_flip_through_filter),
    Check("filter basis covariance", "concentrate", "optimal-probability", filter_covariance),
    Check("shared marginal is sufficient", "theorem", "shared-marginal-sufficiency", sufficiency),
    Check("distinct marginals are not concentratable", "theorem", "shared-marginal-necessity", necessity),
    Check("matrix condition forces equal spectra", "theorem", "unitary-conjugation-condition", matrix_condition_implication),
    Check("falsifier determinism", "theorem", "individual-pair-no-go", falsifier_determinism),
    Check("zero decoding error", "superdense", "probabilistic-dense-coding", superdense_zero_error),
    Check("success rate 2*lambda_2", "superdense", "probabilistic-dense-coding", superdense_rate),
    Check("encoding keeps Alice's marginal", "superdense", "local-commutation", encoding_keeps_alice_marginal),
]


def run_checks(quick: bool = True, seed: int = 42, checks=CHECKS) -> list[CheckResult]:
    results = []
    for c in checks:
        start = time.perf_counter()
        try:
            ok, detail = c.fn(quick, seed)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(c.name, c.module, c.tag, bool(ok), detail, time.perf_counter() - start))
    return results
