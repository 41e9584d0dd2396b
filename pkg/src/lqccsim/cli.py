"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 domain error (rank deficiency or
annihilation), 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import numerics as nx
from .concentrate import build_filter, gamma_max
from .errors import AnnihilationError, InvalidInputError, LQCCError, RankDeficiencyError
from .lqcc import apply_pair, branch_weights, dilate, simulate_measurement
from .states import (
    DensityMatrix,
    PureBipartiteState,
    Side,
    entanglement_entropy,
    is_maximally_entangled,
    marginal,
    matrix_from_json,
    matrix_to_json,
    schmidt_decompose,
    werner_state,
)
from .superdense import qubit_state, run_batch
from .theorem import proposition_falsifier, purification_falsifier, shared_concentrator
from .verify import run_checks

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_VERIFY = 4


class VerificationFailed(Exception):
    def __init__(self, report):
        super().__init__("verification failed")
        self.report = report


def _read_json(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path} must contain a JSON object")
    return data


def load_state(path: str, tol: float) -> PureBipartiteState:
    data = _read_json(path)
    coeff = matrix_from_json(data)
    if coeff.shape != (data.get("dimA"), data.get("dimB")):
        raise InvalidInputError(f"{path}: dimA/dimB do not match the {coeff.shape} matrix")
    norm = float(np.linalg.norm(coeff))
    if abs(norm - 1.0) > tol:
        raise InvalidInputError(f"{path}: state norm is {norm:.12g}, not 1 within tol {tol:g}")
    return PureBipartiteState(coeff / norm)


def load_density(path: str, tol: float) -> DensityMatrix:
    """A density-matrix file, or a pure-state file promoted to ``|psi><psi|``."""
    data = _read_json(path)
    m = matrix_from_json(data)
    da, db = data.get("dimA"), data.get("dimB")
    if isinstance(da, int) and isinstance(db, int) and m.shape == (da * db, da * db) and da * db > 1:
        return DensityMatrix(m, tol=tol)
    return DensityMatrix.from_pure(load_state(path, tol))


def _spectrum(values) -> list[float]:
    return [float(x) for x in values]


def cmd_schmidt(args) -> dict:
    s = load_state(args.state, args.tol)
    sf = schmidt_decompose(s)
    return {
        "command": "schmidt",
        "dimA": s.dimA,
        "dimB": s.dimB,
        "lambda": _spectrum(sf.coeffs),
        "schmidtRank": sf.rank,
        "entropyBits": entanglement_entropy(s),
        "maximallyEntangled": is_maximally_entangled(s, args.tol) if s.dimA == s.dimB else False,
        "marginalAlice": matrix_to_json(marginal(s, Side.ALICE).matrix),
        "marginalBob": matrix_to_json(marginal(s, Side.BOB).matrix),
    }


def cmd_concentrate(args) -> dict:
    s = load_state(args.state, args.tol)
    k = build_filter(s)
    out, p = apply_pair(s, k)
    d = dilate(k)
    hits = 0
    for t in range(args.trials):
        outcome, _ = simulate_measurement(d, s, nx.derive_rng(args.seed, "concentrate", t))
        hits += outcome == d.success_outcome
    return {
        "command": "concentrate",
        "gammaMax": gamma_max(s),
        "filter": k.to_json(),
        "analyticProbability": p,
        "dilationProbability": float(branch_weights(d, s)[d.success_outcome]),
        "trials": args.trials,
        "successes": hits,
        "monteCarloFrequency": hits / args.trials,
        "outputMaximallyEntangled": is_maximally_entangled(out, 1e-8),
        "seed": args.seed,
    }


def cmd_shared(args) -> dict:
    s1 = load_state(args.state1, args.tol)
    s2 = load_state(args.state2, args.tol)
    if s1.coeff.shape != s2.coeff.shape:
        raise InvalidInputError(f"dimension mismatch: {s1.coeff.shape} vs {s2.coeff.shape}")
    verdict = shared_concentrator(s1, s2, args.side)
    report = {"command": "shared", **verdict.to_json()}
    if args.falsify:
        fr = proposition_falsifier(s1, s2, args.falsify, args.seed, workers=args.workers)
        report["falsifier"] = fr.to_json()
    return report


def cmd_superdense(args) -> dict:
    s = qubit_state(args.lambda2)
    batch = run_batch(s, args.trials, args.seed)
    return {"command": "superdense", "lambda2": args.lambda2, "seed": args.seed, **batch}


def cmd_purify(args) -> dict:
    if (args.state is None) == (args.werner is None):
        raise InvalidInputError("give exactly one of a state file or --werner p")
    if args.werner is not None:
        rho = werner_state(args.werner)
        source = {"werner": args.werner}
    else:
        rho = load_density(args.state, args.tol)
        source = {"file": args.state}
    fr = purification_falsifier(rho, args.budget, args.seed, workers=args.workers)
    return {"command": "purify", **source, **fr.to_json()}


def cmd_verify(args) -> dict:
    results = run_checks(quick=not args.full, seed=args.seed)
    report = {
        "command": "verify",
        "mode": "full" if args.full else "quick",
        "passed": all(r.passed for r in results),
        "checks": [r.to_json() for r in results],
    }
    if not report["passed"]:
        raise VerificationFailed(report)
    return report


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in obj:
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(_flatten(report))
        return buf.getvalue()
    if report.get("command") == "verify":
        lines = [f"{'status':6}  {'module':11}  {'tag':30}  check"]
        for c in report["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            lines.append(f"{status:6}  {c['module']:11}  {c['tag']:30}  {c['name']}: {c['detail']}")
        lines.append("all checks passed" if report["passed"] else "VERIFICATION FAILED")
        return "\n".join(lines) + "\n"
    lines = []
    for key, value in _flatten(report):
        if isinstance(value, float):
            value = f"{value:.10g}"
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


GLOBAL_DEFAULTS = {"seed": 42, "tol": 1e-9, "trials": 10_000, "format": None, "out": None, "workers": 1}


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master RNG seed (default 42)")
    common.add_argument("--tol", type=_positive_float, default=argparse.SUPPRESS, help="numerical tolerance (default 1e-9)")
    common.add_argument("--trials", type=_positive_int, default=argparse.SUPPRESS, help="Monte Carlo trials (default 10000)")
    common.add_argument("--format", choices=["json", "csv", "pretty"], default=argparse.SUPPRESS,
                        help="report format (default json; pretty table for verify)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write the report to this file instead of stdout")
    common.add_argument("--workers", type=_positive_int, default=argparse.SUPPRESS,
                        help="threads for randomized searches (output does not depend on it)")

    p = argparse.ArgumentParser(prog="lqccsim", parents=[common],
                                description="Pure-state entanglement concentration under local operations.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("schmidt", parents=[common], help="Schmidt spectrum, rank, entropy and marginals")
    sp.add_argument("state")
    sp.set_defaults(func=cmd_schmidt)

    sp = sub.add_parser("concentrate", parents=[common], help="optimal filter and simulated postselection")
    sp.add_argument("state")
    sp.set_defaults(func=cmd_concentrate)

    sp = sub.add_parser("shared", parents=[common], help="decide whether two states share a concentrator")
    sp.add_argument("state1")
    sp.add_argument("state2")
    sp.add_argument("--side", choices=["alice", "bob"], default="alice")
    sp.add_argument("--falsify", type=_positive_int, default=0, metavar="N",
                    help="also run a randomized search over N Kraus pairs")
    sp.set_defaults(func=cmd_shared)

    sp = sub.add_parser("superdense", parents=[common], help="probabilistic superdense coding batch")
    sp.add_argument("--lambda2", type=float, required=True, help="smaller Schmidt coefficient, 0 < lambda2 <= 0.5")
    sp.set_defaults(func=cmd_superdense)

    sp = sub.add_parser("purify", parents=[common], help="search for a local purification of a mixed state")
    sp.add_argument("state", nargs="?")
    sp.add_argument("--werner", type=float, help="use the two-qubit Werner state with this p")
    sp.add_argument("--budget", type=_positive_int, default=100_000)
    sp.set_defaults(func=cmd_purify)

    sp = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--quick", action="store_true", help="reduced sample counts (default)")
    mode.add_argument("--full", action="store_true", help="full sample counts")
    sp.set_defaults(func=cmd_verify)
    return p


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # set here, not via set_defaults: the flag actions are shared with every subparser
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    fmt = args.format or ("pretty" if args.command == "verify" else "json")
    try:
        report = args.func(args)
    except VerificationFailed as exc:
        _emit(render(exc.report, fmt), args.out)
        return EXIT_VERIFY
    except (RankDeficiencyError, AnnihilationError) as exc:
        print(f"lqccsim: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InvalidInputError as exc:
        print(f"lqccsim: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LQCCError as exc:
        print(f"lqccsim: {exc}", file=sys.stderr)
        return 1
    _emit(render(report, fmt), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
