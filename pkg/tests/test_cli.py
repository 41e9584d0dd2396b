import json

import numpy as np
import pytest

from lqccsim import cli
from lqccsim.states import max_entangled, random_pure_state, state_from_schmidt, werner_state
from lqccsim.verify import CHECKS, Check, run_checks


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "s75": _write(tmp_path / "s75.json", state_from_schmidt([0.75, 0.25]).to_json()),
        "s60": _write(tmp_path / "s60.json", state_from_schmidt([0.6, 0.4]).to_json()),
        "bell": _write(tmp_path / "bell.json", max_entangled(2).to_json()),
        "product": _write(tmp_path / "product.json", state_from_schmidt([1.0, 0.0]).to_json()),
        "werner": _write(tmp_path / "werner.json", werner_state(0.5).to_json()),
        "rand": _write(tmp_path / "rand.json", random_pure_state(3, 3, 1).to_json()),
        "unnorm": _write(tmp_path / "unnorm.json", {"dimA": 1, "dimB": 2, "re": [[1, 1]], "im": [[0, 0]]}),
        "garbage": _write(tmp_path / "garbage.json", {"dimA": 2}),
    }


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_schmidt(capsys, files):
    code, out, _ = run(capsys, "schmidt", files["s75"])
    assert code == 0
    data = json.loads(out)
    assert np.allclose(data["lambda"], [0.75, 0.25], atol=1e-12)
    assert data["schmidtRank"] == 2 and not data["maximallyEntangled"]


def test_concentrate(capsys, files):
    code, out, _ = run(capsys, "concentrate", files["s75"], "--trials", "2000", "--seed", "7")
    assert code == 0
    data = json.loads(out)
    assert abs(data["gammaMax"] - 0.5) <= 1e-12
    assert abs(data["dilationProbability"] - 0.5) <= 1e-10
    assert abs(data["monteCarloFrequency"] - 0.5) <= 5 * np.sqrt(0.25 / 2000)
    assert data["seed"] == 7 and data["outputMaximallyEntangled"]


def test_global_flags_before_subcommand(capsys, files):
    code, out, _ = run(capsys, "--seed", "9", "--trials", "10", "concentrate", files["s75"])
    assert code == 0
    data = json.loads(out)
    assert data["seed"] == 9 and data["trials"] == 10


def test_shared(capsys, files):
    code, out, _ = run(capsys, "shared", files["s75"], files["s60"], "--falsify", "2000")
    assert code == 0
    data = json.loads(out)
    assert data["decision"] == "Impossible"
    assert data["falsifier"]["bestScore"] < 0.9999
    code, out, _ = run(capsys, "shared", files["bell"], files["bell"], "--side", "bob")
    assert json.loads(out)["decision"] == "Concentratable"


def test_superdense(capsys):
    code, out, _ = run(capsys, "superdense", "--lambda2", "0.25", "--trials", "1000")
    assert code == 0
    data = json.loads(out)
    assert data["errorsGivenSuccess"] == 0 and abs(data["expectedRate"] - 0.5) <= 1e-12


def test_purify(capsys, files):
    code, out, _ = run(capsys, "purify", "--werner", "0.5", "--budget", "2000")
    assert code == 0
    data = json.loads(out)
    assert 0.625 - 1e-12 <= data["bestScore"] < 0.999
    code, out, _ = run(capsys, "purify", files["werner"], "--budget", "500")
    assert code == 0 and json.loads(out)["rank"] == 4


def test_verify_quick(capsys):
    code, out, _ = run(capsys, "verify", "--quick")
    assert code == 0
    assert "all checks passed" in out


def test_verify_failure_exit_code(capsys, monkeypatch):
    broken = CHECKS + [Check("always fails", "numerics", "test", lambda quick, seed: (False, "forced"))]
    monkeypatch.setattr(cli, "run_checks", lambda quick, seed: run_checks(quick, seed, broken))
    code, out, _ = run(capsys, "verify", "--quick", "--format", "json")
    assert code == 4
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["schmidt", "missing.json"],
        ["schmidt", "{garbage}"],
        ["schmidt", "{unnorm}"],
        ["shared", "{s75}", "{rand}"],
        ["purify"],
        ["purify", "{bell}", "--budget", "10"],
        ["superdense", "--lambda2", "0.7"],
    ],
)
def test_input_errors_exit_2(capsys, files, argv):
    argv = [a.format(**files) if a.startswith("{") else a for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "input error" in err


def test_domain_errors_exit_3(capsys, files):
    code, _, err = run(capsys, "concentrate", files["product"])
    assert code == 3 and "domain error" in err
    code, _, _ = run(capsys, "shared", files["product"], files["bell"])
    assert code == 3


def test_bad_flag_values_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["superdense", "--lambda2", "0.3", "--trials", "0"])
    assert exc.value.code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["concentrate", "{rand}", "--trials", "500"],
        ["shared", "{s75}", "{s60}", "--falsify", "5000", "--workers", "2"],
        ["superdense", "--lambda2", "0.15", "--trials", "500"],
        ["purify", "--werner", "0.6", "--budget", "1000"],
        ["verify", "--quick", "--format", "json"],
    ],
)
def test_output_is_byte_identical(capsys, files, argv):
    argv = [a.format(**files) if a.startswith("{") else a for a in argv]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_workers_do_not_change_output(capsys, files):
    _, one, _ = run(capsys, "shared", files["s75"], files["s60"], "--falsify", "9000")
    _, four, _ = run(capsys, "shared", files["s75"], files["s60"], "--falsify", "9000", "--workers", "4")
    assert one == four


def test_out_file_and_csv(capsys, tmp_path, files):
    target = tmp_path / "report.csv"
    code, out, _ = run(capsys, "schmidt", files["s75"], "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    lines = target.read_text().splitlines()
    assert lines[0] == "key,value"
    assert any(line.startswith("lambda[0],0.75") for line in lines)


def test_pretty_format(capsys, files):
    code, out, _ = run(capsys, "schmidt", files["bell"], "--format", "pretty")
    assert code == 0 and "maximallyEntangled: True" in out
