import json

import numpy as np
import pytest

from imaginarity import channels, io, states
from imaginarity.cli import main


@pytest.fixture
def yplus(tmp_path):
    path = tmp_path / "yplus.json"
    path.write_text(json.dumps({"bloch": {"t": 1, "nx": 0, "ny": 1, "nz": 0}}))
    return str(path)


@pytest.fixture
def mixed(tmp_path):
    path = tmp_path / "mixed.json"
    io.write_state(path, np.eye(2) / 2)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_measure_l1(capsys, yplus):
    code, out, _ = run(capsys, "measure", "--state", yplus, "--measure", "l1")
    assert code == 0
    doc = json.loads(out)
    assert doc["tool"] == "imaginarity" and doc["command"] == "measure"
    assert doc["result"]["value"] == pytest.approx(1.0)


@pytest.mark.parametrize("spec, value", [("trace", 1.0), ("r", 1.0), ("lp:2", 2**-0.5), ("robustness", 1.0), ("geometric", 0.5)])
def test_measure_specs(capsys, yplus, spec, value):
    code, out, _ = run(capsys, "measure", "--state", yplus, "--measure", spec)
    assert code == 0
    assert json.loads(out)["result"]["value"] == pytest.approx(value, abs=1e-6)


def test_measure_csv(capsys, yplus):
    code, out, _ = run(capsys, "measure", "--state", yplus, "--measure", "l1", "--format", "csv")
    assert code == 0 and out.startswith("measure,value,method\nl1,")


def test_unsupported_measure_and_dimension(capsys, mixed, tmp_path):
    assert run(capsys, "measure", "--state", mixed, "--measure", "geometric")[0] == 3
    assert run(capsys, "measure", "--state", mixed, "--measure", "bogus")[0] == 3
    big = tmp_path / "big.json"
    io.write_state(big, np.eye(5) / 5)
    assert run(capsys, "measure", "--state", str(big), "--measure", "pnorm:2")[0] == 3


def test_invalid_inputs(capsys, yplus, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 2, "matrix": [[1, 0], [0, 0], [0, 0], [1, 0]]}))
    code, _, err = run(capsys, "measure", "--state", str(bad), "--measure", "l1")
    assert code == 2 and "trace" in err
    assert run(capsys, "measure", "--state", str(tmp_path / "missing.json"), "--measure", "l1")[0] == 2
    assert run(capsys, "measure", "--state", yplus, "--measure", "l1", "--out", str(tmp_path / "no" / "x.json"))[0] == 2
    assert run(capsys, "measure", "--state", yplus, "--measure", "l1", "--tol", "bogus=1")[0] == 2


def test_tolerance_override_accepts_slightly_off_state(capsys, tmp_path):
    path = tmp_path / "off.json"
    io.write_state(path, np.diag([0.5, 0.5 + 1e-6]))
    assert run(capsys, "measure", "--state", str(path), "--measure", "l1")[0] == 2
    assert run(capsys, "measure", "--state", str(path), "--measure", "l1", "--tol", "trace=1e-5")[0] == 0


def test_channel_ampdamp_full(capsys, mixed, tmp_path):
    out_path = tmp_path / "out.json"
    code, out, _ = run(capsys, "channel", "--channel", "ampdamp:1.0", "--state", mixed, "--out", str(out_path))
    assert code == 0
    rho, _ = io.read_state(out_path)
    assert np.allclose(rho, np.diag([1, 0]), atol=1e-12)
    assert json.loads(out)["result"]["real_operation"] is True


def test_channel_reports_measure(capsys, yplus):
    code, out, _ = run(capsys, "channel", "--channel", "bitflip:0.5", "--state", yplus, "--measure", "l1")
    res = json.loads(out)["result"]
    assert code == 0 and res["before"] == pytest.approx(1.0) and res["after"] == pytest.approx(0.0, abs=1e-12)


def test_non_cptp_channel_file(capsys, yplus, tmp_path):
    path = tmp_path / "half.json"
    io.write_channel(path, channels.KrausChannel(2, 2, (np.eye(2) / 2,), "half"))
    code, _, err = run(capsys, "channel", "--channel", f"file:{path}", "--state", yplus)
    assert code == 4 and "trace preserving" in err


def test_counterexample_lp(capsys, yplus):
    code, out, _ = run(capsys, "counterexample", "lp", "--p", "2", "--d", "2", "--state", yplus)
    res = json.loads(out)["result"]
    assert code == 0
    assert res["before"] == pytest.approx(0.5)
    assert res["after"] == pytest.approx(2**-0.5)
    assert res["ratio"] == pytest.approx(2**0.5)


def test_counterexample_rejects_p_one_and_real_states(capsys, yplus, mixed):
    code, _, err = run(capsys, "counterexample", "lp", "--p", "1", "--state", yplus)
    assert code == 2 and "p = 1" in err
    assert run(capsys, "counterexample", "lp", "--p", "2", "--state", mixed)[0] == 2


def test_convex_roof_commands(capsys, yplus, mixed):
    code, out, _ = run(capsys, "convex-roof", "--state", yplus, "--restarts", "4")
    assert code == 0 and json.loads(out)["result"]["value"] == pytest.approx(1.0, abs=1e-8)
    code, out, _ = run(capsys, "convex-roof", "--state", mixed, "--pure-measure", "r", "--restarts", "4")
    assert code == 0 and json.loads(out)["result"]["value"] <= 1e-3


def test_scan_exit_codes(capsys):
    assert run(capsys, "scan", "channel-order", "--measure", "l1", "--channel", "bitflip", "--trials", "500")[0] == 0
    assert run(capsys, "scan", "same-order", "--a", "l1", "--b", "r", "--trials", "2000")[0] == 1
    assert run(capsys, "scan", "same-order", "--a", "l1", "--b", "r", "--tie-epsilon", "0")[0] == 2
    assert run(capsys, "scan", "channel-order", "--measure", "r", "--channel", "ampdamp", "--restrict", "nz>0")[0] == 2


def test_exploratory_scan_does_not_fail(capsys):
    code, out, _ = run(capsys, "scan", "derivative-signs", "--target", "ampdamp-r:nz", "--exploratory")
    assert code == 0
    assert json.loads(out)["result"]["exploratory"] is True


def test_scan_csv_with_witness(capsys, tmp_path):
    out = tmp_path / "scan.csv"
    code = main(["scan", "same-order", "--a", "l1", "--b", "r", "--trials", "2000", "--format", "csv", "--out", str(out)])
    assert code == 1
    assert out.read_text().startswith("scan_kind,")
    assert (tmp_path / "scan.csv.witness.json").exists()


def test_reports_are_byte_identical(tmp_path):
    argv = ["scan", "monotonicity", "--measure", "r", "--dims", "2,3", "--trials", "100", "--seed", "4"]
    main(argv + ["--out", str(tmp_path / "a.json")])
    main(argv + ["--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "imaginarity" in capsys.readouterr().out


def test_pure_state_file_geometric(capsys, tmp_path):
    path = tmp_path / "psi.json"
    io.write_state(path, psi=states.y_plus())
    code, out, _ = run(capsys, "measure", "--state", str(path), "--measure", "geometric")
    assert code == 0 and json.loads(out)["result"]["value"] == pytest.approx(0.5)
