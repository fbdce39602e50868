import json
import subprocess
import sys

import numpy as np
import pytest

from gqsp_power.cli import CSV_HEADER, main, read_hamiltonian
from gqsp_power.oracle import eig

# spectra of the bundled files, from closed-form 2x2 blocks
TOY1 = [-0.1 - np.sqrt(0.45), -0.1 + np.sqrt(0.45)]
TOY2 = [-0.05 - np.sqrt(0.6025), -0.3, 0.2, -0.05 + np.sqrt(0.6025)]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name, spectrum", [("toy1", TOY1), ("toy2", TOY2)])
def test_bundled_spectra(name, spectrum):
    h, _, _ = read_hamiltonian(f"bundled:{name}")
    np.testing.assert_allclose(eig(h).eigenvalues, spectrum, atol=1e-12)


def test_run_csv_row_count(capsys):
    code, out, err = run_cli(capsys, "run", "--method", "qpi", "--hamiltonian", "bundled:toy2", "--iterations", "10")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 11
    assert "final energy" in err and "iterations 10" in err


def test_run_qii_zero_shift(capsys):
    code, _, err = run_cli(capsys, "run", "--method", "qii", "--shift", "0", "--hamiltonian", "bundled:toy1")
    assert code == 1 and "nonzero shift" in err


def test_run_qfsm_interior_eigenvalue(capsys, tmp_path):
    out = tmp_path / "qfsm.csv"
    code, stdout, _ = run_cli(capsys, "run", "--method", "qfsm", "--hamiltonian", "bundled:toy2",
                              "--shift", repr(TOY2[1]), "--iterations", "50", "--output", str(out))
    assert code == 0 and "final energy" in stdout
    last = out.read_text().strip().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(TOY2[1], abs=1e-6)


def test_run_is_deterministic(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run_cli(capsys, "run", "--method", "qpl", "--hamiltonian", "bundled:toy2", "--iterations", "3",
                       "--lanczos-order", "2", "--seed", "7", "--format", "json", "--output", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    assert doc["seed"] == 7 and len(doc["records"]) == 3 and doc["qpl_fit"]["converged"]
    assert len(doc["hamiltonian"]["sha256"]) == 64


def test_run_initial_state_forms(capsys, tmp_path):
    amps = tmp_path / "amps.json"
    amps.write_text(json.dumps([1, 0, [0, 1], 0]))
    assert run_cli(capsys, "run", "--hamiltonian", "bundled:toy2", "--initial-state", f"@{amps}")[0] == 0
    assert run_cli(capsys, "run", "--hamiltonian", "bundled:toy2", "--initial-state", "01")[0] == 0
    assert run_cli(capsys, "run", "--hamiltonian", "bundled:toy2", "--initial-state", "011")[0] == 1
    amps.write_text("[1, 0")
    assert run_cli(capsys, "run", "--hamiltonian", "bundled:toy2", "--initial-state", f"@{amps}")[0] == 1


def test_run_bad_inputs(capsys, tmp_path):
    bad = tmp_path / "bad.ham"
    bad.write_text("0.5 ZZ\n0.1 ZQ\n")
    code, _, err = run_cli(capsys, "run", "--hamiltonian", str(bad))
    assert code == 1 and "line 2" in err
    assert run_cli(capsys, "run", "--hamiltonian", str(tmp_path / "missing.ham"))[0] == 1
    assert run_cli(capsys, "run", "--hamiltonian", "bundled:nothing")[0] == 1
    assert run_cli(capsys, "run", "--hamiltonian", "bundled:toy1", "--fold-constant", "x", "--method", "qfsm",
                   "--shift", "0.1")[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["run", "--method", "bogus"])
    assert info.value.code == 1


def test_manifest_sweep(capsys, tmp_path):
    manifests = []
    for i, variant in enumerate(["qpi", "qfsm"]):
        m = tmp_path / f"m{i}.json"
        m.write_text(json.dumps({
            "config": {"variant": variant, "iterations": 3, "shift": -0.3},
            "hamiltonian": "bundled:toy2",
            "output": str(tmp_path / f"o{i}.csv"),
        }))
        manifests.append(str(m))
    assert run_cli(capsys, "run", "--manifest", *manifests, "--jobs", "2")[0] == 0
    serial = tmp_path / "serial.csv"
    run_cli(capsys, "run", "--method", "qfsm", "--shift", "-0.3", "--iterations", "3",
            "--hamiltonian", "bundled:toy2", "--output", str(serial))
    assert (tmp_path / "o1.csv").read_bytes() == serial.read_bytes()
    assert len((tmp_path / "o0.csv").read_text().splitlines()) == 4


def test_angles_half_one_plus_z(capsys):
    code, out, _ = run_cli(capsys, "angles", "--polynomial", "[[0.5, 0], [0.5, 0]]")
    doc = json.loads(out)
    assert code == 0 and doc["max_deviation"] <= 1e-12 and doc["roundtrip_residual"] <= 1e-8


def test_angles_qii_degree_50(capsys, tmp_path):
    out = tmp_path / "qii.json"
    code, _, _ = run_cli(capsys, "angles", "--method", "qii", "--scaled", "--shift", "-1.5", "--truncation", "50",
                         "--output", str(out))
    doc = json.loads(out.read_text())
    assert code == 0 and len(doc["angles"]["thetas"]) == 51 and len(doc["angles"]["phis"]) == 51


def test_angles_deterministic(capsys, tmp_path):
    rng = np.random.default_rng(11)
    c = rng.normal(size=10) + 1j * rng.normal(size=10)
    poly = tmp_path / "p.json"
    poly.write_text(json.dumps([[x.real, x.imag] for x in c]))
    outs = [tmp_path / "x.json", tmp_path / "y.json"]
    for o in outs:
        assert run_cli(capsys, "angles", "--polynomial", f"@{poly}", "--output", str(o))[0] == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_angles_method_flags(capsys):
    for argv in (["--method", "qpi", "--step-degree", "3"],
                 ["--method", "qpl", "--coefficients", "[0.2, -0.1]"],
                 ["--method", "qfsm", "--shift", "-0.3", "--hamiltonian", "bundled:toy2"],
                 ["--method", "qii", "--shift", "-1.5", "--hamiltonian", "bundled:toy2"]):
        assert run_cli(capsys, "angles", *argv)[0] == 0, argv
    assert run_cli(capsys, "angles", "--method", "qii", "--shift", "-1.5")[0] == 1
    assert run_cli(capsys, "angles")[0] == 1
    assert run_cli(capsys, "angles", "--polynomial", "[1, ")[0] == 1


def test_numerical_failures_map_to_exit_codes(capsys, monkeypatch):
    import gqsp_power.cli as cli
    from gqsp_power.errors import CompletionError, ZeroProbabilityError

    def breach(*_a, **_k):
        raise CompletionError("max deviation 1e-3 > 1e-8")

    def collapse(*_a, **_k):
        raise ZeroProbabilityError("post-selection probability 0")

    monkeypatch.setattr(cli, "find_angles", breach)
    code, _, err = run_cli(capsys, "angles", "--polynomial", "[0.5, 0.25]")
    assert code == 2 and "numerical failure" in err
    monkeypatch.setattr(cli, "run_method", collapse)
    code, out, err = run_cli(capsys, "run", "--hamiltonian", "bundled:toy1")
    assert code == 3 and out == ""


@pytest.mark.parametrize("name", ["toy1", "toy2"])
def test_verify_bundled(capsys, name):
    code, out, _ = run_cli(capsys, "verify", "--hamiltonian", f"bundled:{name}")
    assert code == 0 and "FAIL" not in out


def test_verify_angle_file(capsys, tmp_path):
    a = tmp_path / "a.json"
    run_cli(capsys, "angles", "--method", "qii", "--scaled", "--shift", "-1.5", "--truncation", "50",
            "--output", str(a))
    code, out, _ = run_cli(capsys, "verify", "--hamiltonian", "bundled:toy2", "--angles", str(a))
    assert code == 0 and "angle file: oracle fidelity" in out


def test_verify_corrupted_angles(capsys, tmp_path):
    a = tmp_path / "a.json"
    a.write_text('{"thetas": [0.1, 0.2], "phis": [0.0]')
    code, _, err = run_cli(capsys, "verify", "--hamiltonian", "bundled:toy1", "--angles", str(a))
    assert code == 1 and "angle file" in err
    a.write_text('{"thetas": [0.1, 0.2], "phis": [0.0], "lambda0": 0.0}')
    assert run_cli(capsys, "verify", "--hamiltonian", "bundled:toy1", "--angles", str(a))[0] == 1


def test_verify_above_cap(capsys, tmp_path):
    big = tmp_path / "big.ham"
    big.write_text("1.0 " + "Z" * 9 + "\n0.5 " + "X" * 9 + "\n")
    code, _, err = run_cli(capsys, "verify", "--hamiltonian", str(big))
    assert code == 1 and "cap" in err


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "gqsp_power", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.strip() == "0.1.0"
