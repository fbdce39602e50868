"""Command-line front end.

Subcommands:

    run     iterate one of the power methods and write CSV or JSON records
    angles  complete and carve a polynomial, write the angle sequence
    verify  compare the simulator against the dense oracle on a Hamiltonian

Exit codes: 0 success, 1 bad input, 2 numerical failure, 3 zero-probability
post-selection.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, oracle
from .block_encoding import build_encoding, chebyshev_block, top_left
from .errors import (
    IllConditionedError,
    NumericalError,
    ParseError,
    ResourceError,
    ZeroProbabilityError,
)
from .gqsp import AngleSequence, assemble_and_run, auto_beta, find_angles, reconstruct_points
from .methods import VARIANTS, MethodConfig, run_method
from .pauli import PauliSum, l1_norm, parse_pauli_sum, shift_identity, to_dense
from .polynomials import (
    MonomialPoly,
    UnitCirclePoly,
    chebyshev_to_circle,
    monomial_to_chebyshev,
    partition_rescale,
    qfsm_poly,
    qii_poly,
    qpi_poly,
    qpl_poly,
)
from .statevector import StateVector, fidelity, init_basis_state

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_ZERO_PROBABILITY = 0, 1, 2, 3
CSV_HEADER = ["iteration", "energy", "residual", "step_probability", "cumulative_probability"]
BUNDLED_PREFIX = "bundled:"

log = logging.getLogger("gqsp_power")


class InputError(ValueError):
    """Bad command-line input that is not tied to a file line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ inputs


def read_hamiltonian(path: str) -> tuple[PauliSum, str, str]:
    """Parse a Hamiltonian file; returns (h, text, sha256). ``bundled:NAME``
    reads one of the packaged toy files."""
    if path.startswith(BUNDLED_PREFIX):
        name = path[len(BUNDLED_PREFIX):]
        try:
            text = resources.files("gqsp_power").joinpath("data", f"{name}.ham").read_text()
        except FileNotFoundError as exc:
            raise InputError(f"no bundled Hamiltonian named {name!r}") from exc
    else:
        text = Path(path).read_text()
    h = parse_pauli_sum(text)
    return h, text, hashlib.sha256(text.encode()).hexdigest()


def _complex_list(data) -> np.ndarray:
    out = []
    for entry in data:
        if isinstance(entry, (int, float)):
            out.append(complex(entry))
        elif isinstance(entry, list) and len(entry) == 2:
            out.append(complex(float(entry[0]), float(entry[1])))
        else:
            raise InputError(f"expected a number or [re, im] pair, got {entry!r}")
    return np.array(out, dtype=complex)


def read_initial_state(source: str | None, num_qubits: int) -> StateVector:
    """Basis bitstring (qubit n-1 first), ``uniform``, or ``@file`` with a JSON
    amplitude array; amplitude files are normalized on load."""
    if source is None or source == "uniform":
        dim = 2**num_qubits
        return StateVector(np.full(dim, 1 / np.sqrt(dim), dtype=complex), num_qubits)
    if source.startswith("@"):
        try:
            data = json.loads(Path(source[1:]).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"amplitude file is not valid JSON: {exc.msg}", exc.lineno) from exc
        amps = _complex_list(data)
        if len(amps) != 2**num_qubits:
            raise InputError(f"amplitude file has {len(amps)} entries, expected {2**num_qubits}")
        if np.linalg.norm(amps) == 0:
            raise InputError("amplitude file describes the zero vector")
        return StateVector(amps / np.linalg.norm(amps), num_qubits)
    return init_basis_state(num_qubits, source)


def _float_or(value: str, keyword: str):
    if value is None or value == keyword:
        return None
    try:
        return float(value)
    except ValueError as exc:
        raise InputError(f"expected a number or {keyword!r}, got {value!r}") from exc


# ---------------------------------------------------------------------- run


def _config_from_args(args) -> MethodConfig:
    return MethodConfig(
        variant=args.method,
        iterations=args.iterations,
        step_degree=args.step_degree,
        lanczos_order=args.lanczos_order,
        shift=args.shift,
        truncation=args.truncation,
        fold_constant=_float_or(args.fold_constant, "auto"),
        completion=args.completion,
        reference_energy=_float_or(args.reference_energy, "oracle"),
        encoding=args.encoding,
        composed=args.composed,
        seed=args.seed,
    )


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def render_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.iteration, _fmt(r.energy), _fmt(r.residual), _fmt(r.step_probability),
                    _fmt(r.cumulative_probability)])
    return buf.getvalue()


def execute_manifest(manifest: dict) -> dict:
    """Run one manifest; returns {"text", "summary", "output"}. Pure apart from reading inputs."""
    cfg = MethodConfig(**manifest["config"])
    h, _, digest = read_hamiltonian(manifest["hamiltonian"])
    psi0 = read_initial_state(manifest.get("initial_state"), h.num_qubits)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = run_method(cfg, h, psi0)
    for w in caught:
        log.warning("%s", w.message)
    fmt = manifest.get("format", "csv")
    if fmt == "csv":
        text = render_csv(result.records)
    else:
        envelope = {
            "version": __version__,
            "config": cfg.to_dict(),
            "hamiltonian": {"path": manifest["hamiltonian"], "sha256": digest},
            "initial_state": manifest.get("initial_state") or "uniform",
            "seed": cfg.seed,
            "reference_energy": result.reference_energy,
            "qpl_fit": result.fit.to_dict() if result.fit else None,
            "records": [r.to_dict() for r in result.records],
        }
        text = json.dumps(envelope, indent=2) + "\n"
    last = result.records[-1]
    summary = (f"{cfg.variant}: final energy {last.energy:.12g}, cumulative probability "
               f"{last.cumulative_probability:.6g}, iterations {last.iteration}")
    return {"text": text, "summary": summary, "output": manifest.get("output")}


def _emit(outcome: dict) -> None:
    if outcome["output"]:
        Path(outcome["output"]).write_text(outcome["text"])
        print(outcome["summary"])
    else:
        sys.stdout.write(outcome["text"])
        print(outcome["summary"], file=sys.stderr)


def cmd_run(args) -> int:
    if args.manifest:
        manifests = [json.loads(Path(p).read_text()) for p in args.manifest]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                outcomes = list(pool.map(execute_manifest, manifests))
        else:
            outcomes = [execute_manifest(m) for m in manifests]
        for o in outcomes:
            _emit(o)
        return EXIT_OK
    if not args.hamiltonian:
        raise InputError("--hamiltonian is required unless --manifest is given")
    manifest = {
        "config": _config_from_args(args).to_dict(),
        "hamiltonian": args.hamiltonian,
        "initial_state": args.initial_state,
        "format": args.format,
        "output": args.output,
    }
    _emit(execute_manifest(manifest))
    return EXIT_OK


# ------------------------------------------------------------------- angles


def _method_polynomial(args) -> MonomialPoly:
    h = read_hamiltonian(args.hamiltonian)[0] if args.hamiltonian else None
    lam = l1_norm(h) if h is not None else None

    def scaled(value, name):
        if value is None:
            raise InputError(f"--{name} is required for --method {args.method}")
        if args.scaled:
            return value
        if lam is None:
            raise InputError("pass --hamiltonian to scale energies, or --scaled for values in units of lambda")
        return value / lam

    if args.method == "qpi":
        return qpi_poly(args.step_degree)
    if args.method == "qpl":
        coeffs = _complex_list(json.loads(args.coefficients or "[]"))
        return qpl_poly(args.step_degree, coeffs)
    if args.method == "qii":
        if args.shift == 0:
            raise InputError("qii shift must be nonzero")
        return qii_poly(1, scaled(args.shift, "shift"), args.truncation)
    if args.shift is None:
        raise InputError("--shift is required for --method qfsm")
    c = 1.0
    if args.fold_constant not in (None, "auto"):
        c = float(args.fold_constant)
        if not args.scaled:
            if h is None:
                raise InputError("pass --hamiltonian to scale the fold constant, or --scaled")
            c *= l1_norm(shift_identity(h, args.shift)) ** 2
    return qfsm_poly(1, c)


def cmd_angles(args) -> int:
    if args.polynomial:
        source = args.polynomial
        text = Path(source[1:]).read_text() if source.startswith("@") else source
        try:
            circle = UnitCirclePoly.from_json(text)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise InputError(f"cannot read polynomial: {exc}") from exc
    elif args.method:
        circle = chebyshev_to_circle(monomial_to_chebyshev(_method_polynomial(args)))
    else:
        raise InputError("give --polynomial or --method")
    bounded, info = partition_rescale(circle, args.margin)
    cap = None
    try:
        rep = find_angles(bounded, args.completion, alpha=info.alpha)
    except IllConditionedError:
        if args.no_capitalize:
            raise
        cap = (0.25, auto_beta(bounded, 0.25))
        rep = find_angles(bounded, args.completion, alpha=info.alpha, capitalization=cap)
    out = {
        "angles": rep.angles.to_dict(),
        "prime": rep.prime.to_dict() if rep.prime else None,
        "completion": rep.completion.method,
        "max_deviation": rep.completion.max_deviation,
        "grid_size": rep.completion.grid_size,
        "separation": rep.completion.separation,
        "roundtrip_residual": rep.roundtrip,
        "grid_max": info.grid_max,
    }
    text = json.dumps(out, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"degree {rep.angles.degree}: max deviation {rep.completion.max_deviation:.3e}, "
          f"round-trip residual {rep.roundtrip:.3e}" + (", capitalized" if cap else ""),
          file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------- verify


def _check(rows: list, name: str, value: float, tol: float) -> None:
    value = max(0.0, value)  # 1 - fidelity can round to -2e-16
    ok = value <= tol
    rows.append((name, value, tol, ok))
    print(f"{'PASS' if ok else 'FAIL'}  {name:<44s} {value:.3e}  (<= {tol:.0e})")


def _load_angles(path: str) -> tuple[AngleSequence, AngleSequence | None]:
    try:
        data = json.loads(Path(path).read_text())
        if "angles" in data:
            prime = AngleSequence.from_dict(data["prime"]) if data.get("prime") else None
            return AngleSequence.from_dict(data["angles"]), prime
        return AngleSequence.from_dict(data), None
    except json.JSONDecodeError as exc:
        raise ParseError(f"angle file is not valid JSON: {exc.msg}", exc.lineno) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"angle file is malformed: {exc}", 0) from exc


def _angles_polynomial(seq: AngleSequence) -> np.ndarray:
    """Circle coefficients of the (0, 0) entry of an angle sequence."""
    m = 4 * (seq.degree + 1)
    z = np.exp(2j * np.pi * np.arange(m) / m)
    vals = reconstruct_points(seq, z)[:, 0, 0]
    return (np.fft.fft(vals) / m)[: seq.degree + 1]


def cmd_verify(args) -> int:
    h, _, digest = read_hamiltonian(args.hamiltonian)
    needed = build_encoding(h).num_qubits + 2
    if needed > args.max_qubits:
        raise ResourceError(
            f"verification needs {needed} qubits, above the dense cap of {args.max_qubits}"
        )
    angles = _load_angles(args.angles) if args.angles else None
    rng = np.random.default_rng(args.seed)
    lam = l1_norm(h)
    spec = oracle.eig(h, cap=args.max_qubits)
    print(f"hamiltonian {args.hamiltonian} sha256 {digest}")
    print(f"qubits {h.num_qubits}, terms {len(h.terms)}, lambda {lam:.12g}")
    print("spectrum " + " ".join(f"{e:.12g}" for e in spec.eigenvalues))
    rows: list = []
    dense = to_dense(h)
    _check(rows, "eigendecomposition reconstruction", float(np.max(np.abs(spec.reconstruct() - dense))), 1e-10)

    hs = dense / lam
    for flavor in ("lcu", "explicit"):
        enc = build_encoding(h, flavor)
        u = enc.dense()
        _check(rows, f"{flavor}: unitarity", float(np.max(np.abs(u.conj().T @ u - np.eye(len(u))))), 1e-10)
        _check(rows, f"{flavor}: top-left block", float(np.max(np.abs(top_left(enc, u) - hs))), 1e-10)
        worst = 0.0
        t_prev, t_cur = np.eye(len(hs)), hs
        for k in range(2, 9):
            t_prev, t_cur = t_cur, 2 * hs @ t_cur - t_prev
            worst = max(worst, float(np.max(np.abs(chebyshev_block(enc, k) - t_cur))))
        _check(rows, f"{flavor}: Chebyshev blocks T_2..T_8", worst, 1e-9)

    amp = rng.normal(size=2**h.num_qubits) + 1j * rng.normal(size=2**h.num_qubits)
    psi = StateVector(amp / np.linalg.norm(amp), h.num_qubits)
    cheb = rng.normal(size=7) + 1j * rng.normal(size=7)
    bounded, info = partition_rescale(chebyshev_to_circle(cheb))
    rep = find_angles(bounded, alpha=info.alpha)
    run = assemble_and_run(rep.angles, build_encoding(h), psi)
    target = oracle.apply_chebyshev_dense(cheb, h, psi)
    _check(rows, "end-to-end degree-6 fidelity", 1 - fidelity(run.output_state, target), 1e-8)
    expected = target.norm() ** 2 / info.alpha**2
    _check(rows, "end-to-end success probability", abs(run.success_probability - expected), 1e-8)

    for variant, kw in _method_checks(spec, lam):
        cfg = MethodConfig(variant=variant, iterations=5, **kw)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_method(cfg, h, psi, keep_states=True)
        traj = _oracle_trajectory(variant, h, psi, cfg, res)
        worst = max(1 - fidelity(s, t) for s, t in zip(res.states, traj))
        _check(rows, f"{variant}: 5-iteration oracle fidelity", worst, 1e-6)

    if angles is not None:
        seq, prime = angles
        circle = _angles_polynomial(seq)
        if seq.capitalization:
            cap = seq.capitalization
            prime_c = np.zeros(cap["degree"] + 1, dtype=complex)
            prime_c[[0, -1]] += cap["gamma"]
            circle = cap["beta"] * (circle + prime_c)
            scale = seq.alpha * 2 * cap["beta"]
        else:
            scale = seq.alpha
        out = assemble_and_run(seq, build_encoding(h), psi, prime=prime)
        target = oracle.apply_chebyshev_dense(circle * seq.alpha, h, psi)
        _check(rows, "angle file: oracle fidelity", 1 - fidelity(out.output_state, target), 1e-8)
        _check(rows, "angle file: success probability",
               abs(out.success_probability - target.norm() ** 2 / scale**2), 1e-8)

    failed = sum(1 for r in rows if not r[3])
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def _method_checks(spec: oracle.DenseSpectrum, lam: float):
    e = spec.eigenvalues
    interior = float(e[len(e) // 2]) if len(e) > 2 else float(e[0])
    yield "qpi", {"step_degree": 2}
    yield "qii", {"shift": -1.5 * lam, "truncation": 20}
    yield "qfsm", {"shift": interior}


def _oracle_trajectory(variant, h, psi, cfg, res):
    n = cfg.iterations
    if variant == "qpi":
        return [v for v, _ in oracle.power_iteration_dense(h, psi, n, power=cfg.step_degree)[1:]]
    if variant == "qfsm":
        lam_s = l1_norm(shift_identity(h, cfg.shift))
        return [v for v, _ in oracle.folded_iteration_dense(h, cfg.shift, 1 / lam_s**2, psi, n)[1:]]
    lam = l1_norm(h)
    poly = qii_poly(1, cfg.shift / lam, cfg.truncation)
    out, v = [], psi
    for _ in range(n):
        v = oracle.apply_poly_dense(poly, h, v)
        v = StateVector(v.amplitudes / v.norm(), h.num_qubits)
        out.append(v)
    return out


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gqsp-power", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a power method")
    r.add_argument("--method", choices=VARIANTS, default="qpi")
    r.add_argument("--hamiltonian")
    r.add_argument("--iterations", type=int, default=10)
    r.add_argument("--step-degree", type=int, default=1)
    r.add_argument("--lanczos-order", type=int, default=1)
    r.add_argument("--shift", type=float)
    r.add_argument("--truncation", type=int, default=10)
    r.add_argument("--fold-constant", default="auto", help="C in 1/energy^2, or 'auto'")
    r.add_argument("--completion", choices=("prony", "fourier"), default="prony")
    r.add_argument("--encoding", choices=("lcu", "explicit"), default="lcu")
    r.add_argument("--composed", action="store_true",
                   help="apply the composed polynomial to the initial state each iteration")
    r.add_argument("--initial-state", help="bitstring (qubit n-1 first), 'uniform', or @amplitudes.json")
    r.add_argument("--reference-energy", default="oracle", help="energy or 'oracle'")
    r.add_argument("--output")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--manifest", nargs="+", help="JSON run manifests (config, hamiltonian, ...)")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("angles", help="find GQSP angles for a polynomial")
    a.add_argument("--polynomial", help="JSON array of circle coefficients, or @file")
    a.add_argument("--method", choices=VARIANTS)
    a.add_argument("--hamiltonian", help="used to scale --shift / --fold-constant by lambda")
    a.add_argument("--scaled", action="store_true", help="--shift / --fold-constant already in units of lambda")
    a.add_argument("--step-degree", type=int, default=1)
    a.add_argument("--coefficients", help="QPL prefactor coefficients as a JSON array")
    a.add_argument("--shift", type=float)
    a.add_argument("--truncation", type=int, default=10)
    a.add_argument("--fold-constant", default="auto")
    a.add_argument("--completion", choices=("prony", "fourier"), default="prony")
    a.add_argument("--margin", type=float, default=1e-6)
    a.add_argument("--no-capitalize", action="store_true")
    a.add_argument("--output")
    a.set_defaults(func=cmd_angles)

    v = sub.add_parser("verify", help="check the simulator against the dense oracle")
    v.add_argument("--hamiltonian", required=True)
    v.add_argument("--angles", help="angle file from the angles subcommand to verify as well")
    v.add_argument("--max-qubits", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ZeroProbabilityError as exc:
        print(f"error: zero-probability post-selection: {exc}", file=sys.stderr)
        return EXIT_ZERO_PROBABILITY
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, ResourceError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
