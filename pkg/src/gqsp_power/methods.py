"""Iterative eigensolvers driven by GQSP: QPI, QPL, QII and QFSM.

Each iteration turns a method polynomial in x = H / lambda into Chebyshev
coefficients, rescales it below 1 on the unit circle, finds angles, runs the
circuit on the current state and renormalizes. Step probabilities multiply
into the cumulative success probability of the whole run.
"""

from __future__ import annotations

import dataclasses
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import oracle
from .block_encoding import BlockEncoding, build_encoding
from .errors import IllConditionedError, ResourceError
from .gqsp import AngleSequence, assemble_and_run, auto_beta, find_angles
from .pauli import PauliSum, l1_norm, shift_identity
from .polynomials import (
    DEFAULT_MARGIN,
    MonomialPoly,
    chebyshev_to_circle,
    monomial_to_chebyshev,
    partition_rescale,
    qfsm_poly,
    qii_poly,
    qpi_poly,
    qpl_poly,
)
from .statevector import StateVector, expectation_pauli_sum

log = logging.getLogger(__name__)

VARIANTS = ("qpi", "qpl", "qii", "qfsm")
CAPITALIZATION_GAMMA = 0.25
# 200 k evaluations per start leaves k >= 2 short of the optimum in 2k + 1 parameters
QPL_BUDGET_PER_ORDER = 1000


@dataclass
class MethodConfig:
    variant: str
    iterations: int = 10
    step_degree: int = 1
    lanczos_order: int = 1
    shift: float | None = None
    truncation: int = 10
    fold_constant: float | None = None
    completion: str = "prony"
    completion_tol: float = 1e-8
    carving_tol: float = 1e-9
    fidelity_tol: float = 1e-8
    reference_energy: float | None = None
    encoding: str = "lcu"
    composed: bool = False
    inverse_power: int = 1
    seed: int = 0
    qpl_evaluation: str = "dense"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown method {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.step_degree < 1:
            raise ValueError("step degree must be >= 1")
        if self.variant == "qpl" and self.lanczos_order < 1:
            raise ValueError("lanczos order must be >= 1")
        if self.variant == "qii":
            if self.truncation < 1:
                raise ValueError("truncation must be >= 1 for qii")
            if self.shift is None or self.shift == 0:
                raise ValueError("qii needs a nonzero shift")
            if self.inverse_power < 1:
                raise ValueError("inverse power must be >= 1")
        if self.variant == "qfsm":
            if self.shift is None:
                raise ValueError("qfsm needs a shift")
            if self.fold_constant is not None and self.fold_constant <= 0:
                raise ValueError("fold constant must be positive")
        if self.completion not in ("prony", "fourier"):
            raise ValueError(f"unknown completion {self.completion!r}")
        if self.qpl_evaluation not in ("dense", "pipeline"):
            raise ValueError("qpl evaluation must be 'dense' or 'pipeline'")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ConvergenceRecord:
    iteration: int
    energy: float
    residual: float | None
    step_probability: float
    cumulative_probability: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class QplFit:
    coefficients: np.ndarray
    initial_energy: float
    optimized_energy: float
    optimizer_evaluations: int
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients],
            "initial_energy": self.initial_energy,
            "optimized_energy": self.optimized_energy,
            "optimizer_evaluations": self.optimizer_evaluations,
            "converged": self.converged,
        }


@dataclass
class RunResult:
    config: MethodConfig
    records: list
    final_state: StateVector
    states: list = field(default_factory=list)
    fit: QplFit | None = None
    reference_energy: float | None = None


def energy(s: StateVector, h: PauliSum) -> float:
    return expectation_pauli_sum(s, h)


class PolynomialRunner:
    """Angle finding (cached per polynomial) plus circuit execution on one encoding."""

    def __init__(self, h: PauliSum, cfg: MethodConfig):
        self.h = h
        self.cfg = cfg
        self.enc: BlockEncoding = build_encoding(h, cfg.encoding)
        self._cache: dict = {}

    def angles(self, p: MonomialPoly) -> tuple[AngleSequence, AngleSequence | None]:
        key = tuple(np.round(p.coefficients, 15))
        if key not in self._cache:
            circle = chebyshev_to_circle(monomial_to_chebyshev(p))
            bounded, info = partition_rescale(circle, DEFAULT_MARGIN)
            kw = {"tol": self.cfg.completion_tol}
            try:
                rep = find_angles(bounded, self.cfg.completion, alpha=info.alpha, **kw)
            except IllConditionedError:
                beta = auto_beta(bounded, CAPITALIZATION_GAMMA)
                log.info("completion ill-conditioned; capitalizing with gamma=%g beta=%g",
                         CAPITALIZATION_GAMMA, beta)
                rep = find_angles(bounded, self.cfg.completion, alpha=info.alpha,
                                  capitalization=(CAPITALIZATION_GAMMA, beta), **kw)
            self._cache[key] = (rep.angles, rep.prime)
        return self._cache[key]

    def apply(self, p: MonomialPoly, s: StateVector) -> tuple[StateVector, float]:
        seq, prime = self.angles(p)
        run = assemble_and_run(seq, self.enc, s, prime=prime)
        return run.output_state, run.success_probability


def _reference(cfg: MethodConfig, h: PauliSum) -> float | None:
    if cfg.reference_energy is not None:
        return float(cfg.reference_energy)
    try:
        if cfg.variant in ("qpi", "qpl"):
            return oracle.dominant_energy(h)
        return oracle.nearest_energy(h, float(cfg.shift))
    except ResourceError:
        return None


def _iterate(cfg: MethodConfig, h_energy: PauliSum, runner: PolynomialRunner, psi0: StateVector,
             step_poly, keep_states: bool, reference: float | None) -> tuple[list, StateVector, list]:
    """Shared loop. ``step_poly(t)`` is the polynomial of iteration t (1-based)."""
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    records, states = [], []
    state, cumulative = psi0, 1.0
    composed = MonomialPoly([1.0])
    for t in range(1, cfg.iterations + 1):
        if cfg.composed:
            composed = composed * step_poly(t)
            state, prob_t = runner.apply(composed, psi0)
            step = prob_t / cumulative
            cumulative = prob_t
        else:
            state, step = runner.apply(step_poly(t), state)
            cumulative *= step
        e = energy(state, h_energy)
        records.append(ConvergenceRecord(t, e, None if reference is None else e - reference, step, cumulative))
        if keep_states:
            states.append(state)
    return records, state, states


def run_qpi(cfg: MethodConfig, h: PauliSum, psi0: StateVector, keep_states: bool = False) -> RunResult:
    runner = PolynomialRunner(h, cfg)
    ref = _reference(cfg, h)
    poly = qpi_poly(cfg.step_degree)
    records, final, states = _iterate(cfg, h, runner, psi0, lambda t: poly, keep_states, ref)
    return RunResult(cfg, records, final, states, reference_energy=ref)


def _qpl_energy_dense(h: PauliSum, psi0: StateVector, spec: oracle.DenseSpectrum):
    """Rayleigh quotient of (sum_i a_i x^i)|psi0> as a function of a (a_0 free)."""
    x = spec.eigenvalues / l1_norm(h)
    weights = np.abs(spec.eigenvectors.conj().T @ psi0.amplitudes) ** 2

    def rq(a: np.ndarray) -> float:
        w = weights * np.abs(np.polynomial.polynomial.polyval(x, a)) ** 2
        total = w.sum()
        if total <= 1e-300:
            return float(spec.eigenvalues[-1])
        return float(np.dot(w, spec.eigenvalues) / total)

    return rq


def _nelder_mead_restarts(objective, x0: np.ndarray, budget: int) -> tuple[np.ndarray, float, int, bool]:
    """Nelder-Mead from x0, re-seeding a simplex at each endpoint until a
    sweep improves by less than 1e-10 or the budget runs out."""
    x, fx, used = x0, objective(x0), 1
    dim = len(x0)
    while used < budget:
        simplex = np.vstack([x, x + 0.5 * np.linalg.norm(x) * np.eye(dim)])
        res = optimize.minimize(
            objective, x, method="Nelder-Mead",
            options={"maxfev": budget - used, "xatol": 1e-10, "fatol": 1e-13, "adaptive": True,
                     "initial_simplex": simplex},
        )
        used += int(res.nfev)
        gain = fx - float(res.fun)
        if res.fun < fx:
            x, fx = res.x, float(res.fun)
        if gain < 1e-10:
            return x, fx, used, True
    return x, fx, used, False


def fit_qpl(cfg: MethodConfig, h: PauliSum, psi0: StateVector) -> QplFit:
    """Minimize the Rayleigh quotient of (1 + sum C_i x^i)|psi0>, x = H / lambda.

    The search runs over homogeneous coefficients of sum a_i x^i, so that
    C_i = a_i / a_0, held in the Chebyshev basis (better conditioned than
    powers) with the global phase fixed by a real constant term. The quotient
    does not depend on the overall scale of a, so large C become ordinary
    points rather than a runaway direction. Nelder-Mead gets 1000 k
    evaluations per start; the first start is C = 0, then three seeded random
    starts. Within a start the simplex is re-seeded at its endpoint until a
    sweep gains less than 1e-10. The best point over all starts is returned;
    ``converged`` records whether any start reached the sweep criterion
    within budget.
    """
    k = cfg.lanczos_order
    if cfg.qpl_evaluation == "dense":
        rq = _qpl_energy_dense(h, psi0, oracle.eig(h))
    else:
        runner = PolynomialRunner(h, cfg)

        def rq(a: np.ndarray) -> float:
            s, _ = runner.apply(MonomialPoly(a / a[0]), psi0)
            return energy(s, h)

    def unpack(params: np.ndarray) -> np.ndarray:
        # Chebyshev-basis search variables, a_0 real (global phase is irrelevant)
        b = params[: k + 1] + 1j * np.r_[0.0, params[k + 1 :]]
        return np.polynomial.chebyshev.cheb2poly(b)

    def objective(params: np.ndarray) -> float:
        a = unpack(params)
        if abs(a[0]) < 1e-12 * max(1.0, np.max(np.abs(a))):
            return float("inf")
        return rq(a)

    rng = np.random.default_rng(cfg.seed)
    origin = np.zeros(2 * k + 1)
    origin[0] = 1.0
    starts = [origin] + [rng.normal(size=2 * k + 1) for _ in range(3)]
    initial = objective(origin)
    best_x, best_f, evals, converged = origin, initial, 0, False
    for x0 in starts:
        x, fx, used, ok = _nelder_mead_restarts(objective, x0, QPL_BUDGET_PER_ORDER * k)
        evals += used
        converged = converged or ok
        if fx < best_f:
            best_x, best_f = x, fx
    if not converged:
        warnings.warn("QPL optimizer hit its evaluation budget; returning the best point found",
                      RuntimeWarning, stacklevel=2)
    a = unpack(best_x)
    return QplFit(a[1:] / a[0], initial, best_f, evals, converged)


def run_qpl(cfg: MethodConfig, h: PauliSum, psi0: StateVector, keep_states: bool = False,
            fit: QplFit | None = None) -> RunResult:
    fit = fit or fit_qpl(cfg, h, psi0)
    runner = PolynomialRunner(h, cfg)
    ref = _reference(cfg, h)
    first = qpl_poly(cfg.step_degree, fit.coefficients)
    rest = qpi_poly(cfg.step_degree)
    records, final, states = _iterate(
        cfg, h, runner, psi0, lambda t: first if t == 1 else rest, keep_states, ref
    )
    return RunResult(cfg, records, final, states, fit=fit, reference_energy=ref)


def run_qii(cfg: MethodConfig, h: PauliSum, psi0: StateVector, keep_states: bool = False) -> RunResult:
    lam = l1_norm(h)
    eps = float(cfg.shift)
    if abs(eps) / lam <= 1.0:
        warnings.warn(
            f"|shift| / lambda = {abs(eps) / lam:.3f} <= 1: the resolvent series may not converge",
            RuntimeWarning, stacklevel=2,
        )
    runner = PolynomialRunner(h, cfg)
    ref = _reference(cfg, h)
    poly = qii_poly(cfg.inverse_power, eps / lam, cfg.truncation)
    records, final, states = _iterate(cfg, h, runner, psi0, lambda t: poly, keep_states, ref)
    return RunResult(cfg, records, final, states, reference_energy=ref)


def qfsm_scaled_constant(cfg: MethodConfig, lam_shifted: float) -> float:
    """C in units of the shifted, normalized operator; auto C = 1 / lambda_s^2 gives 1."""
    if cfg.fold_constant is None:
        return 1.0
    return float(cfg.fold_constant) * lam_shifted**2


def run_qfsm(cfg: MethodConfig, h: PauliSum, psi0: StateVector, keep_states: bool = False) -> RunResult:
    shifted = shift_identity(h, float(cfg.shift))
    c_scaled = qfsm_scaled_constant(cfg, l1_norm(shifted))
    runner = PolynomialRunner(shifted, cfg)
    ref = _reference(cfg, h)
    poly = qfsm_poly(1, c_scaled)
    records, final, states = _iterate(cfg, h, runner, psi0, lambda t: poly, keep_states, ref)
    return RunResult(cfg, records, final, states, reference_energy=ref)


def run_method(cfg: MethodConfig, h: PauliSum, psi0: StateVector, keep_states: bool = False) -> RunResult:
    if psi0.num_qubits != h.num_qubits:
        raise ValueError(
            f"initial state has {psi0.num_qubits} qubits, the Hamiltonian acts on {h.num_qubits}"
        )
    runners = {"qpi": run_qpi, "qpl": run_qpl, "qii": run_qii, "qfsm": run_qfsm}
    return runners[cfg.variant](cfg, h, psi0, keep_states)
