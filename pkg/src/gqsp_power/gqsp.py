"""Angle finding and circuit execution for generalized QSP.

Pipeline: a bounded unit-circle polynomial P is completed to Q with
|P|^2 + |Q|^2 = 1 on |z| = 1 (Prony or Fourier projection), the pair is carved
into rotation angles, and the angles drive the circuit

    R(theta_d, phi_d, 0) CU0 ... R(theta_1, phi_1, 0) CU0 R(theta_0, phi_0, lambda0)

whose GQSP-qubit/ancilla |0> block applies P(U) to the system register.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .block_encoding import BlockEncoding
from .errors import (
    CapitalizationError,
    CompletionError,
    IllConditionedError,
    InconsistentPairError,
    NeedsRescaleError,
    ZeroProbabilityError,
)
from .polynomials import UnitCirclePoly, circle_max, eval_on_circle
from .statevector import (
    MIN_PROBABILITY,
    StateVector,
    apply_gate_inplace,
    rotation_matrix,
    subspace_mask,
)

COMPLETION_TOL = 1e-8
CARVING_TOL = 1e-9
ROUNDTRIP_TOL = 1e-8
DEGREE_TOL = 1e-14
SEPARATION_RATIO = 0.1
SINGULAR_MARGIN = 1e-12
POLISH_ITERATIONS = 30
MAX_GRID = 2**21
_TINY = 1e-13

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass
class AngleSequence:
    thetas: np.ndarray
    phis: np.ndarray
    lambda0: float
    alpha: float = 1.0
    capitalization: dict | None = None

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.phis = np.asarray(self.phis, dtype=float)
        if self.thetas.shape != self.phis.shape or self.thetas.ndim != 1 or len(self.thetas) == 0:
            raise ValueError("thetas and phis must be non-empty arrays of equal length")
        if not (np.all(np.isfinite(self.thetas)) and np.all(np.isfinite(self.phis))):
            raise ValueError("angles must be finite")

    @property
    def degree(self) -> int:
        return len(self.thetas) - 1

    def to_dict(self) -> dict:
        return {
            "thetas": [float(t) for t in self.thetas],
            "phis": [float(p) for p in self.phis],
            "lambda0": float(self.lambda0),
            "alpha": float(self.alpha),
            "capitalization": self.capitalization,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "AngleSequence":
        cap = data.get("capitalization")
        if cap is not None:
            cap = {"beta": float(cap["beta"]), "gamma": float(cap["gamma"]), "degree": int(cap["degree"])}
        return cls(
            thetas=[float(t) for t in data["thetas"]],
            phis=[float(p) for p in data["phis"]],
            lambda0=float(data["lambda0"]),
            alpha=float(data.get("alpha", 1.0)),
            capitalization=cap,
        )

    @classmethod
    def from_json(cls, text: str) -> "AngleSequence":
        return cls.from_dict(json.loads(text))


@dataclass
class CompletionResult:
    q: UnitCirclePoly
    max_deviation: float
    grid_size: int = 0
    method: str = "prony"
    separation: float = 0.0


@dataclass
class GqspRun:
    output_state: StateVector
    success_probability: float
    applied_scale: float
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------- completion


def _laurent_g(c: np.ndarray) -> np.ndarray:
    """Coefficients g_k, k = -d..d, of 1 - |P(z)|^2 restricted to |z| = 1."""
    g = -np.convolve(c, np.conj(c[::-1]))
    g[len(c) - 1] += 1.0
    return g


def _effective_degree(c: np.ndarray, tol: float = DEGREE_TOL) -> int:
    g = _laurent_g(c)
    d = len(c) - 1
    upper = np.abs(g[d:])
    nz = np.flatnonzero(upper > tol)
    return int(nz[-1]) if len(nz) else 0


def _deviation(p: np.ndarray, q: np.ndarray, m: int) -> float:
    n = max(len(p), len(q))
    m = max(m, 2 * n)
    pv = np.fft.ifft(p, n=m) * m
    qv = np.fft.ifft(q, n=m) * m
    return float(np.max(np.abs(np.abs(pv) ** 2 + np.abs(qv) ** 2 - 1.0)))


def _g_on_grid(c: np.ndarray, m: int) -> np.ndarray:
    g = 1.0 - np.abs(eval_on_circle(UnitCirclePoly(c), m)) ** 2
    if g.min() <= SINGULAR_MARGIN:
        raise NeedsRescaleError(
            f"max |P| on the circle is {math.sqrt(1 - g.min()):.15f}; rescale P below 1 first"
        )
    return g


def _starting_grid(c: np.ndarray, floor: int) -> int:
    """Grid on which the Fourier series of 1 / (1 - |P|^2) is resolved.

    Near a dip of g = 1 - |P|^2 to g_min with curvature g'' the poles of 1/g
    sit sqrt(2 g_min / g'') off the circle, and the coefficients decay at that
    rate; the grid must outrun the decay by a wide margin to keep aliasing
    near rounding level.
    """
    m0 = max(floor, 8192)
    g = _g_on_grid(c, m0)
    i = int(np.argmin(g))
    step = 2 * math.pi / m0
    curv = (g[i - 1] - 2 * g[i] + g[(i + 1) % m0]) / step**2
    if curv <= 0:
        return m0
    depth = math.sqrt(2 * g[i] / curv)
    need = 40.0 / depth + 4 * len(c)
    m = m0
    while m < need and 2 * m <= MAX_GRID:
        m *= 2
    return m


def _inverse_coefficients(c: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """g = 1 - |P|^2 on the M-grid and the Fourier coefficients of h = 1/g."""
    g = _g_on_grid(c, m)
    return g, np.fft.fft(1.0 / g) / m


def _hankel_estimate(g: np.ndarray, hhat: np.ndarray, deg: int, rows: int | None) -> tuple[np.ndarray, float]:
    """Null vector of the Hankel matrix of h = 1/g plus the separation ratio
    sigma_min / sigma_next (small means a clean one-dimensional null space)."""
    m = len(g)
    rows = rows or 4 * (deg + 1)
    r = np.arange(1, rows + 1)[:, None]
    i = np.arange(deg + 1)[None, :]
    mat = hhat[(-(r + i)) % m]
    _, sv, vh = np.linalg.svd(mat)
    ratio = float(sv[-1] / sv[-2]) if deg >= 1 and sv[-2] > 0 else 0.0
    return vh[-1].conj(), ratio


def _fit_scale(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Least-squares scale so that |scale * V|^2 matches g on the grid."""
    m = len(g)
    vv = np.abs(np.fft.ifft(v, n=m) * m) ** 2
    scale = float(np.dot(vv, g) / np.dot(vv, vv))
    return math.sqrt(max(scale, 0.0)) * v


def _resolved_estimate(g, hhat, d_eff, rows, q, ratio) -> np.ndarray:
    """Outside-root starting point for refinement.

    Roots of g close to the origin leave no trace in the Hankel data, so the
    degree is lowered until the null space separates. The resolved factor has
    its roots inside the disc; conjugate reversal mirrors them outside, and
    zero padding back to ``d_eff`` stands in for the unresolved near-origin
    roots, whose mirrored linear factors (1 - conj(xi) z) are close to 1.
    Layer-peeling carving is stable for this minimum-phase choice and can
    amplify errors geometrically for factors with roots inside.
    """
    deg = d_eff
    while ratio > SEPARATION_RATIO and deg > 1:
        deg -= 1
        q, ratio = _hankel_estimate(g, hhat, deg, rows and rows - (d_eff - deg))
    return np.r_[np.conj(_fit_scale(q, g)[::-1]), np.zeros(d_eff - deg, dtype=complex)]


def _gauge(q: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(q)))
    return q * (np.conj(q[k]) / abs(q[k]))


def _autocorrelation(q: np.ndarray) -> np.ndarray:
    """r_k = sum_i q_{i+k} conj(q_i) for k = 0..d."""
    d = len(q) - 1
    return np.convolve(q, np.conj(q[::-1]))[d:]


def polish_factor(c: np.ndarray, q: np.ndarray, iterations: int = POLISH_ITERATIONS) -> np.ndarray:
    """Gauss-Newton refinement of a spectral factor of g = 1 - |P|^2.

    Solves |Q|^2 = g coefficientwise (Laurent indices 0..d) starting from ``q``.
    Near a genuine factor the system is regular up to the phase gauge, so the
    minimum-norm step converges quadratically; the best iterate is returned.
    """
    d = len(q) - 1
    g = _laurent_g(c)
    n = len(c) - 1
    target = np.zeros(d + 1, dtype=complex)
    upto = min(d, n)
    target[: upto + 1] = g[n : n + upto + 1]
    best, best_res = q, np.inf
    for _ in range(iterations):
        resid = _autocorrelation(q) - target
        res = float(np.max(np.abs(resid)))
        if res < best_res:
            best, best_res = q, res
        if res < 1e-16 or res > 10 * best_res:
            break
        # dr = A dq + B conj(dq); A[k, j] = conj(q[j-k]), B[k, i] = q[i+k]
        a = linalg.toeplitz(np.r_[np.conj(q[0]), np.zeros(d)], np.conj(q))
        b = linalg.hankel(q, np.zeros(d + 1))
        m1, m2 = a + b, 1j * (a - b)
        jac = np.block([[m1.real, m2.real], [m1.imag, m2.imag]])
        step = np.linalg.lstsq(jac, -np.r_[resid.real, resid.imag], rcond=None)[0]
        q = q + step[: d + 1] + 1j * step[d + 1 :]
    return best


def _fourier_once(c: np.ndarray, d_out: int, m: int) -> np.ndarray:
    g = _g_on_grid(c, m)
    what = np.fft.fft(np.log(g)) / m
    proj = np.zeros(m, dtype=complex)
    proj[0] = what[0] / 2
    proj[1 : m // 2] = what[1 : m // 2]
    qgrid = np.exp(np.fft.ifft(proj) * m)
    return (np.fft.fft(qgrid) / m)[: d_out + 1]


def _complete(p: UnitCirclePoly, method: str, grid_size, rows, tol, polish: bool = True) -> CompletionResult:
    c = p.coefficients
    d = len(c) - 1
    d_eff = _effective_degree(c)
    if not np.any(c):
        return CompletionResult(UnitCirclePoly([1.0]), 0.0, 0, method)
    if d_eff == 0:
        g0 = 1.0 - float(np.sum(np.abs(c) ** 2))
        if g0 <= SINGULAR_MARGIN:
            raise NeedsRescaleError("|P| = 1 on the whole circle; no complement exists")
        q = np.array([math.sqrt(g0)], dtype=complex)
        return CompletionResult(UnitCirclePoly(q), _deviation(c, q, max(8192, 4 * (d + 1))), 0, method)

    floor = 8 * (d + 1) if method == "prony" else 2 * (d + 1)
    m = grid_size or _starting_grid(c, max(8192, 32 * (d + 1)))
    if m < floor:
        raise ValueError(f"{method} completion needs at least {floor} grid points, got {m}")
    best = None
    while True:
        ratio = 0.0
        if method == "prony":
            g, hhat = _inverse_coefficients(c, m)
            q, ratio = _hankel_estimate(g, hhat, d_eff, rows)
            if ratio > SEPARATION_RATIO and not polish:
                raise IllConditionedError(
                    f"Prony null space is not separated (sigma_min/sigma_next = {ratio:.3g}); "
                    "try capitalization"
                )
            if polish:
                q = polish_factor(c, _resolved_estimate(g, hhat, d_eff, rows, q, ratio))
            else:
                q = _fit_scale(q, g)
            q = _gauge(q)
        else:
            q = _fourier_once(c, d_eff, m)
        dev = _deviation(c, q, m)
        # a refinement that is already close but no longer improving is at its
        # rounding floor; a far-off result may still be an under-resolved grid
        stalled = best is not None and best.max_deviation < 1e-6 and dev > 0.5 * best.max_deviation
        if best is None or dev < best.max_deviation:
            best = CompletionResult(UnitCirclePoly(q), dev, m, method, ratio)
        if dev <= tol or stalled or grid_size is not None or 2 * m > MAX_GRID:
            break
        m *= 2
    if best.max_deviation > tol:
        if best.separation > SEPARATION_RATIO:
            raise IllConditionedError(
                f"Prony null space is not separated (sigma_min/sigma_next = {best.separation:.3g}) "
                f"and the completion misses tolerance ({best.max_deviation:.3e}); try capitalization"
            )
        raise CompletionError(
            f"{method} completion reached max deviation {best.max_deviation:.3e} > {tol:.1e}"
        )
    return best


def complete_prony(p: UnitCirclePoly, grid_size: int | None = None, rows: int | None = None,
                   tol: float = COMPLETION_TOL, polish: bool = True) -> CompletionResult:
    """Complementary Q by Prony's method on h = 1 / (1 - |P|^2).

    The null vector of the Hankel matrix of negative-index Fourier coefficients
    of h gives Q up to scale; the scale is fitted so |Q|^2 matches 1 - |P|^2 and
    the largest coefficient of Q is made real positive. When ``grid_size`` is
    omitted the grid is doubled until the deviation meets ``tol``.

    Polynomials with tiny extreme coefficients put roots of 1 - |P|^2 near the
    origin, and the Hankel estimate then loses digits. With ``polish`` (the
    default) the estimate is refined by Gauss-Newton on the factorization
    equations; the ill-conditioned error is raised only when the null space is
    not separated and the refined Q still misses ``tol``. ``polish=False`` gives
    the bare method, which fails as soon as the separation ratio exceeds 0.1.
    """
    return _complete(p, "prony", grid_size, rows, tol, polish)


def complete_fourier(p: UnitCirclePoly, grid_size: int | None = None,
                     tol: float = COMPLETION_TOL) -> CompletionResult:
    """Complementary Q = exp(Pi log(1 - |P|^2)), Pi keeping positive frequencies
    and half the zero mode. Q comes out with no zeros inside the disc."""
    return _complete(p, "fourier", grid_size, None, tol)


def complete(p: UnitCirclePoly, method: str = "prony", **kwargs) -> CompletionResult:
    if method == "prony":
        return complete_prony(p, **kwargs)
    if method == "fourier":
        kwargs.pop("polish", None)
        kwargs.pop("rows", None)
        return complete_fourier(p, **kwargs)
    raise ValueError(f"unknown completion method {method!r}")


# ------------------------------------------------------------ capitalization


def capitalize(p: UnitCirclePoly, gamma: float, beta: float, degree: int | None = None,
               margin: float = 1e-6) -> tuple[UnitCirclePoly, UnitCirclePoly]:
    """Split P / beta = P'' + P' with P' = gamma (z^d + 1).

    ``degree`` defaults to the stored (padded) length of ``p`` minus one.
    Returns ``(P'', P')``.
    """
    if not 0 < gamma < 0.5:
        raise CapitalizationError(f"gamma must lie in (0, 1/2), got {gamma}")
    if beta < 1:
        raise CapitalizationError(f"beta must be >= 1, got {beta}", suggested_beta=1.0)
    d = p.length - 1 if degree is None else degree
    if d < p.degree:
        raise CapitalizationError("capitalization degree is below the degree of P")
    prime = np.zeros(d + 1, dtype=complex)
    prime[0] += gamma
    prime[d] += gamma
    pp = p.padded(d + 1) / beta - prime
    bound = circle_max(UnitCirclePoly(pp))
    if bound > 1 - margin:
        pmax = circle_max(p)
        room = 1 - margin - 2 * gamma
        suggested = pmax / room if room > 0 else None
        raise CapitalizationError(
            f"max |P/beta - P'| = {bound:.6f} exceeds {1 - margin}; "
            + (f"try beta >= {suggested:.6g}" if suggested else "reduce gamma"),
            suggested_beta=suggested,
        )
    return UnitCirclePoly(pp), UnitCirclePoly(prime)


def auto_beta(p: UnitCirclePoly, gamma: float, headroom: float = 0.9) -> float:
    """Smallest beta >= 1 with max|P|/beta + 2 gamma <= headroom."""
    room = headroom - 2 * gamma
    if room <= 0:
        raise CapitalizationError("gamma leaves no headroom below 1")
    return max(1.0, circle_max(p) / room)


# ------------------------------------------------------------------- carving


def _angle(x: complex) -> float:
    return float(np.angle(x)) if abs(x) > _TINY else 0.0


def carve(p: UnitCirclePoly, q: UnitCirclePoly, tol: float = CARVING_TOL) -> AngleSequence:
    """Peel one signal step at a time off (P, Q), from degree d down to 0.

    At each step the rotation R is chosen so that the top coefficient of the
    new Q and the constant of the new P both vanish. For a valid pair the two
    conditions fix the same unit vector v = (cos t, e^{i phi} sin t): v is
    parallel to conj(a_d, b_d) and to (-b_0, a_0). Taking the principal
    eigenvector of the sum of both outer products weights each condition by
    its size, which stays accurate when either pair is tiny.
    """
    d = max(p.length, q.length) - 1
    a = p.padded(d + 1)
    b = q.padded(d + 1)
    thetas = np.zeros(d + 1)
    phis = np.zeros(d + 1)
    for j in range(d, 0, -1):
        lead = np.array([np.conj(a[j]), np.conj(b[j])])
        const = np.array([-b[0], a[0]])
        gram = np.outer(lead, lead.conj()) + np.outer(const, const.conj())
        if np.trace(gram).real < _TINY**2:
            theta = phi = 0.0
        else:
            v = np.linalg.eigh(gram)[1][:, -1]
            theta = math.atan2(abs(v[1]), abs(v[0]))
            phi = _angle(v[1] * np.conj(v[0])) if abs(v[0]) > _TINY and abs(v[1]) > _TINY else 0.0
        cs, sn = math.cos(theta), math.sin(theta)
        e = np.exp(-1j * phi)
        top = e * cs * a + sn * b
        bot = e * sn * a - cs * b
        if abs(top[0]) > tol or abs(bot[j]) > tol:
            raise InconsistentPairError(
                f"step {j}: residual coefficients {abs(top[0]):.3e}, {abs(bot[j]):.3e} exceed {tol:.0e}"
            )
        a = top[1:]
        b = bot[:-1]
        thetas[j], phis[j] = theta, phi
    a0, b0 = a[0], b[0]
    if abs(abs(a0) ** 2 + abs(b0) ** 2 - 1.0) > 10 * tol:
        raise InconsistentPairError(f"final column has norm^2 {abs(a0) ** 2 + abs(b0) ** 2:.12f}")
    thetas[0] = math.atan2(abs(b0), abs(a0))
    lam = _angle(b0)
    phis[0] = _angle(a0) - lam if abs(a0) > _TINY else 0.0
    return AngleSequence(thetas, phis, lam)


def reconstruct_points(a: AngleSequence, z) -> np.ndarray:
    """Batched GQSP product with the signal replaced by scalars ``z``: shape (n, 2, 2)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    mats = np.broadcast_to(rotation_matrix(a.thetas[0], a.phis[0], a.lambda0), (len(z), 2, 2)).copy()
    for j in range(1, len(a.thetas)):
        mats[:, 0, :] *= z[:, None]
        mats = np.einsum("ij,njk->nik", rotation_matrix(a.thetas[j], a.phis[j], 0.0), mats)
    return mats


def reconstruct_scalar(a: AngleSequence, z: complex) -> np.ndarray:
    if abs(abs(z) - 1.0) > 1e-12:
        raise ValueError("z must lie on the unit circle")
    return reconstruct_points(a, [z])[0]


def roundtrip_residual(a: AngleSequence, p: UnitCirclePoly, npoints: int = 64) -> float:
    z = np.exp(2j * np.pi * np.arange(npoints) / npoints)
    return float(np.max(np.abs(reconstruct_points(a, z)[:, 0, 0] - p(z))))


@dataclass
class AngleReport:
    angles: AngleSequence
    completion: CompletionResult
    roundtrip: float
    prime: AngleSequence | None = None


def find_angles(p: UnitCirclePoly, method: str = "prony", alpha: float = 1.0,
                capitalization: tuple[float, float] | None = None, **kwargs) -> AngleReport:
    """Completion + carving + round-trip check for one bounded polynomial.

    With ``capitalization=(gamma, beta)`` the sequence returned is the one for
    P'' and ``prime`` carries the sequence for P' = gamma (z^d + 1).
    """
    prime_seq = None
    target = p
    cap_meta = None
    if capitalization is not None:
        gamma, beta = capitalization
        target, prime = capitalize(p, gamma, beta)
        cap_meta = {"beta": float(beta), "gamma": float(gamma), "degree": target.length - 1}
        prime_seq = find_angles(prime, method, **kwargs).angles
    comp = complete(target, method, **kwargs)
    seq = carve(target, comp.q)
    res = roundtrip_residual(seq, target)
    if res > ROUNDTRIP_TOL:
        raise InconsistentPairError(f"round-trip residual {res:.3e} exceeds {ROUNDTRIP_TOL:.0e}")
    seq.alpha = float(alpha)
    seq.capitalization = cap_meta
    return AngleReport(seq, comp, res, prime_seq)


def prime_angles(gamma: float, degree: int, method: str = "prony") -> AngleSequence:
    prime = np.zeros(degree + 1, dtype=complex)
    prime[0] += gamma
    prime[degree] += gamma
    return find_angles(UnitCirclePoly(prime), method).angles


# ----------------------------------------------------------------- execution


def _apply_sequence(amps, n, a: AngleSequence, enc: BlockEncoding, gqsp_qubit: int, controls=()):
    controls = tuple(controls)
    apply_gate_inplace(amps, n, controls, [gqsp_qubit], rotation_matrix(a.thetas[0], a.phis[0], a.lambda0))
    for j in range(1, len(a.thetas)):
        enc.apply_inplace(amps, n, controls + ((gqsp_qubit, 0),))
        apply_gate_inplace(amps, n, controls, [gqsp_qubit], rotation_matrix(a.thetas[j], a.phis[j], 0.0))


def _embed(psi0: StateVector, enc: BlockEncoding, extra: int) -> tuple[np.ndarray, int]:
    if psi0.num_qubits != enc.system_qubits:
        raise ValueError(
            f"initial state has {psi0.num_qubits} qubits, the encoding acts on {enc.system_qubits}"
        )
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    n = enc.num_qubits + extra
    amps = np.zeros(2**n, dtype=complex)
    amps[: 2**enc.system_qubits] = psi0.amplitudes
    return amps, n


def _postselect(amps, n, enc: BlockEncoding, min_probability: float) -> tuple[StateVector, float]:
    m = enc.system_qubits
    flagged = list(range(m, n))
    mask = subspace_mask(n, flagged, "0" * len(flagged))
    kept = amps[mask]
    prob = float(np.vdot(kept, kept).real)
    if prob <= min_probability:
        raise ZeroProbabilityError(f"post-selection probability {prob:.3e}")
    # the all-zero flag subspace is exactly the first 2^m amplitudes
    return StateVector(kept / math.sqrt(prob), m, True), prob


def assemble_and_run(a: AngleSequence, enc: BlockEncoding, psi0: StateVector,
                     min_probability: float = MIN_PROBABILITY, prime: AngleSequence | None = None) -> GqspRun:
    """Run the GQSP circuit on ``psi0`` and post-select every flag qubit on 0.

    Capitalized sequences (``a.capitalization`` set) run through the
    one-extra-qubit combination circuit; ``prime`` may pass a precomputed
    sequence for P'.
    """
    if a.capitalization is not None:
        cap = a.capitalization
        prime = prime or prime_angles(cap["gamma"], cap["degree"])
        return _run_combined(a, prime, enc, psi0, cap["beta"], min_probability)
    amps, n = _embed(psi0, enc, 1)
    _apply_sequence(amps, n, a, enc, enc.num_qubits)
    out, prob = _postselect(amps, n, enc, min_probability)
    return GqspRun(out, prob, a.alpha)


def _run_combined(seq2: AngleSequence, seq1: AngleSequence, enc: BlockEncoding, psi0: StateVector,
                  beta: float, min_probability: float) -> GqspRun:
    amps, n = _embed(psi0, enc, 2)
    gq, comb = enc.num_qubits, enc.num_qubits + 1
    apply_gate_inplace(amps, n, (), [comb], HADAMARD)
    _apply_sequence(amps, n, seq1, enc, gq, controls=((comb, 0),))
    _apply_sequence(amps, n, seq2, enc, gq, controls=((comb, 1),))
    apply_gate_inplace(amps, n, (), [comb], HADAMARD)
    out, prob = _postselect(amps, n, enc, min_probability)
    return GqspRun(out, prob, seq2.alpha * 2 * beta, {"beta": beta})


def run_with_capitalization(p: UnitCirclePoly, enc: BlockEncoding, psi0: StateVector, gamma: float,
                            beta: float, method: str = "prony", alpha: float = 1.0, **kwargs) -> GqspRun:
    rep = find_angles(p, method, alpha=alpha, capitalization=(gamma, beta), **kwargs)
    return _run_combined(rep.angles, rep.prime, enc, psi0, beta, MIN_PROBABILITY)
