"""Dense reference implementations.

Everything here works on ``to_dense(h)`` with plain numpy linear algebra and
never touches the statevector simulator or the block encodings, so a bug in
either cannot hide behind a matching oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularShiftError, ZeroProbabilityError
from .pauli import PauliSum, l1_norm, to_dense
from .polynomials import MonomialPoly
from .statevector import StateVector

SINGULAR_SHIFT_TOL = 1e-10


@dataclass(frozen=True)
class DenseSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig(h: PauliSum, cap: int = 12) -> DenseSpectrum:
    """Full Hermitian eigendecomposition, eigenvalues ascending."""
    evals, evecs = np.linalg.eigh(to_dense(h, cap))
    return DenseSpectrum(evals, evecs)


def _vec(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)


def _wrap(v: np.ndarray, num_qubits: int) -> StateVector:
    nrm = np.linalg.norm(v)
    return StateVector(v, num_qubits, normalized=abs(nrm - 1.0) <= 1e-10)


def apply_poly_dense(p: MonomialPoly, h: PauliSum, psi: StateVector, scaled: bool = True,
                     spectrum: DenseSpectrum | None = None) -> StateVector:
    """sum_k c_k X^k |psi>, X = H / lambda when ``scaled`` else H, via the eigenbasis."""
    spec = spectrum or eig(h)
    x = spec.eigenvalues / l1_norm(h) if scaled else spec.eigenvalues
    v = spec.eigenvectors
    out = v @ (p(x) * (v.conj().T @ _vec(psi)))
    return _wrap(out, h.num_qubits)


def apply_poly_horner(p: MonomialPoly, h: PauliSum, psi: StateVector, scaled: bool = True) -> StateVector:
    """Second evaluation path: Horner's rule with dense matrix-vector products."""
    mat = to_dense(h)
    if scaled:
        mat = mat / l1_norm(h)
    v = _vec(psi)
    acc = np.zeros_like(v)
    for c in p.coefficients[::-1]:
        acc = mat @ acc + c * v
    return _wrap(acc, h.num_qubits)


def apply_chebyshev_dense(cheb, h: PauliSum, psi: StateVector) -> StateVector:
    """sum_k a_k T_k(H / lambda) |psi> by the three-term recurrence."""
    mat = to_dense(h) / l1_norm(h)
    cheb = np.asarray(cheb, dtype=complex)
    prev = _vec(psi).astype(complex)
    out = cheb[0] * prev
    if len(cheb) > 1:
        cur = mat @ prev
        out = out + cheb[1] * cur
        for a in cheb[2:]:
            prev, cur = cur, 2 * (mat @ cur) - prev
            out = out + a * cur
    return _wrap(out, h.num_qubits)


def resolvent_dense(h: PauliSum, eps: float, n: int, psi: StateVector) -> StateVector:
    """(H - eps I)^(-n) |psi> in the eigenbasis."""
    spec = eig(h)
    gap = spec.eigenvalues - eps
    if np.min(np.abs(gap)) <= SINGULAR_SHIFT_TOL:
        raise SingularShiftError(f"shift {eps} is within {SINGULAR_SHIFT_TOL} of an eigenvalue")
    v = spec.eigenvectors
    return _wrap(v @ (gap ** (-n) * (v.conj().T @ _vec(psi))), h.num_qubits)


def rayleigh(mat: np.ndarray, v: np.ndarray) -> float:
    return float(np.vdot(v, mat @ v).real / np.vdot(v, v).real)


def _iterate(step: np.ndarray, energy_op: np.ndarray, psi0, steps: int):
    v = _vec(psi0) / np.linalg.norm(_vec(psi0))
    traj = [(v, rayleigh(energy_op, v))]
    for _ in range(steps):
        w = step @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise ZeroProbabilityError("iterate collapsed to the zero vector")
        v = w / nrm
        traj.append((v, rayleigh(energy_op, v)))
    return traj


def power_iteration_dense(h: PauliSum, psi0, steps: int, power: int = 1):
    """Normalized iterates of H^power, with their Rayleigh quotients (index 0 = start)."""
    mat = to_dense(h)
    return _iterate(np.linalg.matrix_power(mat, power), mat, psi0, steps)


def folded_iteration_dense(h: PauliSum, eps: float, c: float, psi0, steps: int):
    """Iterates of I - C (H - eps I)^2; energies are those of H itself."""
    mat = to_dense(h)
    shifted = mat - eps * np.eye(len(mat))
    return _iterate(np.eye(len(mat)) - c * shifted @ shifted, mat, psi0, steps)


def ground_energy(h: PauliSum) -> float:
    return float(eig(h).eigenvalues[0])


def dominant_energy(h: PauliSum) -> float:
    """Eigenvalue of largest magnitude, where power iteration converges."""
    e = eig(h).eigenvalues
    return float(e[np.argmax(np.abs(e))])


def nearest_energy(h: PauliSum, eps: float) -> float:
    e = eig(h).eigenvalues
    return float(e[np.argmin(np.abs(e - eps))])
