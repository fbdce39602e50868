"""Dense statevector simulator.

Bit order: qubit 0 is the least-significant bit of the amplitude index, so a
bitstring is read most-significant qubit first (``"10"`` is index 2).
A dense gate ``u`` on ``targets`` uses ``targets[0]`` as the least-significant
bit of its own row/column index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroProbabilityError
from .pauli import PauliSum

MAX_DENSE_TARGETS = 12
NORM_TOL = 1e-10
MIN_PROBABILITY = 1e-24


@dataclass
class StateVector:
    amplitudes: np.ndarray
    num_qubits: int
    normalized: bool = field(default=True)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError(
                f"{self.amplitudes.shape[0]} amplitudes do not match {self.num_qubits} qubits"
            )

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(np.log2(len(amps)))
        if 2**n != len(amps):
            raise ValueError("number of amplitudes must be a power of two")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        is_unit = abs(np.linalg.norm(amps) - 1.0) <= NORM_TOL
        return cls(amps, n, normalized=is_unit)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ZeroProbabilityError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm, self.num_qubits, True)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.num_qubits, self.normalized)

    def to_json(self) -> str:
        return json.dumps([[float(a.real), float(a.imag)] for a in self.amplitudes])

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        pairs = json.loads(text)
        amps = np.array([complex(re, im) for re, im in pairs])
        return cls.from_amplitudes(amps)


def init_basis_state(num_qubits: int, bitstring: str) -> StateVector:
    if len(bitstring) != num_qubits or set(bitstring) - {"0", "1"}:
        raise ValueError(f"bitstring {bitstring!r} does not describe {num_qubits} qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[int(bitstring, 2)] = 1.0
    return StateVector(amps, num_qubits)


def rotation_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """The SU(2)-type rotation R(theta, phi, lambda) used by GQSP."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [
            [np.exp(1j * (lam + phi)) * c, np.exp(1j * phi) * s],
            [np.exp(1j * lam) * s, -c],
        ],
        dtype=complex,
    )


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=atol)


def apply_gate_inplace(amps: np.ndarray, num_qubits: int, controls, targets, u: np.ndarray) -> None:
    """Apply ``u`` on ``targets`` where every ``(qubit, polarity)`` control matches.

    ``amps`` has shape ``(2**n,)`` or ``(2**n, batch)`` and is modified in place.
    """
    n = num_qubits
    batch = amps.shape[1] if amps.ndim == 2 else 1
    # leading batch axis, then one axis per qubit with qubit n-1 first
    base = amps.reshape((2,) * n + (batch,))
    tensor = np.moveaxis(base, -1, 0)
    idx: list = [slice(None)] * (n + 1)
    controlled = set()
    for q, pol in controls:
        idx[1 + n - 1 - q] = int(pol)
        controlled.add(q)
    sub = tensor[tuple(idx)]
    remaining = [q for q in range(n - 1, -1, -1) if q not in controlled]
    k = len(targets)
    src = [1 + remaining.index(q) for q in reversed(targets)]
    moved = np.moveaxis(sub, src, list(range(sub.ndim - k, sub.ndim)))
    shape = moved.shape
    flat = moved.reshape(-1, 2**k)
    out = (flat @ u.T).reshape(shape)
    sub[...] = np.moveaxis(out, list(range(sub.ndim - k, sub.ndim)), src)
    if not np.shares_memory(base, amps):
        amps[...] = base.reshape(amps.shape)


def _check_qubits(s: StateVector, controls, targets):
    cq = [q for q, _ in controls]
    every = cq + list(targets)
    if any(q < 0 or q >= s.num_qubits for q in every):
        raise ValueError(f"qubit index out of range for {s.num_qubits} qubits")
    if len(set(every)) != len(every):
        raise ValueError("control and target qubits must be distinct")
    if any(p not in (0, 1) for _, p in controls):
        raise ValueError("control polarity must be 0 or 1")


def apply_single_qubit(s: StateVector, q: int, u, atol: float = 1e-10) -> StateVector:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, atol):
        raise ValueError("single-qubit gate must be a 2x2 unitary")
    return apply_controlled(s, [], [q], u)


def apply_controlled(s: StateVector, controls, targets, u) -> StateVector:
    u = np.asarray(u, dtype=complex)
    targets = list(targets)
    controls = [tuple(c) for c in controls]
    _check_qubits(s, controls, targets)
    if len(targets) > MAX_DENSE_TARGETS:
        raise ValueError(f"dense gates are limited to {MAX_DENSE_TARGETS} targets")
    if u.shape != (2 ** len(targets),) * 2:
        raise ValueError(f"gate of shape {u.shape} does not match {len(targets)} targets")
    out = s.copy()
    apply_gate_inplace(out.amplitudes, s.num_qubits, controls, targets, u)
    return out


def apply_pauli_sum(amps: np.ndarray, h: PauliSum) -> np.ndarray:
    """Return H|amps> using bit masks; no dense matrix is formed."""
    idx = np.arange(len(amps))
    out = np.zeros_like(amps, dtype=complex)
    for t in h.terms:
        flip, sign, num_y = t.masks()
        parity = (np.bitwise_count(idx & sign) & 1).astype(np.int64)
        phase = (1j) ** num_y * (1 - 2 * parity)
        out[idx ^ flip] += t.coefficient * phase * amps
    return out


def expectation_pauli_sum(s: StateVector, h: PauliSum) -> float:
    if h.num_qubits != s.num_qubits:
        raise ValueError("Hamiltonian and state act on different qubit counts")
    if abs(s.norm() - 1.0) > NORM_TOL:
        raise ValueError("expectation requires a normalized state")
    value = np.vdot(s.amplitudes, apply_pauli_sum(s.amplitudes, h))
    if abs(value.imag) > 1e-10:
        raise ArithmeticError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def subspace_mask(num_qubits: int, qubits, bitstring: str) -> np.ndarray:
    if len(qubits) != len(bitstring):
        raise ValueError("bitstring length must match the number of projected qubits")
    idx = np.arange(2**num_qubits)
    mask = np.ones(len(idx), dtype=bool)
    for q, b in zip(qubits, bitstring):
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit {q} out of range")
        mask &= ((idx >> q) & 1) == int(b)
    return mask


def project_and_renormalize(
    s: StateVector, qubits, bitstring: str, min_probability: float = MIN_PROBABILITY
) -> tuple[StateVector, float]:
    """Project ``qubits`` onto ``bitstring`` (``bitstring[i]`` is the value of
    ``qubits[i]``) and renormalize.

    The returned state keeps the full register. The probability is the squared
    norm of the projected component, relative to the input's squared norm.
    """
    mask = subspace_mask(s.num_qubits, list(qubits), bitstring)
    kept = np.where(mask, s.amplitudes, 0.0)
    weight = float(np.vdot(kept, kept).real)
    total = float(np.vdot(s.amplitudes, s.amplitudes).real)
    prob = weight / total if total > 0 else 0.0
    if prob <= min_probability:
        raise ZeroProbabilityError(f"projection onto {bitstring!r} has probability {prob:.3e}")
    return StateVector(kept / np.sqrt(weight), s.num_qubits, True), prob


def fidelity(a, b) -> float:
    """|<a|b>|^2 / (|a|^2 |b|^2) for StateVectors or raw arrays."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    num = abs(np.vdot(va, vb)) ** 2
    return float(num / (np.vdot(va, va).real * np.vdot(vb, vb).real))
