"""Rotation-form block encodings of H / lambda.

Register layout inside any state handed to an encoding: system qubits are
``0..m-1`` and ancilla qubits ``m..m+a-1`` (ancilla index bit ``b`` on qubit
``m+b``). Anything above that (GQSP or combiner qubits) is supplied by the
caller as extra controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceError
from .pauli import PAULI_MATRICES, PauliSum, l1_norm, to_dense
from .statevector import StateVector, apply_gate_inplace, ry_matrix


@dataclass(frozen=True)
class Gate:
    controls: tuple
    targets: tuple
    matrix: np.ndarray

    def dagger(self) -> "Gate":
        return Gate(self.controls, self.targets, self.matrix.conj().T)


@dataclass(frozen=True)
class BlockEncoding:
    system_qubits: int
    ancilla_qubits: int
    normalization: float
    flavor: str
    gates: tuple

    @property
    def num_qubits(self) -> int:
        return self.system_qubits + self.ancilla_qubits

    def apply_inplace(self, amps: np.ndarray, num_qubits: int, controls=(), adjoint: bool = False) -> None:
        seq = reversed(self.gates) if adjoint else self.gates
        for g in seq:
            u = g.matrix.conj().T if adjoint else g.matrix
            apply_gate_inplace(amps, num_qubits, tuple(controls) + g.controls, g.targets, u)

    def apply(self, s: StateVector, controls=(), adjoint: bool = False) -> StateVector:
        if s.num_qubits < self.num_qubits:
            raise ValueError(
                f"state has {s.num_qubits} qubits, the encoding needs at least {self.num_qubits}"
            )
        out = s.copy()
        self.apply_inplace(out.amplitudes, s.num_qubits, controls, adjoint)
        return out

    def dense(self) -> np.ndarray:
        """Dense unitary on (ancilla, system), built by running every basis column."""
        dim = 2**self.num_qubits
        cols = np.eye(dim, dtype=complex)
        self.apply_inplace(cols, self.num_qubits)
        return cols


def _prepare_gates(weights: np.ndarray, m: int, a: int) -> list[Gate]:
    """Rotation tree loading sqrt(weights) onto the ancilla register, MSB first."""
    gates = []
    for b in range(a - 1, -1, -1):
        higher = list(range(a - 1, b, -1))
        for prefix in range(2 ** len(higher)):
            bits = {hb: (prefix >> (len(higher) - 1 - i)) & 1 for i, hb in enumerate(higher)}
            sel = np.ones(len(weights), dtype=bool)
            for hb, v in bits.items():
                sel &= ((np.arange(len(weights)) >> hb) & 1) == v
            bit_b = (np.arange(len(weights)) >> b) & 1
            p0 = weights[sel & (bit_b == 0)].sum()
            p1 = weights[sel & (bit_b == 1)].sum()
            if p0 + p1 <= 0 or p1 == 0:
                continue
            theta = 2 * math.atan2(math.sqrt(p1), math.sqrt(p0))
            controls = tuple((m + hb, v) for hb, v in bits.items())
            gates.append(Gate(controls, (m + b,), ry_matrix(theta)))
    return gates


def build_lcu(h: PauliSum) -> BlockEncoding:
    """PREPARE / SELECT / PREPARE^dagger followed by the ancilla reflection
    2|0><0| - I, which turns the LCU reflection into a rotation per qubitized
    subspace. Zero-weight terms are dropped before sizing the ancilla register."""
    terms = [t for t in h.terms if t.coefficient != 0.0]
    if not terms:
        raise ValueError("cannot block-encode an empty (or all-zero) Hamiltonian")
    lam = l1_norm(h)
    m = h.num_qubits
    n_terms = len(terms)
    a = math.ceil(math.log2(n_terms)) if n_terms > 1 else 0
    weights = np.zeros(2**a)
    weights[:n_terms] = [abs(t.coefficient) / lam for t in terms]

    prepare = _prepare_gates(weights, m, a)
    select = []
    for j, t in enumerate(terms):
        controls = tuple((m + b, (j >> b) & 1) for b in range(a))
        ops = [(m - 1 - i, ch) for i, ch in enumerate(t.word) if ch != "I"]
        sign = -1.0 if t.coefficient < 0 else 1.0
        if not ops:
            if sign < 0:
                select.append(Gate(controls, (0,), -np.eye(2, dtype=complex)))
            continue
        for k, (q, ch) in enumerate(ops):
            mat = PAULI_MATRICES[ch] * (sign if k == 0 else 1.0)
            select.append(Gate(controls, (q,), mat))

    gates = prepare + select + [g.dagger() for g in reversed(prepare)]
    if a > 0:
        reflection = -np.eye(2**a, dtype=complex)
        reflection[0, 0] = 1.0
        gates.append(Gate((), tuple(range(m, m + a)), reflection))
    return BlockEncoding(m, a, lam, "lcu_rotation", tuple(gates))


def build_explicit(h: PauliSum) -> BlockEncoding:
    """Single-ancilla encoding [[Hs, -S], [S, Hs]] with S = sqrt(I - Hs^2)."""
    lam = l1_norm(h)
    if lam == 0.0:
        raise ValueError("zero Hamiltonian has no normalized block encoding")
    hs = to_dense(h) / lam
    try:
        evals, vecs = np.linalg.eigh(hs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"eigendecomposition failed: {exc}") from exc
    root = np.sqrt(np.clip(1.0 - evals**2, 0.0, None))
    s = (vecs * root) @ vecs.conj().T
    u = np.block([[hs, -s], [s, hs]])
    m = h.num_qubits
    return BlockEncoding(m, 1, lam, "explicit_rotation", (Gate((), tuple(range(m + 1)), u),))


def build_encoding(h: PauliSum, flavor: str = "lcu") -> BlockEncoding:
    if flavor in ("lcu", "lcu_rotation"):
        return build_lcu(h)
    if flavor in ("explicit", "explicit_rotation"):
        return build_explicit(h)
    raise ValueError(f"unknown block-encoding flavor {flavor!r}")


def apply_cu0(enc: BlockEncoding, s: StateVector, gqsp_qubit: int, adjoint: bool = False) -> StateVector:
    """|0><0| (x) U + |1><1| (x) I with the GQSP qubit as a polarity-0 control."""
    if gqsp_qubit < enc.num_qubits or gqsp_qubit >= s.num_qubits:
        raise ValueError(
            f"GQSP qubit {gqsp_qubit} must sit above the {enc.num_qubits} encoding qubits "
            f"of a {s.num_qubits}-qubit register"
        )
    return enc.apply(s, controls=((gqsp_qubit, 0),), adjoint=adjoint)


def top_left(enc: BlockEncoding, u: np.ndarray | None = None) -> np.ndarray:
    u = enc.dense() if u is None else u
    dim = 2**enc.system_qubits
    return u[:dim, :dim]


def chebyshev_block(enc: BlockEncoding, k: int, max_qubits: int = 12) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if enc.num_qubits > max_qubits:
        raise ResourceError(f"{enc.num_qubits} qubits exceeds the dense cap of {max_qubits}")
    u = enc.dense()
    return top_left(enc, np.linalg.matrix_power(u, k))
