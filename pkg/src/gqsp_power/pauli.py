"""Pauli-sum Hamiltonians: parsing, merging, norms, shifts and dense realization.

Word convention: the leftmost character of a word acts on the highest-index
qubit, so ``"XZ"`` is X on qubit 1 and Z on qubit 0, and the dense matrix is
the Kronecker product of the single-qubit matrices in word order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ParseError, ResourceError

DEFAULT_DENSE_CAP = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_ALPHABET = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    word: str

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ValueError(f"non-finite coefficient {self.coefficient!r} for word {self.word!r}")
        bad = set(self.word) - _ALPHABET
        if bad:
            raise ValueError(f"invalid Pauli characters {sorted(bad)} in word {self.word!r}")

    @property
    def is_identity(self) -> bool:
        return set(self.word) <= {"I"}

    def masks(self) -> tuple[int, int, int]:
        """Return ``(flip_mask, sign_mask, num_y)`` in the LSB-is-qubit-0 convention."""
        n = len(self.word)
        flip = sign = 0
        num_y = 0
        for i, ch in enumerate(self.word):
            bit = 1 << (n - 1 - i)
            if ch in "XY":
                flip |= bit
            if ch in "YZ":
                sign |= bit
            if ch == "Y":
                num_y += 1
        return flip, sign, num_y


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli words on ``num_qubits`` qubits.

    Use :meth:`from_terms` to build one; it merges duplicate words and checks
    word lengths. Instances are immutable.
    """

    terms: tuple[PauliTerm, ...]
    num_qubits: int

    @classmethod
    def from_terms(cls, terms: Iterable, num_qubits: int | None = None) -> "PauliSum":
        merged: dict[str, float] = {}
        for t in terms:
            if not isinstance(t, PauliTerm):
                coeff, word = t
                if isinstance(coeff, complex):
                    if coeff.imag != 0:
                        raise ValueError("complex Pauli coefficients are not supported")
                    coeff = coeff.real
                t = PauliTerm(float(coeff), str(word))
            if num_qubits is None:
                num_qubits = len(t.word)
            if len(t.word) != num_qubits:
                raise ValueError(
                    f"word {t.word!r} has length {len(t.word)}, expected {num_qubits}"
                )
            merged[t.word] = merged.get(t.word, 0.0) + t.coefficient
        if num_qubits is None:
            raise ValueError("num_qubits is required for an empty Pauli sum")
        if num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        identity = "I" * num_qubits
        kept = tuple(
            PauliTerm(c, w) for w, c in merged.items() if c != 0.0 or w == identity
        )
        return cls(kept, num_qubits)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=float)

    @property
    def words(self) -> list[str]:
        return [t.word for t in self.terms]

    def identity_coefficient(self) -> float:
        identity = "I" * self.num_qubits
        for t in self.terms:
            if t.word == identity:
                return t.coefficient
        return 0.0

    def render(self) -> str:
        return "".join(f"{t.coefficient!r} {t.word}\n" for t in self.terms)

    def to_json(self) -> str:
        return json.dumps(
            {
                "num_qubits": self.num_qubits,
                "terms": [{"coeff": t.coefficient, "word": t.word} for t in self.terms],
            }
        )


def parse_pauli_sum(text: str) -> PauliSum:
    """Parse the line-oriented Hamiltonian format (or its JSON alternative).

    Each data line is ``<float> <word>``; ``#`` starts a comment. Errors carry
    the 1-based line number.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _parse_json(stripped)

    terms: list[PauliTerm] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected '<coefficient> <word>', got {raw.strip()!r}", lineno)
        coeff_text, word = fields
        try:
            coeff = float(coeff_text)
        except ValueError:
            if "j" in coeff_text.lower():
                raise ParseError(f"complex coefficient {coeff_text!r} not allowed", lineno) from None
            raise ParseError(f"bad coefficient {coeff_text!r}", lineno) from None
        if not math.isfinite(coeff):
            raise ParseError(f"non-finite coefficient {coeff_text!r}", lineno)
        word = word.upper()
        if set(word) - _ALPHABET:
            raise ParseError(f"bad Pauli word {word!r}", lineno)
        if width is None:
            width = len(word)
        elif len(word) != width:
            raise ParseError(
                f"inconsistent word length: {word!r} has {len(word)} characters, expected {width}",
                lineno,
            )
        terms.append(PauliTerm(coeff, word))
    if width is None:
        raise ParseError("no Hamiltonian terms found", 0)
    return PauliSum.from_terms(terms, width)


def _parse_json(text: str) -> PauliSum:
    try:
        data = json.loads(text)
        n = int(data["num_qubits"])
        raw_terms = data["terms"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed JSON Hamiltonian: {exc}", 1) from None
    terms = []
    for i, entry in enumerate(raw_terms, start=1):
        try:
            coeff = entry["coeff"]
            word = str(entry["word"]).upper()
        except (KeyError, TypeError):
            raise ParseError(f"term {i} lacks 'coeff'/'word'", 1) from None
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool):
            raise ParseError(f"term {i}: coefficient must be a real number", 1)
        if set(word) - _ALPHABET or len(word) != n:
            raise ParseError(f"term {i}: bad word {word!r} for {n} qubits", 1)
        terms.append(PauliTerm(float(coeff), word))
    return PauliSum.from_terms(terms, n)


def l1_norm(h: PauliSum) -> float:
    return math.fsum(abs(t.coefficient) for t in h.terms)


def shift_identity(h: PauliSum, epsilon: float) -> PauliSum:
    """Return ``h - epsilon * I``; only the all-identity coefficient changes."""
    identity = "I" * h.num_qubits
    terms = list(h.terms)
    for i, t in enumerate(terms):
        if t.word == identity:
            terms[i] = PauliTerm(t.coefficient - epsilon, identity)
            break
    else:
        terms.append(PauliTerm(-float(epsilon), identity))
    return PauliSum.from_terms(terms, h.num_qubits)


def to_dense(h: PauliSum, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    if h.num_qubits > cap:
        raise ResourceError(f"{h.num_qubits} qubits exceeds the dense cap of {cap}")
    dim = 2**h.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for t in h.terms:
        mat = np.ones((1, 1), dtype=complex)
        for ch in t.word:
            mat = np.kron(mat, PAULI_MATRICES[ch])
        out += t.coefficient * mat
    return out


def random_pauli_sum(rng: np.random.Generator, num_qubits: int, num_terms: int) -> PauliSum:
    """Random Hamiltonian with distinct words and N(0,1) coefficients (test support)."""
    words: list[str] = []
    while len(words) < min(num_terms, 4**num_qubits):
        w = "".join(rng.choice(list("IXYZ"), size=num_qubits))
        if w not in words:
            words.append(w)
    return PauliSum.from_terms(zip(rng.normal(size=len(words)), words), num_qubits)


def diagonal_pauli_sum(diag) -> PauliSum:
    """Express a real diagonal matrix of size 2^n as a sum of I/Z words."""
    diag = np.asarray(diag, dtype=float)
    n = int(round(math.log2(len(diag))))
    if 2**n != len(diag):
        raise ValueError("diagonal length must be a power of two")
    terms = []
    for mask in range(2**n):
        word = "".join("Z" if (mask >> (n - 1 - i)) & 1 else "I" for i in range(n))
        signs = np.array([(-1) ** bin(j & mask).count("1") for j in range(2**n)])
        coeff = float(signs @ diag) / 2**n
        if abs(coeff) > 1e-15 or mask == 0:
            terms.append((coeff, word))
    return PauliSum.from_terms(terms, n)
