"""
==============
Pauli Strings
==============

Sign-free Pauli operators in symplectic form. Stabilizer generators,
logical operators and fault signatures are all expressed with
:py:class:`PauliString`.
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from synprint.library.gf2 import gf2_rank

_LETTERS = {(0, 0): 'I', (1, 0): 'X', (0, 1): 'Z', (1, 1): 'Y'}
_BITS = {letter: bits for bits, letter in _LETTERS.items()}


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator without phase.

    >>> p = PauliString.from_label('XZIY')
    >>> p.label, p.weight
    ('XZIY', 3)
    >>> p.commutes(PauliString.from_label('ZZII'))
    False
    """
    x: Tuple[int, ...]
    z: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.x) != len(self.z):
            raise ValueError(
                f'x and z parts differ in length: {len(self.x)} != '
                f'{len(self.z)}')

    @classmethod
    def from_label(cls, label: str) -> 'PauliString':
        try:
            bits = [_BITS[letter] for letter in label.upper()]
        except KeyError as error:
            raise ValueError(f'invalid Pauli label {label!r}') from error
        return cls(
            x=tuple(b[0] for b in bits),
            z=tuple(b[1] for b in bits))

    @classmethod
    def from_support(
            cls,
            n: int,
            x_support: Iterable[int] = (),
            z_support: Iterable[int] = (),
    ) -> 'PauliString':
        x = [0] * n
        z = [0] * n
        for q in x_support:
            x[q] = 1
        for q in z_support:
            z[q] = 1
        return cls(x=tuple(x), z=tuple(z))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def label(self) -> str:
        return ''.join(_LETTERS[(a, b)] for a, b in zip(self.x, self.z))

    @property
    def weight(self) -> int:
        return sum(1 for a, b in zip(self.x, self.z) if a or b)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(
            q for q, (a, b) in enumerate(zip(self.x, self.z)) if a or b)

    @property
    def x_support(self) -> Tuple[int, ...]:
        return tuple(q for q, a in enumerate(self.x) if a)

    @property
    def z_support(self) -> Tuple[int, ...]:
        return tuple(q for q, b in enumerate(self.z) if b)

    @property
    def is_x_type(self) -> bool:
        return not any(self.z) and any(self.x)

    @property
    def is_z_type(self) -> bool:
        return not any(self.x) and any(self.z)

    def symplectic(self) -> np.ndarray:
        """The ``[x | z]`` row vector."""
        return np.array(self.x + self.z, dtype=np.uint8)

    def commutes(self, other: 'PauliString') -> bool:
        if other.n != self.n:
            raise ValueError(
                f'cannot compare Paulis on {self.n} and {other.n} qubits')
        overlap = sum(
            a * d + b * c
            for a, b, c, d in zip(self.x, self.z, other.x, other.z))
        return overlap % 2 == 0

    def __mul__(self, other: 'PauliString') -> 'PauliString':
        if other.n != self.n:
            raise ValueError(
                f'cannot multiply Paulis on {self.n} and {other.n} qubits')
        return PauliString(
            x=tuple(a ^ c for a, c in zip(self.x, other.x)),
            z=tuple(b ^ d for b, d in zip(self.z, other.z)))

    def __str__(self) -> str:
        return self.label


def single_qubit_pauli(n: int, qubit: int, letter: str) -> PauliString:
    """A weight-one Pauli on ``qubit``.

    >>> single_qubit_pauli(3, 1, 'Y').label
    'IYI'
    """
    a, b = _BITS[letter]
    return PauliString.from_support(
        n, [qubit] if a else [], [qubit] if b else [])


def syndrome_of(error: PauliString, generators: Sequence[PauliString]) -> Tuple[int, ...]:
    """Bit ``i`` is 1 when ``error`` anticommutes with generator ``i``."""
    return tuple(0 if error.commutes(g) else 1 for g in generators)


def symplectic_matrix(paulis: Sequence[PauliString]) -> np.ndarray:
    return np.array([p.symplectic() for p in paulis], dtype=np.uint8)


def all_commute(paulis: Sequence[PauliString]) -> bool:
    return all(
        a.commutes(b)
        for i, a in enumerate(paulis)
        for b in paulis[i + 1:])


def independent(paulis: List[PauliString]) -> bool:
    if not paulis:
        return True
    return gf2_rank(symplectic_matrix(paulis)) == len(paulis)


def test_anticommuting_pairs() -> None:
    x = PauliString.from_label('X')
    y = PauliString.from_label('Y')
    z = PauliString.from_label('Z')
    assert not x.commutes(z)
    assert not x.commutes(y)
    assert not y.commutes(z)
    assert (x * z).label == 'Y'


def test_syndrome_of_bit_flip() -> None:
    generators = [PauliString.from_label('ZZI'), PauliString.from_label('IZZ')]
    assert syndrome_of(PauliString.from_label('XII'), generators) == (1, 0)
    assert syndrome_of(PauliString.from_label('IXI'), generators) == (1, 1)
    assert syndrome_of(PauliString.from_label('ZII'), generators) == (0, 0)
