"""
==========
Shor Code
==========

Nine data qubits in three blocks of three. Six ``ZZ`` checks inside the
blocks catch bit flips; two six-qubit X checks across neighbouring
blocks catch phase flips.

Logical operators are ``X_L = X0 X1 X2`` and ``Z_L = Z0 Z3 Z6``.
"""

from typing import List

from synprint.codes.code import Code, CodeFamily
from synprint.library.pauli import PauliString

NAME = CodeFamily.SHOR.value

BLOCKS = ((0, 1, 2), (3, 4, 5), (6, 7, 8))


class Shor(Code):

    name = NAME
    defaults = {'distance': 3}

    @property
    def num_data(self) -> int:
        return 9

    def z_generators(self) -> List[PauliString]:
        return [
            PauliString.from_support(9, z_support=(block[i], block[i + 1]))
            for block in BLOCKS
            for i in range(2)]

    def x_generators(self) -> List[PauliString]:
        return [
            PauliString.from_support(9, x_support=BLOCKS[0] + BLOCKS[1]),
            PauliString.from_support(9, x_support=BLOCKS[1] + BLOCKS[2])]

    def logical_x(self) -> PauliString:
        return PauliString.from_support(9, x_support=BLOCKS[0])

    def logical_z(self) -> PauliString:
        return PauliString.from_support(9, z_support=(0, 3, 6))


def test_shor_generators() -> None:
    code = Shor()
    code.check()
    generators = code.stabilizer_generators()
    assert sum(g.is_z_type for g in generators) == 6
    assert [g.weight for g in code.x_generators()] == [6, 6]
