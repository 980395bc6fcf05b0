"""
===============
Repetition Code
===============

Three-qubit bit-flip code: data qubits ``0..2`` with parity checks
``Z0Z1`` and ``Z1Z2`` read by two syndrome qubits.
"""

from typing import List

from synprint.codes.code import Code, CodeFamily
from synprint.library.pauli import PauliString

NAME = CodeFamily.REPETITION.value


class Repetition(Code):

    name = NAME
    defaults = {'distance': 3}

    @property
    def num_data(self) -> int:
        return 3

    def z_generators(self) -> List[PauliString]:
        return [
            PauliString.from_label('ZZI'),
            PauliString.from_label('IZZ')]

    def logical_x(self) -> PauliString:
        return PauliString.from_label('XXX')

    def logical_z(self) -> PauliString:
        return PauliString.from_label('ZZZ')


def test_repetition_generators() -> None:
    code = Repetition()
    code.check()
    assert [g.label for g in code.stabilizer_generators()] == ['ZZI', 'IZZ']
    assert code.logical_readout([1, 1, 0]) == 1
    assert code.logical_readout([0, 0, 1]) == 0
