"""
===========
Steane Code
===========

The [[7,1,3]] code built from the parity-check matrix of the [7,4]
Hamming code, used once for X-type and once for Z-type checks.
"""

from typing import List

from synprint.codes.code import Code, CodeFamily
from synprint.library.pauli import PauliString

NAME = CodeFamily.STEANE.value

#: Supports of the Hamming parity checks. Column ``q`` of the check
#: matrix is the binary expansion of ``q + 1``.
HAMMING_CHECKS = ((3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6))


class Steane(Code):

    name = NAME
    defaults = {'distance': 3}

    @property
    def num_data(self) -> int:
        return 7

    def x_generators(self) -> List[PauliString]:
        return [
            PauliString.from_support(7, x_support=support)
            for support in HAMMING_CHECKS]

    def z_generators(self) -> List[PauliString]:
        return [
            PauliString.from_support(7, z_support=support)
            for support in HAMMING_CHECKS]

    def logical_x(self) -> PauliString:
        return PauliString.from_support(7, x_support=range(7))

    def logical_z(self) -> PauliString:
        return PauliString.from_support(7, z_support=range(7))


def test_steane_generators() -> None:
    code = Steane()
    code.check()
    assert len(code.x_generators()) == 3
    assert len(code.z_generators()) == 3
