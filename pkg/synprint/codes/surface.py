"""
============
Surface Code
============

Rotated planar surface code of odd distance ``d``: ``d*d`` data qubits
on a square patch, ``d*d - 1`` checks.

Data qubit ``(r, c)`` has index ``r*d + c``. A check sits on each face
``(r, c)`` touching data ``(r..r+1, c..c+1)``; faces alternate X and Z
like a checkerboard, starting with X at ``(0, 0)``. Half of the faces
just outside the patch give weight-two checks: X-type along the top
and bottom edges, Z-type along the left and right edges.

>>> code = Surface({'distance': 3})
>>> code.num_data, len(code.stabilizer_generators())
(9, 8)
"""

from typing import List, Tuple

from synprint.codes.code import (
    Code, CodeFamily, CodeSpec, LogicalCircuitSpec, LogicalState, build_circuit)
from synprint.core.circuit import GateKind, GateOp
from synprint.library.pauli import PauliString

NAME = CodeFamily.SURFACE.value


class Surface(Code):

    name = NAME
    defaults = {'distance': 3}
    transversal_cnot = False
    encode_by_measurement = True

    @property
    def num_data(self) -> int:
        return self.distance ** 2

    def faces(self) -> List[Tuple[str, Tuple[int, ...]]]:
        """``(type, data support)`` of every check in face order."""
        d = self.distance
        out = []
        for r in range(-1, d):
            for c in range(-1, d):
                kind = 'X' if (r + c) % 2 == 0 else 'Z'
                on_row_edge = r in (-1, d - 1)
                on_col_edge = c in (-1, d - 1)
                if on_row_edge and on_col_edge:
                    continue
                if on_row_edge and kind != 'X':
                    continue
                if on_col_edge and kind != 'Z':
                    continue
                support = tuple(
                    rr * d + cc
                    for rr in (r, r + 1) for cc in (c, c + 1)
                    if 0 <= rr < d and 0 <= cc < d)
                out.append((kind, support))
        return out

    def x_generators(self) -> List[PauliString]:
        n = self.num_data
        return [
            PauliString.from_support(n, x_support=support)
            for kind, support in self.faces() if kind == 'X']

    def z_generators(self) -> List[PauliString]:
        n = self.num_data
        return [
            PauliString.from_support(n, z_support=support)
            for kind, support in self.faces() if kind == 'Z']

    def logical_x(self) -> PauliString:
        d = self.distance
        return PauliString.from_support(
            self.num_data, x_support=[r * d for r in range(d)])

    def logical_z(self) -> PauliString:
        return PauliString.from_support(
            self.num_data, z_support=range(self.distance))

    def encoder(self, state: LogicalState) -> List[GateOp]:
        """Product state that the encoding round projects into the code.

        ``|1>`` is reached by a logical X after that round.
        """
        if state is LogicalState.PLUS:
            return [GateOp(GateKind.H, (q,)) for q in range(self.num_data)]
        return []


def test_surface_generators() -> None:
    for distance in (3, 5):
        code = Surface({'distance': distance})
        code.check()
        generators = code.stabilizer_generators()
        assert len(generators) == distance ** 2 - 1
        assert {g.weight for g in generators} == {2, 4}


def test_checks_only_couple_data_to_ancillas() -> None:
    for state in LogicalState:
        spec = LogicalCircuitSpec(
            code=CodeSpec(CodeFamily.SURFACE, distance=3), initial=(state,))
        circuit, layout = build_circuit(spec)
        for a, b in circuit.coupled_pairs():
            assert (a < 9) != (b < 9), (state, a, b)
        assert len(circuit.qubits) == 17
        assert len(layout) == 16
