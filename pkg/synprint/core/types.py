"""
=====
Types
=====
"""

from typing import Dict, Tuple, Union

#: A shot's measured bits as a string of ``'0'``/``'1'`` characters.
Bits = str

#: Undirected edge between two qubits.
Edge = Tuple[int, int]

#: A dictionary that holds a JSON-compatible document.
Document = Dict[str, Union[str, int, float, bool, list, dict, None]]
