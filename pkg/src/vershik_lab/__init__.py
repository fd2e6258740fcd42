"""Finite-resolution tools for ordered Bratteli diagrams and partial dynamical systems.

Modules: ``space`` (refining partitions, clopen sets, partial homeomorphisms),
``bratteli`` (ordered diagrams, telescoping, order equivalence), ``versik``
(path spaces and the Vershik map), ``pds`` (Bratteli-system axioms),
``kr`` (Kakutani-Rohlin towers and diagram extraction), ``nested`` (nested
sequences of partial homeomorphisms), ``examples`` (built-ins),
``formats`` and ``cli``.
"""

from .bratteli import OrderedBratteliDiagram, OrderedDiagram, order_equivalent_bounded, telescope
from .examples import build
from .nested import NestedSequence
from .pds import BratteliSystem
from .space import ClopenSet, PartialHomeo, Point, SymbolicSpace

__version__ = "0.1.0"

__all__ = ["BratteliSystem", "ClopenSet", "NestedSequence", "OrderedBratteliDiagram",
           "OrderedDiagram", "PartialHomeo", "Point", "SymbolicSpace", "build",
           "order_equivalent_bounded", "telescope"]
