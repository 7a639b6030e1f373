"""Exception types shared across the package."""

from __future__ import annotations


class SwigcheckError(Exception):
    """Base class for every structured error raised by this package."""


class InvalidDocument(SwigcheckError):
    """An input document is structurally malformed."""


class CyclicGraph(SwigcheckError):
    """The edge relation contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(map(str, self.cycle)))


class UnknownVertex(SwigcheckError):
    """A vertex name does not occur in the graph."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown vertex: {name!r}")


class NotATarget(SwigcheckError):
    """An intervention assignment does not cover exactly the target set."""


class UnknownNode(SwigcheckError):
    """A separation query names a node that is not in the split graph."""

    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown node: {node}")


class UnknownVariable(SwigcheckError):
    """A distribution operation names a variable that is not declared."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown variable: {name!r}")


class InvalidQuery(SwigcheckError):
    """Query sets violate a precondition (overlap, emptiness, containment)."""


class CellBudgetExceeded(SwigcheckError):
    """The product state space is larger than the configured cell bound."""

    def __init__(self, size, bound):
        self.size = size
        self.bound = bound
        super().__init__(f"state space has {size} cells, exceeding the bound {bound}")


class IncompleteFamily(SwigcheckError):
    """A counterfactual family is missing a required member."""

    def __init__(self, intervention):
        self.intervention = dict(intervention)
        super().__init__(f"missing family member for intervention {self.intervention}")


class NotIdentified(SwigcheckError):
    """The extended g-formula hits a zero-probability conditioning cell."""

    def __init__(self, vertex, cell):
        self.vertex = vertex
        self.cell = dict(cell)
        super().__init__(
            f"conditional for {vertex!r} undefined at zero-probability cell {self.cell}"
        )


class IncompleteKernel(SwigcheckError):
    """A regime kernel is missing a member for a required regime."""

    def __init__(self, regime):
        self.regime = regime
        super().__init__(f"missing kernel member for regime {regime}")


class NotConvertible(SwigcheckError):
    """A kernel with a constrained regime space has no family form."""


class NoIdleRegime(SwigcheckError):
    """A regime space lacks the all-idle assignment."""


class IllFormedEci(SwigcheckError):
    """An extended conditional independence statement is ill formed."""


class NotACounterexample(SwigcheckError):
    """The two supplied distributions have identical conditionals."""
