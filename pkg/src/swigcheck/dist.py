"""Exact finite discrete probability tables.

All probabilities are :class:`fractions.Fraction` values and every operation
is closed over the rationals, so equality checks used by the checkers are
exact rather than tolerance-based. Conditional tables mark rows whose
conditioning event has probability zero as undefined; the checkers skip such
rows and report how many were skipped.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import CellBudgetExceeded, InvalidDocument, InvalidQuery, UnknownVariable

MAX_CELLS_ENV = "SWIGCHECK_MAX_CELLS"
DEFAULT_MAX_CELLS = 1 << 20

ZERO = Fraction(0)
ONE = Fraction(1)


def cell_bound() -> int:
    raw = os.environ.get(MAX_CELLS_ENV)
    if raw is None:
        return DEFAULT_MAX_CELLS
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidDocument(f"{MAX_CELLS_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise InvalidDocument(f"{MAX_CELLS_ENV} must be positive")
    return value


def parse_prob(value) -> Fraction:
    """Exact probability from ``"num/den"`` strings, decimals, or numbers."""
    if isinstance(value, Fraction):
        p = value
    elif isinstance(value, int):
        p = Fraction(value)
    elif isinstance(value, str):
        try:
            p = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidDocument(f"bad probability literal {value!r}") from exc
    elif isinstance(value, float):
        # floats are accepted but converted through their decimal rendering so
        # that "0.1" means one tenth, not the nearest binary double
        p = Fraction(repr(value))
    else:
        raise InvalidDocument(f"bad probability value {value!r}")
    if p < 0:
        raise InvalidDocument(f"negative probability {value!r}")
    return p


class FiniteDistribution:
    """Joint probability table over named discrete variables.

    Cells are tuples of state indices aligned with ``variables``. Only
    nonzero cells are stored; the total mass must be exactly one.
    """

    __slots__ = ("variables", "_index", "_mass")

    def __init__(self, variables: Sequence[tuple[str, int]], mass: Mapping[tuple, Fraction], *, _checked=False):
        variables = tuple((str(n), int(k)) for n, k in variables)
        names = [n for n, _ in variables]
        if len(set(names)) != len(names):
            raise InvalidDocument("duplicate variable names")
        for n, k in variables:
            if k < 1:
                raise InvalidDocument(f"cardinality of {n!r} must be positive")
        size = 1
        for _, k in variables:
            size *= k
        bound = cell_bound()
        if size > bound:
            raise CellBudgetExceeded(size, bound)
        cards = tuple(k for _, k in variables)
        clean: dict[tuple[int, ...], Fraction] = {}
        total = ZERO
        for cell, p in mass.items():
            cell = tuple(int(s) for s in cell)
            if len(cell) != len(variables):
                raise InvalidDocument(f"cell {cell} has wrong arity")
            for s, k in zip(cell, cards):
                if not 0 <= s < k:
                    raise InvalidDocument(f"cell {cell} outside declared cardinalities")
            p = p if isinstance(p, Fraction) else parse_prob(p)
            if p < 0:
                raise InvalidDocument(f"negative mass at cell {cell}")
            total += p
            if p != 0:
                if cell in clean:
                    raise InvalidDocument(f"duplicate cell {cell}")
                clean[cell] = p
        if not _checked and total != 1:
            raise InvalidDocument(f"total mass is {total}, expected 1")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "_index", {n: i for i, (n, _) in enumerate(variables)})
        object.__setattr__(self, "_mass", clean)

    @classmethod
    def _raw(cls, variables, mass) -> "FiniteDistribution":
        """Diagnostic table that may not sum to one (mutants, stitched laws)."""
        return cls(variables, mass, _checked=True)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteDistribution instances are immutable")

    # -- basic access -------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def cards(self) -> dict[str, int]:
        return {n: k for n, k in self.variables}

    def index(self, name: str) -> int:
        if name not in self._index:
            raise UnknownVariable(name)
        return self._index[name]

    def p(self, cell: Sequence[int]) -> Fraction:
        return self._mass.get(tuple(cell), ZERO)

    def cells(self) -> Iterable[tuple[int, ...]]:
        """All cells of the product space in lexicographic order."""
        return itertools.product(*(range(k) for _, k in self.variables))

    def support(self) -> list[tuple[tuple[int, ...], Fraction]]:
        return sorted(self._mass.items())

    def total(self) -> Fraction:
        return sum(self._mass.values(), ZERO)

    def is_strictly_positive(self) -> bool:
        return all(self.p(cell) > 0 for cell in self.cells())

    def __eq__(self, other):
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.variables == other.variables and self._mass == other._mass

    def __hash__(self):
        return hash((self.variables, frozenset(self._mass.items())))

    def __repr__(self):
        return f"FiniteDistribution({self.names}, {len(self._mass)} nonzero cells)"

    # -- operations ---------------------------------------------------

    def reorder(self, names: Sequence[str]) -> "FiniteDistribution":
        """Same law with variables permuted into the given name order."""
        names = tuple(names)
        if sorted(names) != sorted(self.names):
            raise UnknownVariable(set(names) ^ set(self.names))
        perm = [self.index(n) for n in names]
        variables = tuple(self.variables[i] for i in perm)
        mass = {tuple(cell[i] for i in perm): p for cell, p in self._mass.items()}
        return FiniteDistribution._raw(variables, mass) if self.total() != 1 else FiniteDistribution(variables, mass)

    def marginal(self, keep: Iterable[str]) -> "FiniteDistribution":
        """Sum the mass over every variable not in ``keep``."""
        keep = set(keep)
        for n in keep:
            self.index(n)
        positions = [i for i, (n, _) in enumerate(self.variables) if n in keep]
        variables = tuple(self.variables[i] for i in positions)
        mass: dict[tuple[int, ...], Fraction] = {}
        for cell, p in self._mass.items():
            sub = tuple(cell[i] for i in positions)
            mass[sub] = mass.get(sub, ZERO) + p
        if self.total() != 1:
            return FiniteDistribution._raw(variables, mass)
        return FiniteDistribution(variables, mass)

    def _name_sequence(self, names: Iterable[str]) -> list[str]:
        # sets fall back to declaration order; sequences keep the caller's order
        if isinstance(names, (set, frozenset)):
            chosen = set(names)
            return [n for n, _ in self.variables if n in chosen]
        out = list(names)
        if len(set(out)) != len(out):
            raise InvalidQuery(f"duplicate variable names in {out}")
        return out

    def conditional(self, target: Iterable[str], given: Iterable[str]) -> "ConditionalTable":
        """Conditional table of ``target`` given ``given``.

        Rows are indexed by every cell of the given-product space, in the
        caller's variable order; a row whose conditioning event has zero
        probability is undefined.
        """
        target = self._name_sequence(target)
        given = self._name_sequence(given)
        if set(target) & set(given):
            raise InvalidQuery(f"target and given overlap: {sorted(set(target) & set(given))}")
        if not target:
            raise InvalidQuery("target set is empty")
        for n in list(target) + list(given):
            self.index(n)
        t_pos = [self.index(n) for n in target]
        g_pos = [self.index(n) for n in given]
        t_vars = tuple(self.variables[i] for i in t_pos)
        g_vars = tuple(self.variables[i] for i in g_pos)
        joint: dict[tuple, dict[tuple, Fraction]] = {}
        denom: dict[tuple, Fraction] = {}
        for cell, p in self._mass.items():
            g = tuple(cell[i] for i in g_pos)
            t = tuple(cell[i] for i in t_pos)
            denom[g] = denom.get(g, ZERO) + p
            row = joint.setdefault(g, {})
            row[t] = row.get(t, ZERO) + p
        rows: dict[tuple, dict[tuple, Fraction] | None] = {}
        for g in itertools.product(*(range(k) for _, k in g_vars)):
            d = denom.get(g, ZERO)
            if d == 0:
                rows[g] = None
            else:
                rows[g] = {t: p / d for t, p in sorted(joint[g].items())}
        return ConditionalTable(t_vars, g_vars, rows)

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        return {
            "variables": {n: k for n, k in self.variables},
            "entries": [
                {"cell": list(cell), "p": str(p)} for cell, p in self.support()
            ],
        }

    @classmethod
    def from_json(cls, document) -> "FiniteDistribution":
        if not isinstance(document, Mapping):
            raise InvalidDocument("distribution spec must be a JSON object")
        unknown = set(document) - {"variables", "entries"}
        if unknown:
            raise InvalidDocument(f"unexpected distribution fields: {sorted(unknown)}")
        variables = document.get("variables")
        if not isinstance(variables, Mapping) or not variables:
            raise InvalidDocument("'variables' must be a non-empty object")
        var_list = [(str(n), int(k)) for n, k in variables.items()]
        mass: dict[tuple, Fraction] = {}
        for entry in document.get("entries", []):
            if not isinstance(entry, Mapping) or set(entry) != {"cell", "p"}:
                raise InvalidDocument(f"bad entry: {entry!r}")
            cell = tuple(int(s) for s in entry["cell"])
            if cell in mass:
                raise InvalidDocument(f"duplicate cell {list(cell)}")
            mass[cell] = parse_prob(entry["p"])
        return cls(var_list, mass)


def marginal(d: FiniteDistribution, keep: Iterable[str]) -> FiniteDistribution:
    return d.marginal(keep)


def conditional(d: FiniteDistribution, target: Iterable[str], given: Iterable[str]) -> "ConditionalTable":
    return d.conditional(target, given)


class ConditionalTable:
    """Rows of exact conditional distributions, undefined where mass is zero."""

    __slots__ = ("target", "given", "rows")

    def __init__(self, target, given, rows):
        object.__setattr__(self, "target", tuple(target))
        object.__setattr__(self, "given", tuple(given))
        object.__setattr__(self, "rows", dict(rows))
        for cell, row in self.rows.items():
            if row is not None and sum(row.values(), ZERO) != 1:
                raise InvalidDocument(f"conditional row at {cell} does not sum to 1")

    def __setattr__(self, name, value):
        raise AttributeError("ConditionalTable instances are immutable")

    @property
    def target_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.target)

    @property
    def given_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.given)

    def row(self, cell: Sequence[int]):
        cell = tuple(cell)
        if cell not in self.rows:
            raise InvalidQuery(f"no row for given-cell {cell}")
        return self.rows[cell]

    def __eq__(self, other):
        if not isinstance(other, ConditionalTable):
            return NotImplemented
        return (
            self.target == other.target
            and self.given == other.given
            and self.rows == other.rows
        )

    def __repr__(self):
        return f"ConditionalTable({self.target_names} | {self.given_names})"


@dataclass
class DependenceReport:
    """Outcome of a functional-dependence test over a row family."""

    holds: bool
    witness: tuple | None = None
    skipped: int = 0

    def to_json(self) -> dict:
        out = {"holds": self.holds, "skipped": self.skipped}
        if self.witness is not None:
            a, b = self.witness
            out["witness"] = [dict(a), dict(b)]
        return out


def depends_only_on(
    rows: Mapping[tuple, object],
    context_vars: Sequence[str],
    projection: Iterable[str],
) -> DependenceReport:
    """Test whether a context-indexed row family depends only on a projection.

    ``rows`` maps context cells (tuples aligned with ``context_vars``) to row
    objects supporting equality, or ``None`` for undefined rows. Two contexts
    that agree on the projected coordinates must carry equal rows; undefined
    rows are skipped and counted. On failure the first violating context pair
    in enumeration order is returned.
    """
    context_vars = tuple(context_vars)
    projection = set(projection)
    extra = projection - set(context_vars)
    if extra:
        raise InvalidQuery(f"projection names unknown context variables: {sorted(extra)}")
    proj_pos = [i for i, v in enumerate(context_vars) if v in projection]
    reference: dict[tuple, tuple[object, tuple]] = {}
    skipped = 0
    for ctx in sorted(rows):
        row = rows[ctx]
        if row is None:
            skipped += 1
            continue
        key = tuple(ctx[i] for i in proj_pos)
        if key not in reference:
            reference[key] = (row, ctx)
        elif reference[key][0] != row:
            ref_ctx = reference[key][1]
            witness = (
                tuple(zip(context_vars, ref_ctx)),
                tuple(zip(context_vars, ctx)),
            )
            return DependenceReport(False, witness, skipped)
    return DependenceReport(True, None, skipped)


def rows_equal(
    left: Mapping[tuple, object],
    right: Mapping[tuple, object],
) -> tuple[bool, tuple | None, int]:
    """Compare two row maps on commonly defined rows, skipping undefined ones.

    Returns (equal, first witness cell, skipped count).
    """
    if set(left) != set(right):
        raise InvalidQuery("row maps are indexed by different given-cells")
    skipped = 0
    for cell in sorted(left):
        a, b = left[cell], right[cell]
        if a is None or b is None:
            skipped += 1
            continue
        if a != b:
            return False, cell, skipped
    return True, None, skipped


def product_cells(cards: Sequence[int]) -> Iterable[tuple[int, ...]]:
    return itertools.product(*(range(k) for k in cards))


def jsonable(value):
    """Recursively convert report payloads into JSON-serializable data."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Mapping):
        return {str(k) if not isinstance(k, str) else k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(jsonable(v) for v in value)
    return value
