"""Counterfactual families and their exact checkers.

A counterfactual family maps interventions (a target subset together with an
assignment of values) to joint laws over all model variables. The member for
the empty intervention is the observational law. Checkers verify, by full
enumeration over exact rationals:

* distributional consistency: intervening on a variable at the value it was
  about to take anyway leaves the joint law of everything else unchanged;
* the split-graph local Markov property: after intervening everywhere, each
  variable given its predecessors depends only on its parents, with
  intervened parents entering through their assigned values;
* derived consequences (vector and conditional forms of consistency,
  irrelevance of future interventions, the conditioning-chain reductions);
* the ordinary ordered local Markov property for a single law.

``build_ffrcistg`` constructs the unique family compatible with a positive
observational law via the extended g-formula.
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dist import (
    ConditionalTable,
    FiniteDistribution,
    ZERO,
    depends_only_on,
    product_cells,
    rows_equal,
)
from .errors import (
    IncompleteFamily,
    InvalidDocument,
    InvalidQuery,
    NotIdentified,
    UnknownVertex,
)
from .graph import Dag, parse_dag, serialize_dag
from .reporting import CheckReport

InterventionKey = tuple[tuple[str, int], ...]


def intervention_key(order: Sequence[str], intervention: Mapping[str, int]) -> InterventionKey:
    """Canonical key: assigned pairs sorted by the vertex order."""
    rank = {v: i for i, v in enumerate(order)}
    for v in intervention:
        if v not in rank:
            raise UnknownVertex(v)
    return tuple(sorted(((str(v), int(s)) for v, s in intervention.items()), key=lambda kv: rank[kv[0]]))


class CounterfactualFamily:
    """Map from interventions on subsets of the targets to joint laws."""

    __slots__ = ("dag", "cards", "members", "observed_markov")

    def __init__(self, dag: Dag, cardinalities: Mapping[str, int], members):
        cards = {v: int(cardinalities[v]) for v in dag.order}
        missing = set(dag.vertices) - set(cardinalities)
        if missing:
            raise InvalidDocument(f"cardinalities missing for {sorted(missing)}")
        canon: dict[InterventionKey, FiniteDistribution] = {}
        expected_vars = tuple((v, cards[v]) for v in dag.order)
        for intervention, dist in (members.items() if isinstance(members, Mapping) else members):
            key = intervention_key(dag.order, dict(intervention))
            for v, s in key:
                if v not in set(dag.targets):
                    raise InvalidDocument(f"intervention on non-target {v!r}")
                if not 0 <= s < cards[v]:
                    raise InvalidDocument(f"state {s} out of range for target {v!r}")
            if set(dist.names) != set(dag.vertices):
                raise InvalidDocument(
                    f"member {dict(key)} is not a law over all model variables"
                )
            dist = dist.reorder([v for v in dag.order])
            if dist.variables != expected_vars:
                raise InvalidDocument(
                    f"member {dict(key)} has cardinalities {dist.variables}, expected {expected_vars}"
                )
            if key in canon:
                raise InvalidDocument(f"duplicate member for intervention {dict(key)}")
            canon[key] = dist
        object.__setattr__(self, "dag", dag)
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "members", canon)
        object.__setattr__(self, "observed_markov", None)

    def __setattr__(self, name, value):
        raise AttributeError("CounterfactualFamily instances are immutable")

    def member(self, intervention: Mapping[str, int]) -> FiniteDistribution:
        key = intervention_key(self.dag.order, intervention)
        if key not in self.members:
            raise IncompleteFamily(dict(key))
        return self.members[key]

    def has_member(self, intervention: Mapping[str, int]) -> bool:
        return intervention_key(self.dag.order, intervention) in self.members

    def full_interventions(self) -> Iterable[dict[str, int]]:
        """Every assignment to the whole target set."""
        A = self.dag.targets
        for values in product_cells([self.cards[t] for t in A]):
            yield dict(zip(A, values))

    def sub_interventions(self) -> Iterable[dict[str, int]]:
        """Every assignment to every subset of the targets, smallest first."""
        A = self.dag.targets
        for r in range(len(A) + 1):
            for D in itertools.combinations(A, r):
                for values in product_cells([self.cards[t] for t in D]):
                    yield dict(zip(D, values))

    @property
    def scope(self) -> str:
        if all(self.has_member(iv) for iv in self.sub_interventions()):
            return "P_A_subseteq"
        if all(self.has_member(iv) for iv in self.full_interventions()):
            return "P_A"
        return "partial"

    def observed(self) -> FiniteDistribution:
        return self.member({})

    # -- serialization --------------------------------------------------

    def to_json(self) -> dict:
        entries = sorted(self.members.items(), key=lambda kv: (len(kv[0]), kv[0]))
        return {
            "graph": serialize_dag(self.dag),
            "cardinalities": dict(self.cards),
            "members": [
                {"intervention": {v: s for v, s in key}, "dist": dist.to_json()}
                for key, dist in entries
            ],
        }

    @classmethod
    def from_json(cls, document, base_dir=None) -> "CounterfactualFamily":
        if isinstance(document, (str, bytes)):
            document = json.loads(document)
        if not isinstance(document, Mapping):
            raise InvalidDocument("family spec must be a JSON object")
        unknown = set(document) - {"graph", "cardinalities", "members"}
        if unknown:
            raise InvalidDocument(f"unexpected family fields: {sorted(unknown)}")
        dag = parse_dag(load_graph_field(document.get("graph"), base_dir))
        members = []
        for entry in document.get("members", []):
            if not isinstance(entry, Mapping) or set(entry) != {"intervention", "dist"}:
                raise InvalidDocument(f"bad member entry: {entry!r}")
            members.append((dict(entry["intervention"]), FiniteDistribution.from_json(entry["dist"])))
        return cls(dag, document["cardinalities"], members)


# -- helpers -------------------------------------------------------------


def load_graph_field(value, base_dir=None):
    """Inline graph documents pass through; strings are paths to one."""
    if value is None:
        raise InvalidDocument("spec lacks 'graph'")
    if isinstance(value, str):
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return json.loads(path.read_text(encoding="utf-8"))
    return value


def _subsets(items: Sequence[str]):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def _value_cells(cards: Mapping[str, int], names: Sequence[str]):
    return product_cells([cards[n] for n in names])


def _as_dict(names: Sequence[str], values: Sequence[int]) -> dict[str, int]:
    return dict(zip(names, values))


def _check_disjoint_targets(fam: CounterfactualFamily, B, C):
    A = set(fam.dag.targets)
    B, C = tuple(B), tuple(C)
    if not set(B) <= A or not set(C) <= A:
        raise InvalidQuery("B and C must be subsets of the targets")
    if set(B) & set(C):
        raise InvalidQuery("B and C must be disjoint")
    return B, C


# -- checkers -------------------------------------------------------------


def check_distributional_consistency(fam: CounterfactualFamily) -> CheckReport:
    """Intervening on one target at its natural value changes nothing.

    For every target, every context intervention on other targets, and every
    joint cell whose natural value of the target equals the intervened value,
    the two member laws must agree exactly.
    """
    report = CheckReport("distributional-consistency", True)
    A = fam.dag.targets
    order = fam.dag.order
    for b_i in A:
        others = tuple(t for t in A if t != b_i)
        pos = order.index(b_i)
        for C in _subsets(others):
            for c in _value_cells(fam.cards, C):
                ctx = _as_dict(C, c)
                base = fam.member(ctx)
                for b in range(fam.cards[b_i]):
                    with_b = fam.member({**ctx, b_i: b})
                    for cell in base.cells():
                        if cell[pos] != b:
                            continue
                        lhs, rhs = with_b.p(cell), base.p(cell)
                        if lhs != rhs:
                            report.holds = False
                            report.witnesses.append(
                                {
                                    "target": b_i,
                                    "context": ctx,
                                    "value": b,
                                    "cell": _as_dict(order, cell),
                                    "lhs": lhs,
                                    "rhs": rhs,
                                }
                            )
    return report


def check_vector_consistency(fam: CounterfactualFamily, B, C) -> CheckReport:
    """Joint form of consistency for a whole target subset at once."""
    B, C = _check_disjoint_targets(fam, B, C)
    report = CheckReport("vector-consistency", True)
    order = fam.dag.order
    b_pos = [order.index(v) for v in B]
    for c in _value_cells(fam.cards, C):
        ctx = _as_dict(C, c)
        base = fam.member(ctx)
        for b in _value_cells(fam.cards, B):
            joint = fam.member({**ctx, **_as_dict(B, b)})
            for cell in base.cells():
                if tuple(cell[i] for i in b_pos) != tuple(b):
                    continue
                lhs, rhs = joint.p(cell), base.p(cell)
                if lhs != rhs:
                    report.holds = False
                    report.witnesses.append(
                        {
                            "B": _as_dict(B, b),
                            "context": ctx,
                            "cell": _as_dict(order, cell),
                            "lhs": lhs,
                            "rhs": rhs,
                        }
                    )
    return report


def check_conditional_consistency(fam: CounterfactualFamily, B, C, Y, W) -> CheckReport:
    """Conditional law of Y given (B at its natural values, W) is invariant
    to additionally intervening on B at those same values."""
    B, C = _check_disjoint_targets(fam, B, C)
    Y, W = tuple(Y), tuple(W)
    V = set(fam.dag.vertices)
    if not Y:
        raise InvalidQuery("Y must be non-empty")
    if (set(Y) | set(W)) - (V - set(B)):
        raise InvalidQuery("Y and W must avoid B")
    if set(Y) & set(W):
        raise InvalidQuery("Y and W must be disjoint")
    report = CheckReport("conditional-consistency", True)
    order = fam.dag.order
    given = tuple(v for v in order if v in set(B) | set(W))
    b_slots = [i for i, v in enumerate(given) if v in set(B)]
    for c in _value_cells(fam.cards, C):
        ctx = _as_dict(C, c)
        base_table = fam.member(ctx).conditional(Y, given)
        for b in _value_cells(fam.cards, B):
            joint_table = fam.member({**ctx, **_as_dict(B, b)}).conditional(Y, given)
            picked = {v: s for v, s in zip(B, b)}
            for gcell in product_cells([fam.cards[v] for v in given]):
                if tuple(gcell[i] for i in b_slots) != tuple(picked[given[i]] for i in b_slots):
                    continue
                r1, r2 = joint_table.row(gcell), base_table.row(gcell)
                if r1 is None or r2 is None:
                    report.skipped += 1
                    continue
                if r1 != r2:
                    report.holds = False
                    report.witnesses.append(
                        {
                            "B": picked,
                            "context": ctx,
                            "given_cell": _as_dict(given, gcell),
                            "lhs": r1,
                            "rhs": r2,
                        }
                    )
    return report


def reduce_interventions(fam: CounterfactualFamily, B, C, W, mode: str = "joint", Y=()) -> CheckReport:
    """Premise-then-conclusion test for dropping an intervention on B.

    Premise: the law indexed by the B-assignment does not actually vary with
    it. Conclusion: the law then equals the member where B is not intervened
    on at all. In conditional mode the compared objects are conditional
    tables of Y given W with B inside the conditioning set.
    """
    B, C = _check_disjoint_targets(fam, B, C)
    W = tuple(W)
    if mode not in ("joint", "conditional"):
        raise InvalidQuery(f"unknown mode {mode!r}")
    if not set(B) <= set(W):
        raise InvalidQuery("B must be contained in W")
    if set(W) - set(fam.dag.vertices):
        raise InvalidQuery("W must be a subset of the vertices")
    Y = tuple(Y)
    if mode == "conditional":
        if not Y:
            raise InvalidQuery("conditional mode requires a non-empty Y")
        if set(Y) & set(W):
            raise InvalidQuery("Y and W must be disjoint")
    report = CheckReport(f"reduce-interventions-{mode}", True)
    order = fam.dag.order
    w_ordered = tuple(v for v in order if v in set(W))
    for c in _value_cells(fam.cards, C):
        ctx = _as_dict(C, c)
        entry = {"context": ctx, "premise": "holds", "conclusion": None}
        if mode == "joint":
            laws = {}
            for b in _value_cells(fam.cards, B):
                laws[b] = fam.member({**ctx, **_as_dict(B, b)}).marginal(w_ordered)
            values = sorted(laws)
            first = laws[values[0]]
            varying = next((b for b in values if laws[b] != first), None)
            if varying is not None:
                entry["premise"] = "failed"
                entry["witness"] = {"b": _as_dict(B, values[0]), "b_other": _as_dict(B, varying)}
            else:
                base = fam.member(ctx).marginal(w_ordered)
                if first == base:
                    entry["conclusion"] = "holds"
                else:
                    entry["conclusion"] = "violated"
                    report.holds = False
        else:
            tables = {}
            for b in _value_cells(fam.cards, B):
                tables[b] = fam.member({**ctx, **_as_dict(B, b)}).conditional(Y, w_ordered)
            values = sorted(tables)
            premise_ok = True
            for i in range(1, len(values)):
                eq, cell, sk = rows_equal(tables[values[0]].rows, tables[values[i]].rows)
                report.skipped += sk
                if not eq:
                    premise_ok = False
                    entry["premise"] = "failed"
                    entry["witness"] = {
                        "b": _as_dict(B, values[0]),
                        "b_other": _as_dict(B, values[i]),
                        "given_cell": _as_dict(w_ordered, cell),
                    }
                    break
            if premise_ok:
                base = fam.member(ctx).conditional(Y, w_ordered)
                eq, cell, sk = rows_equal(tables[values[0]].rows, base.rows)
                report.skipped += sk
                if eq:
                    entry["conclusion"] = "holds"
                else:
                    entry["conclusion"] = "violated"
                    entry["witness"] = {"given_cell": _as_dict(w_ordered, cell)}
                    report.holds = False
        report.details.append(entry)
    return report


def _interventional_rows(fam: CounterfactualFamily, dag: Dag, v: str):
    """Row family of ``v`` given its predecessors across all full interventions.

    Context cells run over the intervention assignment (coordinates ``a:T``)
    followed by the natural values of the predecessors (coordinates ``w:U``).
    """
    A = dag.targets
    pre = [u for u in dag.order if u in dag.predecessors(v)]
    context_vars = [f"a:{t}" for t in A] + [f"w:{u}" for u in pre]
    rows: dict[tuple, object] = {}
    for a in _value_cells(fam.cards, A):
        member = fam.member(_as_dict(A, a))
        table = member.conditional((v,), pre)
        for w in product_cells([fam.cards[u] for u in pre]):
            rows[tuple(a) + tuple(w)] = table.row(w)
    return rows, context_vars, pre


def check_swig_local_markov(fam: CounterfactualFamily, dag: Dag | None = None) -> CheckReport:
    """Local Markov property over the fully intervened members.

    For each vertex, the conditional law given its predecessors may depend
    only on the assigned values of intervened parents and the natural values
    of non-intervened parents.
    """
    dag = dag or fam.dag
    report = CheckReport("swig-local-markov", True)
    A = set(dag.targets)
    for v in dag.order:
        rows, context_vars, _ = _interventional_rows(fam, dag, v)
        pa = dag.parents(v)
        projection = {f"a:{t}" for t in pa & A} | {f"w:{u}" for u in pa - A}
        dep = depends_only_on(rows, context_vars, projection)
        report.skipped += dep.skipped
        detail = {
            "vertex": v,
            "holds": dep.holds,
            "dependence_set": sorted(
                {t.lower() for t in pa & A} | (pa - A)
            ),
        }
        if not dep.holds:
            report.holds = False
            detail["witness"] = [dict(w) for w in dep.witness]
            report.witnesses.append({"vertex": v, "pair": [dict(w) for w in dep.witness]})
        report.details.append(detail)
    return report


def check_complete_graph_markov(fam: CounterfactualFamily, order: Sequence[str] | None = None) -> CheckReport:
    """Local Markov property against the complete graph over the order.

    Equivalent to requiring only a time order (no dependence on later
    interventions) and ignorability (no dependence on the natural values of
    intervened predecessors).
    """
    order = tuple(order) if order is not None else fam.dag.order
    complete = Dag(fam.dag.vertices, (), fam.dag.targets, order).complete_supergraph()
    report = check_swig_local_markov(fam, complete)
    report.check = "complete-graph-markov"
    return report


def check_no_future_effect(fam: CounterfactualFamily, k: str) -> CheckReport:
    """Interventions on targets at or after ``k`` do not move the law of the
    variables up to ``k``."""
    dag = fam.dag
    if k not in set(dag.vertices):
        raise UnknownVertex(k)
    report = CheckReport("no-future-effect", True)
    A = dag.targets
    prefix = [u for u in dag.order if dag.rank(u) <= dag.rank(k)]
    early = [t for t in A if dag.rank(t) < dag.rank(k)]
    for a in _value_cells(fam.cards, A):
        full = _as_dict(A, a)
        lhs = fam.member(full).marginal(prefix)
        sub = {t: full[t] for t in early}
        rhs = fam.member(sub).marginal(prefix)
        if lhs != rhs:
            cell = next(c for c in lhs.cells() if lhs.p(c) != rhs.p(c))
            report.holds = False
            report.witnesses.append(
                {
                    "a": full,
                    "cell": _as_dict(prefix, cell),
                    "lhs": lhs.p(cell),
                    "rhs": rhs.p(cell),
                }
            )
            break
    return report


KERNEL_CHAIN_STEPS = (
    "drop-future-targets",
    "drop-nonparent-targets",
    "shrink-to-parents",
    "drop-intervened-parents",
)


def kernel_chain_check(fam: CounterfactualFamily, dag: Dag, i: str, a: Mapping[str, int]) -> CheckReport:
    """Chain of conditional-law reductions for one vertex and intervention.

    Successively: forget interventions after ``i``; forget interventions on
    non-parents; shrink the conditioning set from all predecessors to the
    parents; drop intervened parents from the random conditioning set. Each
    step is an exact equality of conditional tables on commonly defined rows.
    """
    if i not in set(dag.vertices):
        raise UnknownVertex(i)
    A = dag.targets
    a = {t: int(a[t]) for t in A}
    pre = [u for u in dag.order if u in dag.predecessors(i)]
    pa = [u for u in dag.order if u in dag.parents(i)]
    pa_minus_A = [u for u in pa if u not in set(A)]
    report = CheckReport("kernel-chain", True)

    pre_targets = {t: a[t] for t in A if dag.rank(t) < dag.rank(i)}
    pa_targets = {t: a[t] for t in A if t in set(pa)}
    t_full = fam.member(a).conditional((i,), pre)
    t_pre = fam.member(pre_targets).conditional((i,), pre)
    t_pa = fam.member(pa_targets).conditional((i,), pre)
    t_pa_cond = fam.member(pa_targets).conditional((i,), pa)
    t_pa_reduced = fam.member(pa_targets).conditional((i,), pa_minus_A)

    def record(step, ok, witness):
        entry = {"step": step, "holds": ok}
        if witness is not None:
            entry["witness"] = witness
        report.details.append(entry)
        if not ok:
            report.holds = False
            report.witnesses.append(entry)

    eq, cell, sk = rows_equal(t_full.rows, t_pre.rows)
    report.skipped += sk
    record(KERNEL_CHAIN_STEPS[0], eq, None if eq else {"given_cell": _as_dict(pre, cell)})

    eq, cell, sk = rows_equal(t_pre.rows, t_pa.rows)
    report.skipped += sk
    record(KERNEL_CHAIN_STEPS[1], eq, None if eq else {"given_cell": _as_dict(pre, cell)})

    # conditioning on all predecessors must collapse to conditioning on parents
    pa_slots = [pre.index(u) for u in pa]
    ok, witness = True, None
    for w in product_cells([fam.cards[u] for u in pre]):
        r_full = t_pa.row(w)
        r_pa = t_pa_cond.row(tuple(w[j] for j in pa_slots))
        if r_full is None or r_pa is None:
            report.skipped += 1
            continue
        if r_full != r_pa:
            ok, witness = False, {"given_cell": _as_dict(pre, w)}
            break
    record(KERNEL_CHAIN_STEPS[2], ok, witness)

    red_slots = [pa.index(u) for u in pa_minus_A]
    ok, witness = True, None
    for w in product_cells([fam.cards[u] for u in pa]):
        r_pa = t_pa_cond.row(w)
        r_red = t_pa_reduced.row(tuple(w[j] for j in red_slots))
        if r_pa is None or r_red is None:
            report.skipped += 1
            continue
        if r_pa != r_red:
            ok, witness = False, {"given_cell": _as_dict(pa, w)}
            break
    record(KERNEL_CHAIN_STEPS[3], ok, witness)
    return report


def check_observed_markov(p: FiniteDistribution, dag: Dag) -> CheckReport:
    """Ordered local Markov property of a single law with respect to a DAG."""
    if set(p.names) != set(dag.vertices):
        raise InvalidQuery("law is not over the graph vertices")
    report = CheckReport("observed-markov", True)
    for v in dag.order:
        pre = [u for u in dag.order if u in dag.predecessors(v)]
        table = p.conditional((v,), pre)
        rows = {cell: table.row(cell) for cell in product_cells([p.cards[u] for u in pre])}
        dep = depends_only_on(rows, pre, dag.parents(v))
        report.skipped += dep.skipped
        detail = {"vertex": v, "holds": dep.holds}
        if not dep.holds:
            report.holds = False
            detail["witness"] = [dict(w) for w in dep.witness]
            report.witnesses.append({"vertex": v, "pair": [dict(w) for w in dep.witness]})
        report.details.append(detail)
    return report


# -- construction ---------------------------------------------------------


def observational_cpts(p: FiniteDistribution, dag: Dag) -> dict[str, ConditionalTable]:
    return {v: p.conditional((v,), [u for u in dag.order if u in dag.parents(v)]) for v in dag.order}


def gformula_member(
    dag: Dag,
    cards: Mapping[str, int],
    cpts: Mapping[str, ConditionalTable],
    intervention: Mapping[str, int],
) -> FiniteDistribution:
    """One interventional law assembled from observational conditionals.

    Cell mass is the product over vertices of the conditional probability of
    the cell value given the parent context, where intervened parents
    contribute their assigned values instead of the cell's. A zero factor
    short-circuits the cell; a needed-but-undefined conditional row aborts
    with the offending vertex and conditioning cell.
    """
    order = dag.order
    idx = {v: j for j, v in enumerate(order)}
    parent_lists = {v: [u for u in order if u in dag.parents(v)] for v in order}
    mass = {}
    for cell in product_cells([cards[v] for v in order]):
        acc = None
        for v in order:
            parent_cell = tuple(
                int(intervention[u]) if u in intervention else cell[idx[u]]
                for u in parent_lists[v]
            )
            row = cpts[v].row(parent_cell)
            if row is None:
                raise NotIdentified(v, _as_dict(parent_lists[v], parent_cell))
            factor = row.get((cell[idx[v]],), ZERO)
            acc = factor if acc is None else acc * factor
            if acc == 0:
                break
        if acc:
            mass[cell] = acc
    return FiniteDistribution(tuple((v, cards[v]) for v in order), mass)


def build_ffrcistg(dag: Dag, targets, p: FiniteDistribution) -> CounterfactualFamily:
    """Family over every target subset defined by the extended g-formula.

    The observational law should be strictly positive; when it is not, any
    intervention that needs an undefined conditional row raises
    :class:`NotIdentified`. If ``p`` fails the ordinary Markov property for
    the graph the construction still runs; the failure is attached to the
    returned family as ``observed_markov``.
    """
    targets = tuple(targets) if targets is not None else dag.targets
    if set(targets) != set(dag.targets):
        dag = Dag(dag.vertices, sorted(dag.edges), targets, dag.order)
    if set(p.names) != set(dag.vertices):
        raise InvalidQuery("law is not over the graph vertices")
    p = p.reorder(dag.order)
    cards = p.cards
    cpts = observational_cpts(p, dag)
    members: dict[tuple, FiniteDistribution] = {}
    for r in range(len(dag.targets) + 1):
        for D in itertools.combinations(dag.targets, r):
            for d in _value_cells(cards, D):
                iv = _as_dict(D, d)
                members[intervention_key(dag.order, iv)] = gformula_member(dag, cards, cpts, iv)
    fam = CounterfactualFamily(dag, cards, members)
    object.__setattr__(fam, "observed_markov", check_observed_markov(p, dag))
    return fam
