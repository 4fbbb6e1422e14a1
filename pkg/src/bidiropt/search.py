"""Phase-ordering search.

exhaustive_search walks every distinct program reachable through forward
passes (deduplicated by canonical digest) and returns the best one under the
rank key. ibo wraps it: reverse passes generate detour variants, each variant
is exhaustively re-optimized, and a strictly better result replaces the
incumbent. The rank key ends with the canonical text, so "best" is a total
order and every outcome is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .cost import CostModel, DEFAULT_COST_MODEL, rank_key, static_size
from .ir import CanonicalDigest, Function, canonical_hash
from .passes import FORWARD_PASSES, apply_pass
from .reverse import REVERSE_PASSES, reverse_variants

FRONTIER_POLICIES = ("cheap-first", "worst-first", "all")


@dataclass(frozen=True)
class SearchLimits:
    max_sequence_length: int = 12
    max_programs_explored: int = 200_000
    max_instructions_per_program: int = 512
    cap_per_pass: int = 8
    ibo_max_frontier: int = 256


@dataclass(frozen=True)
class SearchOutcome:
    best_function: Function
    best_key: tuple
    best_sequence: tuple[str, ...]
    start_key: tuple
    explored: int
    saturated_leaves: int
    pruned_by_hash: int
    truncated: int
    skipped_oversize: int


class BudgetExceeded(Exception):
    """Raised when a search hits max_programs_explored. Carries the best
    result found up to that point."""

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


class ReplayDiverged(Exception):
    pass


class PassCache:
    """Digest-keyed memo of pass applications, shared across the sub-searches
    of one ibo run so overlapping search spaces are only walked once."""

    def __init__(self) -> None:
        self.apps: dict[tuple[CanonicalDigest, str], tuple[bool, Function]] = {}
        self.searches: dict[tuple, SearchOutcome] = {}
        self.hits = 0

    def apply(self, name: str, f: Function, digest: CanonicalDigest) -> tuple[bool, Function]:
        key = (digest, name)
        got = self.apps.get(key)
        if got is not None:
            self.hits += 1
            return got
        out = apply_pass(name, f)
        got = (out.changed, out.function)
        self.apps[key] = got
        return got


def exhaustive_search(f: Function,
                      passes: tuple[str, ...] | None = None,
                      limits: SearchLimits = SearchLimits(),
                      model: CostModel = DEFAULT_COST_MODEL,
                      workload=None,
                      cache: PassCache | None = None) -> SearchOutcome:
    """Depth-first enumeration of the forward phase-ordering space, children
    in pass declaration order, revisits pruned by canonical digest."""
    names = tuple(passes) if passes is not None else tuple(FORWARD_PASSES)
    cache = cache if cache is not None else PassCache()

    start_digest = canonical_hash(f)
    start_key = rank_key(f, model, workload)
    visited: set[CanonicalDigest] = {start_digest}
    stats = {"explored": 1, "saturated": 0, "pruned": 0, "truncated": 0, "oversize": 0}
    best = {"key": start_key, "fn": f, "seq": ()}
    path: list[str] = []

    def consider(g: Function, key) -> None:
        if key < best["key"]:
            best["key"] = key
            best["fn"] = g
            best["seq"] = tuple(path)

    def walk(g: Function, digest: CanonicalDigest) -> None:
        if len(path) >= limits.max_sequence_length:
            stats["truncated"] += 1
            return
        any_child = False
        for name in names:
            changed, child = cache.apply(name, g, digest)
            if not changed:
                continue
            any_child = True
            if static_size(child) > limits.max_instructions_per_program:
                stats["oversize"] += 1
                continue
            cd = canonical_hash(child)
            if cd in visited:
                stats["pruned"] += 1
                continue
            visited.add(cd)
            stats["explored"] += 1
            path.append(name)
            consider(child, rank_key(child, model, workload))
            if stats["explored"] >= limits.max_programs_explored:
                path.pop()
                raise BudgetExceeded(
                    f"explored {stats['explored']} programs (limit "
                    f"{limits.max_programs_explored})", _outcome())
            walk(child, cd)
            path.pop()
        if not any_child:
            stats["saturated"] += 1

    def _outcome() -> SearchOutcome:
        return SearchOutcome(
            best_function=best["fn"], best_key=best["key"], best_sequence=best["seq"],
            start_key=start_key, explored=stats["explored"],
            saturated_leaves=stats["saturated"], pruned_by_hash=stats["pruned"],
            truncated=stats["truncated"], skipped_oversize=stats["oversize"])

    walk(f, start_digest)
    return _outcome()


# ---------------------------------------------------------------------------
# iterative reverse-then-optimize

@dataclass(frozen=True)
class IboIteration:
    iteration: int
    frontier_size: int
    variants_generated: int
    searches_run: int
    cache_hits: int
    best_key: tuple
    improved: bool


@dataclass(frozen=True)
class IboOutcome:
    best_function: Function
    best_key: tuple
    best_provenance: tuple[str, ...]
    baseline: SearchOutcome
    iterations: tuple[IboIteration, ...]
    total_programs: int


def ibo(f: Function,
        iterations: int,
        passes: tuple[str, ...] | None = None,
        reverses: tuple[str, ...] = REVERSE_PASSES,
        limits: SearchLimits = SearchLimits(),
        model: CostModel = DEFAULT_COST_MODEL,
        workload=None,
        frontier_policy: str = "cheap-first",
        reverse_from: str = "frontier",
        single_variant: bool = False) -> IboOutcome:
    """Reverse-then-optimize around exhaustive search.

    Iteration zero is exhaustive search on the input; with iterations=0 the
    result is exactly that baseline. Each following iteration applies every
    configured reverse pass to every frontier program, exhaustively
    re-optimizes each variant, and keeps the result only when strictly
    better. The frontier then becomes the variants themselves (with
    reverse_from="optimized" it is re-seeded from the current best), ordered
    by the frontier policy and truncated to ibo_max_frontier.
    """
    if frontier_policy not in FRONTIER_POLICIES:
        raise ValueError(f"unknown frontier policy '{frontier_policy}'")
    if reverse_from not in ("frontier", "optimized"):
        raise ValueError(f"unknown reverse_from '{reverse_from}'")

    cache = PassCache()
    cap = 1 if single_variant else limits.cap_per_pass

    def run_search(g: Function, budget_left: int) -> tuple[SearchOutcome, bool]:
        key = (canonical_hash(g),)
        got = cache.searches.get(key)
        if got is not None:
            return got, True
        sub_limits = replace(limits, max_programs_explored=budget_left)
        out = exhaustive_search(g, passes, sub_limits, model, workload, cache)
        cache.searches[key] = out
        return out, False

    try:
        baseline = exhaustive_search(f, passes, limits, model, workload, cache)
    except BudgetExceeded as e:
        raise BudgetExceeded(str(e), IboOutcome(
            e.partial.best_function, e.partial.best_key, e.partial.best_sequence,
            e.partial, (), e.partial.explored)) from None
    cache.searches[(canonical_hash(f),)] = baseline
    total = baseline.explored
    best_fn = baseline.best_function
    best_key = baseline.best_key
    best_prov: tuple[str, ...] = baseline.best_sequence
    trace: list[IboIteration] = []

    def partial() -> IboOutcome:
        return IboOutcome(best_fn, best_key, best_prov, baseline, tuple(trace), total)

    # frontier members carry the reverse-step provenance that produced them
    frontier: list[tuple[Function, tuple[str, ...]]] = [(f, ())]

    for it in range(1, iterations + 1):
        if reverse_from == "optimized":
            frontier = [(best_fn, best_prov)]
        produced: list[tuple[Function, tuple[str, ...]]] = []
        seen: set[CanonicalDigest] = set()
        generated = 0
        for member, prov in frontier:
            for rname in reverses:
                for v in reverse_variants(rname, member, cap=cap):
                    generated += 1
                    if static_size(v.function) > limits.max_instructions_per_program:
                        continue
                    d = canonical_hash(v.function)
                    if d in seen:
                        continue
                    seen.add(d)
                    produced.append((v.function, prov + (v.step,)))

        if frontier_policy == "cheap-first":
            produced.sort(key=lambda pair: rank_key(pair[0], model, workload))
        elif frontier_policy == "worst-first":
            produced.sort(key=lambda pair: rank_key(pair[0], model, workload), reverse=True)
        produced = produced[:limits.ibo_max_frontier]

        hits = 0
        searched = 0
        improved = False
        for g, prov in produced:
            if total >= limits.max_programs_explored:
                raise BudgetExceeded(
                    f"ibo explored {total} programs (limit "
                    f"{limits.max_programs_explored})", partial())
            try:
                sub, was_hit = run_search(g, limits.max_programs_explored - total)
            except BudgetExceeded as e:
                total += e.partial.explored
                if e.partial.best_key < best_key:
                    best_key = e.partial.best_key
                    best_fn = e.partial.best_function
                    best_prov = prov + e.partial.best_sequence
                raise BudgetExceeded(str(e), partial()) from None
            if was_hit:
                hits += 1
            else:
                searched += 1
                total += sub.explored
            if sub.best_key < best_key:
                best_key = sub.best_key
                best_fn = sub.best_function
                best_prov = prov + sub.best_sequence
                improved = True
        trace.append(IboIteration(it, len(frontier), generated, searched, hits,
                                  best_key, improved))
        frontier = produced

    return IboOutcome(best_fn, best_key, best_prov, baseline, tuple(trace), total)


# ---------------------------------------------------------------------------
# equivalence-class exploration

@dataclass(frozen=True)
class ClassGraph:
    start: CanonicalDigest
    nodes: dict[CanonicalDigest, Function]
    edges: tuple[tuple[CanonicalDigest, str, CanonicalDigest], ...]
    truncated: bool


@dataclass(frozen=True)
class ClosureReport:
    verdict: str  # "closed" | "violated" | "inconclusive"
    components: int
    violations: tuple[tuple[CanonicalDigest, str, CanonicalDigest], ...]


def explore_sep_class(f: Function,
                      passes: tuple[str, ...] | None = None,
                      reverses: tuple[str, ...] = REVERSE_PASSES,
                      limits: SearchLimits = SearchLimits()) -> ClassGraph:
    """Breadth-first neighborhood of f under forward and reverse rewrites,
    out to max_sequence_length steps or max_programs_explored nodes.

    Reverse rewrites can grow a program forever, so the class is only finite
    inside a size envelope: children over max_instructions_per_program are
    outside the class by definition (their edges are dropped, and that alone
    does not mark the graph truncated). Truncation means the walk was cut
    short by the depth or node budget while work remained.
    """
    names = tuple(passes) if passes is not None else tuple(FORWARD_PASSES)
    start = canonical_hash(f)
    nodes: dict[CanonicalDigest, Function] = {start: f}
    edges: list[tuple[CanonicalDigest, str, CanonicalDigest]] = []
    frontier = [start]
    truncated = False
    depth = 0
    while frontier and depth < limits.max_sequence_length:
        depth += 1
        nxt: list[CanonicalDigest] = []
        for d in frontier:
            g = nodes[d]
            children: list[tuple[str, Function]] = []
            for name in names:
                out = apply_pass(name, g)
                if out.changed:
                    children.append((name, out.function))
            for rname in reverses:
                for v in reverse_variants(rname, g, cap=limits.cap_per_pass):
                    children.append((v.step, v.function))
            for label, child in children:
                if static_size(child) > limits.max_instructions_per_program:
                    continue
                cd = canonical_hash(child)
                if cd not in nodes:
                    if len(nodes) >= limits.max_programs_explored:
                        truncated = True
                        continue
                    nodes[cd] = child
                    nxt.append(cd)
                edges.append((d, label, cd))
        frontier = nxt
    if frontier:
        truncated = True
    return ClassGraph(start, nodes, tuple(edges), truncated)


def check_closure(graph: ClassGraph) -> ClosureReport:
    """Forward edges (undirected) define the optimization neighborhood;
    every reverse edge must stay inside its component."""
    parent: dict[CanonicalDigest, CanonicalDigest] = {d: d for d in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    forward = [e for e in graph.edges if "@" not in e[1]]
    rev = [e for e in graph.edges if "@" in e[1]]
    for a, _, b in forward:
        union(a, b)
    violations = tuple((a, l, b) for a, l, b in rev if find(a) != find(b))
    components = len({find(d) for d in graph.nodes})
    if violations and graph.truncated:
        return ClosureReport("inconclusive", components, violations)
    if violations:
        return ClosureReport("violated", components, violations)
    return ClosureReport("closed", components, ())


# ---------------------------------------------------------------------------
# provenance replay

def replay_sequence(f: Function, steps, limits: SearchLimits = SearchLimits()) -> Function:
    """Re-run a provenance sequence: bare names are forward passes,
    name@index picks that variant from the reverse enumeration. Diverges
    loudly instead of silently drifting."""
    g = f
    for step in steps:
        if "@" in step:
            rname, _, idx = step.partition("@")
            variants = reverse_variants(rname, g, cap=limits.cap_per_pass)
            i = int(idx)
            if i >= len(variants):
                raise ReplayDiverged(f"{step}: only {len(variants)} variants here")
            g = variants[i].function
        else:
            out = apply_pass(step, g)
            if not out.changed:
                raise ReplayDiverged(f"{step}: pass did not fire")
            g = out.function
    return g
