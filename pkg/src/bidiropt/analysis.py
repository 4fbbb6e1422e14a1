"""Function-level analyses: dominators, natural loops, known bits, use-def.

All analyses assume a valid function and look only at reachable blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import (
    MASK32,
    Function,
    Instruction,
    Literal,
    Operand,
    ValueRef,
    predecessors,
    rpo_order,
    successors,
)


@dataclass(frozen=True)
class DomTree:
    """Immediate dominators over reachable blocks; entry maps to itself."""

    idom: dict[str, str]
    rpo: tuple[str, ...]

    def dominates(self, a: str, b: str) -> bool:
        # walk idom chain from b up to entry
        cur = b
        while True:
            if cur == a:
                return True
            nxt = self.idom[cur]
            if nxt == cur:
                return False
            cur = nxt

    def strictly_dominates(self, a: str, b: str) -> bool:
        return a != b and self.dominates(a, b)

    def children(self, lbl: str) -> list[str]:
        rank = {l: i for i, l in enumerate(self.rpo)}
        kids = [l for l, p in self.idom.items() if p == lbl and l != lbl]
        return sorted(kids, key=lambda l: rank[l])

    def dominance_frontier(self) -> dict[str, set[str]]:
        raise NotImplementedError  # built by callers that also hold the CFG


def compute_dominators(f: Function) -> DomTree:
    """Iterative RPO dataflow (Cooper-Harvey-Kennedy), plenty for small CFGs."""
    order = rpo_order(f)
    rank = {lbl: i for i, lbl in enumerate(order)}
    preds = predecessors(f)
    idom: dict[str, str] = {order[0]: order[0]}

    def intersect(a: str, b: str) -> str:
        while a != b:
            while rank[a] > rank[b]:
                a = idom[a]
            while rank[b] > rank[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for lbl in order[1:]:
            ps = [p for p in preds[lbl] if p in idom]
            if not ps:
                continue
            new = ps[0]
            for p in ps[1:]:
                new = intersect(new, p)
            if idom.get(lbl) != new:
                idom[lbl] = new
                changed = True
    return DomTree(idom=idom, rpo=tuple(order))


def dominance_frontiers(f: Function, dt: DomTree) -> dict[str, set[str]]:
    preds = predecessors(f)
    df: dict[str, set[str]] = {lbl: set() for lbl in dt.rpo}
    for lbl in dt.rpo:
        ps = [p for p in preds[lbl] if p in df]
        if len(ps) < 2:
            continue
        for p in ps:
            runner = p
            while runner != dt.idom[lbl]:
                df[runner].add(lbl)
                runner = dt.idom[runner]
    return df


@dataclass(frozen=True)
class Loop:
    """One natural loop: header plus every block on a path to a latch."""

    header: str
    body: frozenset[str]
    latches: tuple[str, ...]
    preheader: str | None


@dataclass(frozen=True)
class LoopForest:
    loops: tuple[Loop, ...]
    parent: dict[str, str | None]  # header -> enclosing loop header

    def innermost(self, lbl: str) -> Loop | None:
        best = None
        for lp in self.loops:
            if lbl in lp.body and (best is None or len(lp.body) < len(best.body)):
                best = lp
        return best


def find_natural_loops(f: Function, dt: DomTree | None = None) -> LoopForest:
    dt = dt or compute_dominators(f)
    preds = predecessors(f)
    index = {b.label: b for b in f.blocks}
    back: dict[str, list[str]] = {}
    for b in f.blocks:
        if b.label not in dt.idom:
            continue
        for s in successors(b):
            if s in dt.idom and dt.dominates(s, b.label):
                back.setdefault(s, []).append(b.label)

    loops: list[Loop] = []
    for header in dt.rpo:
        if header not in back:
            continue
        body = {header}
        stack = list(back[header])
        while stack:
            lbl = stack.pop()
            if lbl in body:
                continue
            body.add(lbl)
            stack.extend(p for p in preds[lbl] if p in dt.idom)
        outside = [p for p in preds[header] if p not in body and p in dt.idom]
        pre = None
        if len(outside) == 1 and len(successors(index[outside[0]])) == 1:
            pre = outside[0]
        loops.append(Loop(header, frozenset(body), tuple(sorted(back[header])), pre))

    parent: dict[str, str | None] = {}
    for lp in loops:
        enclosing = None
        for other in loops:
            if other is lp:
                continue
            if lp.body < other.body:
                if enclosing is None or other.body < enclosing.body:
                    enclosing = other
        parent[lp.header] = enclosing.header if enclosing else None
    return LoopForest(tuple(loops), parent)


# ---------------------------------------------------------------------------
# known bits

@dataclass(frozen=True)
class KnownBits:
    """Bit masks proven zero / proven one; zeros & ones is always 0."""

    zeros: int = 0
    ones: int = 0

    @property
    def possible_ones(self) -> int:
        return MASK32 & ~self.zeros

    def meet(self, other: "KnownBits") -> "KnownBits":
        # intersection of knowledge (phi/select join)
        return KnownBits(self.zeros & other.zeros, self.ones & other.ones)


UNKNOWN = KnownBits()


def _kb_literal(v: int) -> KnownBits:
    return KnownBits(zeros=MASK32 & ~v, ones=v)


def _kb_transfer(ins: Instruction, get) -> KnownBits:
    op = ins.opcode
    if op in ("and", "or", "xor", "add"):
        a, b = get(ins.operands[0]), get(ins.operands[1])
        if op == "and":
            return KnownBits(zeros=a.zeros | b.zeros, ones=a.ones & b.ones)
        if op == "or":
            return KnownBits(zeros=a.zeros & b.zeros, ones=a.ones | b.ones)
        if op == "xor":
            return KnownBits(
                zeros=(a.zeros & b.zeros) | (a.ones & b.ones),
                ones=(a.ones & b.zeros) | (a.zeros & b.ones),
            )
        # add: combinable only when no carry can occur anywhere
        if a.possible_ones & b.possible_ones == 0:
            return KnownBits(zeros=a.zeros & b.zeros, ones=a.ones | b.ones)
        return UNKNOWN
    if op in ("shl", "lshr") and isinstance(ins.operands[1], Literal):
        k = ins.operands[1].value % 32
        a = get(ins.operands[0])
        if op == "shl":
            return KnownBits(
                zeros=MASK32 & ((a.zeros << k) | ((1 << k) - 1)),
                ones=MASK32 & (a.ones << k),
            )
        return KnownBits(
            zeros=MASK32 & ((a.zeros >> k) | ~(MASK32 >> k)),
            ones=a.ones >> k,
        )
    if op == "urem" and isinstance(ins.operands[1], Literal) and ins.operands[1].value > 0:
        c = ins.operands[1].value
        width = (c - 1).bit_length()
        return KnownBits(zeros=MASK32 & ~((1 << width) - 1))
    if op == "udiv" and isinstance(ins.operands[1], Literal) and ins.operands[1].value > 1:
        # result < 2^32 / c, so the top floor(log2 c) bits are zero
        c = ins.operands[1].value
        t = c.bit_length() - 1
        return KnownBits(zeros=MASK32 & ~(MASK32 >> t))
    if op in ("phi", "select"):
        vals = ins.operands[1:] if op == "select" else ins.operands
        out: KnownBits | None = None
        for o in vals:
            k = get(o)
            out = k if out is None else out.meet(k)
        return out or UNKNOWN
    return UNKNOWN


def known_bits(f: Function) -> dict[str, KnownBits]:
    """Sound fixpoint from the all-unknown start; knowledge only grows."""
    kb: dict[str, KnownBits] = {p: UNKNOWN for p in f.params}
    for b in f.blocks:
        for ins in b.instrs:
            if ins.result is not None:
                kb[ins.result] = UNKNOWN

    def get(op: Operand) -> KnownBits:
        if isinstance(op, Literal):
            return _kb_literal(op.value)
        return kb.get(op.name, UNKNOWN)

    order = rpo_order(f)
    index = {b.label: b for b in f.blocks}
    changed = True
    while changed:
        changed = False
        for lbl in order:
            for ins in index[lbl].instrs:
                if ins.result is None or ins.opcode in ("alloca", "load"):
                    continue
                new = _kb_transfer(ins, get)
                if new != kb[ins.result]:
                    kb[ins.result] = new
                    changed = True
    return kb


# ---------------------------------------------------------------------------
# use-def

@dataclass(frozen=True)
class UseDef:
    """Def sites and use sites by value name."""

    defs: dict[str, tuple[str, int] | None]
    uses: dict[str, tuple[tuple[str, int, int], ...]]

    def use_count(self, name: str) -> int:
        return len(self.uses.get(name, ()))


def use_def(f: Function) -> UseDef:
    defs: dict[str, tuple[str, int] | None] = {p: None for p in f.params}
    uses: dict[str, list[tuple[str, int, int]]] = {p: [] for p in f.params}
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            if ins.result is not None:
                defs[ins.result] = (b.label, i)
                uses.setdefault(ins.result, [])
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            for j, op in enumerate(ins.operands):
                if isinstance(op, ValueRef) and op.name in defs:
                    uses[op.name].append((b.label, i, j))
    return UseDef(defs=defs, uses={k: tuple(v) for k, v in uses.items()})
