"""Forward (efficiency-increasing) passes.

One application = one deterministic whole-function sweep, visiting blocks in
RPO and instructions in order. Rewrites erase the instructions they render
dead immediately; nothing else is cleaned up (that is dce's job). Every pass
takes and returns a valid Function and reports whether anything changed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .analysis import (
    compute_dominators,
    dominance_frontiers,
    find_natural_loops,
    known_bits,
    use_def,
)
from .cost import DEFAULT_COST_MODEL
from .ir import (
    BINOPS,
    MASK32,
    BasicBlock,
    Function,
    Instruction,
    Literal,
    Operand,
    ValueRef,
    canonical_hash,
    fresh_names,
    predecessors,
    rpo_order,
    substitute,
    successors,
)


@dataclass(frozen=True)
class PassOutcome:
    changed: bool
    function: Function
    warnings: tuple[str, ...] = ()


def _is_lit(op: Operand, value: int | None = None) -> bool:
    return isinstance(op, Literal) and (value is None or op.value == value)


def erasable(ins: Instruction) -> bool:
    """Pure and trap-free: safe to drop when the result is unused."""
    if ins.result is None or ins.opcode in ("load", "store"):
        return False
    if ins.opcode in ("udiv", "urem"):
        return _is_lit(ins.operands[1]) and ins.operands[1].value != 0
    return True


# mutable working form: ordered {label: [Instruction | None]}; None = erased
def _edit(f: Function) -> dict[str, list[Instruction | None]]:
    return {b.label: list(b.instrs) for b in f.blocks}


def _freeze(f: Function, blocks: dict[str, list[Instruction | None]],
            subst: dict[str, Operand] | None = None,
            order: list[str] | None = None) -> Function:
    labels = order if order is not None else [b.label for b in f.blocks if b.label in blocks]
    out = Function(f.name, f.params, tuple(
        BasicBlock(lbl, tuple(i for i in blocks[lbl] if i is not None)) for lbl in labels
    ))
    return substitute(out, subst) if subst else out


def _use_counts(blocks: dict[str, list[Instruction | None]]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for instrs in blocks.values():
        for ins in instrs:
            if ins is None:
                continue
            for op in ins.operands:
                if isinstance(op, ValueRef):
                    counts[op.name] = counts.get(op.name, 0) + 1
    return counts


def _erase_dead(blocks: dict[str, list[Instruction | None]], seeds: set[str]) -> None:
    """Transitively erase trap-free pure defs in `seeds` once their use count
    hits zero, feeding their operands back into the candidate set."""
    worklist = set(seeds)
    while worklist:
        counts = _use_counts(blocks)
        progressed = False
        for lbl, instrs in blocks.items():
            for i, ins in enumerate(instrs):
                if ins is None or ins.result not in worklist:
                    continue
                if counts.get(ins.result, 0) == 0 and erasable(ins):
                    instrs[i] = None
                    worklist.discard(ins.result)
                    for op in ins.operands:
                        if isinstance(op, ValueRef):
                            worklist.add(op.name)
                    progressed = True
        if not progressed:
            break


def _rpo_instrs(f: Function):
    index = {b.label: b for b in f.blocks}
    for lbl in rpo_order(f):
        for i, ins in enumerate(index[lbl].instrs):
            yield lbl, i, ins


# ---------------------------------------------------------------------------
# const-fold

def _fold_binop(opcode: str, a: int, b: int) -> int | None:
    if opcode in ("udiv", "urem") and b == 0:
        return None  # would trap; never fold
    from .interp import _binop

    val, trap = _binop(opcode, a, b)
    assert trap is None
    return val


def apply_const_fold(f: Function) -> PassOutcome:
    """Evaluate binops over two literals; propagate to a fixpoint in one call.
    condbr on a literal becomes br (phi incomings on the dropped edge removed)."""
    changed = False
    while True:
        blocks = _edit(f)
        subst: dict[str, Operand] = {}
        fired = False
        for lbl, instrs in blocks.items():
            for i, ins in enumerate(instrs):
                if ins is None:
                    continue
                if ins.opcode in BINOPS and _is_lit(ins.operands[0]) and _is_lit(ins.operands[1]):
                    val = _fold_binop(ins.opcode, ins.operands[0].value, ins.operands[1].value)
                    if val is not None:
                        subst[ins.result] = Literal(val)
                        instrs[i] = None
                        fired = True
                elif ins.opcode == "condbr" and _is_lit(ins.operands[0]):
                    taken = ins.labels[0] if ins.operands[0].value != 0 else ins.labels[1]
                    dropped = ins.labels[1] if taken == ins.labels[0] else ins.labels[0]
                    instrs[i] = Instruction(None, "br", (), (taken,))
                    if dropped != taken:
                        dlist = blocks[dropped]
                        for j, phi in enumerate(dlist):
                            if phi is not None and phi.is_phi and lbl in phi.labels:
                                keep = [(o, l) for o, l in zip(phi.operands, phi.labels) if l != lbl]
                                dlist[j] = replace(phi,
                                                   operands=tuple(o for o, _ in keep),
                                                   labels=tuple(l for _, l in keep))
                    fired = True
        if not fired:
            return PassOutcome(changed, f)
        changed = True
        f = _freeze(f, blocks, subst)


# ---------------------------------------------------------------------------
# identity-simplify

def _identity_result(ins: Instruction) -> Operand | None:
    a, b = ins.operands
    op = ins.opcode
    if op == "add":
        if _is_lit(b, 0):
            return a
        if _is_lit(a, 0):
            return b
    elif op == "sub":
        if _is_lit(b, 0):
            return a
        if a == b:
            return Literal(0)
    elif op == "mul":
        if _is_lit(b, 1):
            return a
        if _is_lit(a, 1):
            return b
        if _is_lit(b, 0) or _is_lit(a, 0):
            return Literal(0)
    elif op == "or":
        if _is_lit(b, 0):
            return a
        if _is_lit(a, 0):
            return b
    elif op == "xor":
        if _is_lit(b, 0):
            return a
        if _is_lit(a, 0):
            return b
        if a == b:
            return Literal(0)
    elif op == "and":
        if a == b:
            return a
    elif op == "shl":
        if _is_lit(b, 0):
            return a
    elif op == "udiv":
        if _is_lit(b, 1):
            return a
    elif op == "urem":
        if _is_lit(b, 1):
            return Literal(0)
    return None


def apply_identity_simplify(f: Function) -> PassOutcome:
    blocks = _edit(f)
    subst: dict[str, Operand] = {}
    changed = False

    def resolve(op: Operand) -> Operand:
        while isinstance(op, ValueRef) and op.name in subst:
            op = subst[op.name]
        return op

    index = {b.label: b for b in f.blocks}
    for lbl in rpo_order(f):
        instrs = blocks[lbl]
        for i, ins in enumerate(index[lbl].instrs):
            if ins.opcode not in BINOPS or ins.result is None:
                continue
            resolved = replace(ins, operands=tuple(resolve(o) for o in ins.operands))
            out = _identity_result(resolved)
            if out is not None:
                subst[ins.result] = out
                instrs[i] = None
                changed = True
    return PassOutcome(changed, _freeze(f, blocks, subst) if changed else f)


# ---------------------------------------------------------------------------
# strength-reduce

def apply_strength_reduce(f: Function) -> PassOutcome:
    blocks = _edit(f)
    changed = False
    for lbl, instrs in blocks.items():
        for i, ins in enumerate(instrs):
            if ins is None or ins.opcode != "mul":
                continue
            a, b = ins.operands
            if _is_lit(a) and not _is_lit(b):
                a, b = b, a
            if isinstance(b, Literal) and b.value >= 2 and b.value & (b.value - 1) == 0:
                instrs[i] = Instruction(ins.result, "shl", (a, Literal(b.value.bit_length() - 1)))
                changed = True
    return PassOutcome(changed, _freeze(f, blocks) if changed else f)


# ---------------------------------------------------------------------------
# divmul-to-rem

def apply_divmul_to_rem(f: Function) -> PassOutcome:
    """sub x, (mul (udiv x, c), c)  ->  urem x, c   (mul single-use, c >= 1)."""
    changed = False
    while True:
        ud = use_def(f)
        site = None
        for lbl, i, ins in _rpo_instrs(f):
            if ins.opcode != "sub" or not isinstance(ins.operands[1], ValueRef):
                continue
            x, uref = ins.operands
            usite = ud.defs.get(uref.name)
            if usite is None or ud.use_count(uref.name) != 1:
                continue
            mul = f.block(usite[0]).instrs[usite[1]]
            if mul.opcode != "mul":
                continue
            ma, mb = mul.operands
            if _is_lit(ma) and isinstance(mb, ValueRef):
                ma, mb = mb, ma
            if not (isinstance(ma, ValueRef) and isinstance(mb, Literal) and mb.value >= 1):
                continue
            tsite = ud.defs.get(ma.name)
            if tsite is None:
                continue
            div = f.block(tsite[0]).instrs[tsite[1]]
            if div.opcode != "udiv" or div.operands[0] != x or div.operands[1] != mb:
                continue
            site = (lbl, i, x, mb, uref.name, ma.name)
            break
        if site is None:
            return PassOutcome(changed, f)
        lbl, i, x, c, uname, tname = site
        blocks = _edit(f)
        blocks[lbl][i] = Instruction(f.block(lbl).instrs[i].result, "urem", (x, c))
        _erase_dead(blocks, {uname, tname})
        f = _freeze(f, blocks)
        changed = True


# ---------------------------------------------------------------------------
# add-to-or

def apply_add_to_or(f: Function) -> PassOutcome:
    """add a, b -> or a, b when no bit position can be one in both operands.
    add x, 0 is left to identity-simplify."""
    kb = known_bits(f)

    def possible(op: Operand) -> int:
        if isinstance(op, Literal):
            return op.value
        return kb[op.name].possible_ones

    blocks = _edit(f)
    changed = False
    for lbl, instrs in blocks.items():
        for i, ins in enumerate(instrs):
            if ins is None or ins.opcode != "add":
                continue
            a, b = ins.operands
            if _is_lit(a, 0) or _is_lit(b, 0):
                continue
            if possible(a) & possible(b) == 0:
                instrs[i] = replace(ins, opcode="or")
                changed = True
    return PassOutcome(changed, _freeze(f, blocks) if changed else f)


# ---------------------------------------------------------------------------
# reassociate

def _signed(c: int) -> int:
    return c - (1 << 32) if c >= (1 << 31) else c


def _canonical_index(f: Function) -> dict[str, int]:
    order: dict[str, int] = {}
    for p in f.params:
        order[p] = len(order)
    index = {b.label: b for b in f.blocks}
    seen = set(order)
    from .ir import block_order_with_unreachable

    for lbl in block_order_with_unreachable(f):
        for ins in index[lbl].instrs:
            if ins.result is not None and ins.result not in seen:
                seen.add(ins.result)
                order[ins.result] = len(order)
    return order


def _linearize(f: Function, ud, root: Instruction) -> tuple[dict[str, int], int, set[str]]:
    """Collapse the maximal add/sub/mul-by-literal tree under root into
    leaf -> coefficient (mod 2^32), a constant term, and the absorbed defs."""
    terms: dict[str, int] = {}
    const = 0
    absorbed: set[str] = set()
    index = {b.label: b for b in f.blocks}

    def walk(op: Operand, coeff: int) -> None:
        nonlocal const
        coeff &= MASK32
        if isinstance(op, Literal):
            const = (const + coeff * op.value) & MASK32
            return
        site = ud.defs.get(op.name)
        ins = index[site[0]].instrs[site[1]] if site else None
        if ins is not None and ud.use_count(op.name) == 1:
            if ins.opcode == "add":
                absorbed.add(op.name)
                walk(ins.operands[0], coeff)
                walk(ins.operands[1], coeff)
                return
            if ins.opcode == "sub":
                absorbed.add(op.name)
                walk(ins.operands[0], coeff)
                walk(ins.operands[1], -coeff)
                return
            if ins.opcode == "mul":
                a, b = ins.operands
                if _is_lit(a) and not _is_lit(b):
                    a, b = b, a
                if isinstance(b, Literal):
                    absorbed.add(op.name)
                    walk(a, coeff * b.value)
                    return
        terms[op.name] = (terms.get(op.name, 0) + coeff) & MASK32

    walk(root.operands[0], 1)
    walk(root.operands[1], (1 << 32) - 1 if root.opcode == "sub" else 1)
    return terms, const, absorbed


def _emit_linear(f: Function, terms: dict[str, int], const: int,
                 namer) -> tuple[list[Instruction], Operand]:
    """Re-emit sum(coeff * leaf) + const in canonical leaf order: positive
    terms as mul/add, negative ones as sub, the constant last."""
    idx = _canonical_index(f)
    pos = [(idx[n], n, c) for n, c in terms.items() if 0 < _signed(c)]
    neg = [(idx[n], n, (-_signed(c)) & MASK32) for n, c in terms.items() if _signed(c) < 0]
    pos.sort()
    neg.sort()
    out: list[Instruction] = []

    def term(name: str, c: int) -> Operand:
        if c == 1:
            return ValueRef(name)
        r = namer()
        out.append(Instruction(r, "mul", (ValueRef(name), Literal(c))))
        return ValueRef(r)

    def join(op: str, a: Operand, b: Operand) -> Operand:
        r = namer()
        out.append(Instruction(r, op, (a, b)))
        return ValueRef(r)

    const_used = False
    if pos:
        acc = term(pos[0][1], pos[0][2])
        for _, n, c in pos[1:]:
            acc = join("add", acc, term(n, c))
    else:
        acc = Literal(const)
        const_used = True
    for _, n, c in neg:
        acc = join("sub", acc, term(n, c))
    if not const_used and const != 0:
        if _signed(const) > 0:
            acc = join("add", acc, Literal(const))
        else:
            acc = join("sub", acc, Literal((-_signed(const)) & MASK32))
    return out, acc


def apply_reassociate(f: Function) -> PassOutcome:
    """Canonicalize maximal add/sub trees (mul-by-literal absorbed as a
    coefficient): combine like terms, order leaves by canonical value index,
    re-emit. A root is skipped when re-emission would cost more or change
    nothing."""
    model = DEFAULT_COST_MODEL
    original = f
    # roots scanned bottom-up so outer trees claim absorbable inner nodes
    seq = list(_rpo_instrs(f))
    roots: list[str] = []
    claimed: set[str] = set()
    ud = use_def(f)
    for lbl, i, ins in reversed(seq):
        if ins.opcode not in ("add", "sub") or ins.result in claimed:
            continue
        terms, const, absorbed = _linearize(f, ud, ins)
        claimed |= absorbed
        roots.append(ins.result)
    roots.reverse()  # apply in program order

    changed = False
    counter = 0
    for root_name in roots:
        ud = use_def(f)
        site = ud.defs.get(root_name)
        if site is None:
            continue
        lbl, i = site
        root = f.block(lbl).instrs[i]
        if root.opcode not in ("add", "sub"):
            continue
        terms, const, absorbed = _linearize(f, ud, root)

        taken_names = set(f.params) | set(ud.defs)

        def namer() -> str:
            nonlocal counter
            while True:
                cand = f"t{counter}"
                counter += 1
                if cand not in taken_names:
                    taken_names.add(cand)
                    return cand

        emitted, acc = _emit_linear(f, terms, const, namer)
        index = {b.label: b for b in f.blocks}
        old_cost = model.cost(root.opcode) + sum(
            model.cost(index[ud.defs[n][0]].instrs[ud.defs[n][1]].opcode) for n in absorbed
        )
        new_cost = sum(model.cost(ins.opcode) for ins in emitted)
        if new_cost > old_cost:
            continue
        blocks = _edit(f)
        cell = blocks[lbl]
        cell[i:i + 1] = emitted
        candidate = _freeze(f, blocks, {root_name: acc})
        blocks2 = _edit(candidate)
        _erase_dead(blocks2, set(absorbed))
        candidate = _freeze(candidate, blocks2)
        if canonical_hash(candidate) == canonical_hash(f):
            continue
        f = candidate
        changed = True
    if changed and canonical_hash(f) == canonical_hash(original):
        return PassOutcome(False, original)
    return PassOutcome(changed, f if changed else original)


# ---------------------------------------------------------------------------
# cse

_PURE_FOR_CSE = set(BINOPS) | {"select"}


def apply_cse(f: Function) -> PassOutcome:
    """Dominance-scoped common subexpression elimination; operand order is
    semantic, loads are impure here."""
    dt = compute_dominators(f)
    index = {b.label: b for b in f.blocks}
    subst: dict[str, Operand] = {}
    dead: list[tuple[str, int]] = []

    def resolve(op: Operand) -> Operand:
        while isinstance(op, ValueRef) and op.name in subst:
            op = subst[op.name]
        return op

    table: dict[tuple, str] = {}

    def walk(lbl: str) -> None:
        added: list[tuple] = []
        for i, ins in enumerate(index[lbl].instrs):
            if ins.opcode not in _PURE_FOR_CSE or ins.result is None:
                continue
            key = (ins.opcode, tuple(resolve(o) for o in ins.operands))
            if key in table:
                subst[ins.result] = ValueRef(table[key])
                dead.append((lbl, i))
            else:
                table[key] = ins.result
                added.append(key)
        for child in dt.children(lbl):
            walk(child)
        for key in added:
            del table[key]

    walk(dt.rpo[0])
    if not dead:
        return PassOutcome(False, f)
    blocks = _edit(f)
    for lbl, i in dead:
        blocks[lbl][i] = None
    return PassOutcome(True, _freeze(f, blocks, subst))


# ---------------------------------------------------------------------------
# cond-prop

def apply_cond_prop(f: Function) -> PassOutcome:
    """Inside a region only reachable through one edge of a condbr, recomputed
    copies of the branch condition are constants: clones of the defining
    instruction fold to 1 on the true edge (icmp only; any nonzero value takes
    it) and to 0 on the false edge."""
    dt = compute_dominators(f)
    preds = predecessors(f)
    ud = use_def(f)
    index = {b.label: b for b in f.blocks}
    subst: dict[str, Operand] = {}
    dead: set[str] = set()
    spent: set[str] = set()
    changed = False

    def subtree(lbl: str) -> list[str]:
        out = [lbl]
        for c in dt.children(lbl):
            out.extend(subtree(c))
        return out

    blocks = _edit(f)
    for lbl in rpo_order(f):
        term = index[lbl].instrs[-1]
        if term.opcode != "condbr" or not isinstance(term.operands[0], ValueRef):
            continue
        t, e = term.labels
        if t == e:
            continue
        site = ud.defs.get(term.operands[0].name)
        if site is None:
            continue
        dins = index[site[0]].instrs[site[1]]
        if dins.opcode not in _PURE_FOR_CSE:
            continue
        for tgt, lit in ((t, 1), (e, 0)):
            if preds.get(tgt) != [lbl] or tgt not in dt.idom:
                continue
            if lit == 1 and not dins.opcode.startswith("icmp"):
                continue  # true edge only proves "nonzero" for non-boolean defs
            for rlbl in subtree(tgt):
                for i, ins in enumerate(index[rlbl].instrs):
                    if (ins.result is not None and ins.result not in dead
                            and ins.result != dins.result
                            and ins.opcode == dins.opcode
                            and ins.operands == dins.operands):
                        subst[ins.result] = Literal(lit)
                        dead.add(ins.result)
                        blocks[rlbl][i] = None
                        spent.update(o.name for o in ins.operands if isinstance(o, ValueRef))
                        changed = True
    if not changed:
        return PassOutcome(False, f)
    _erase_dead(blocks, spent)
    return PassOutcome(True, _freeze(f, blocks, subst))


# ---------------------------------------------------------------------------
# simplifycfg

def apply_simplifycfg(f: Function) -> PassOutcome:
    """condbr with equal targets becomes br; unreachable blocks go away;
    a block with a lone predecessor that jumps straight to it is merged."""
    changed = False
    while True:
        fired = False

        # condbr x, L, L  ->  br L
        blocks = _edit(f)
        spent: set[str] = set()
        for lbl, instrs in blocks.items():
            last = instrs[-1]
            if last is not None and last.opcode == "condbr" and last.labels[0] == last.labels[1]:
                instrs[-1] = Instruction(None, "br", (), (last.labels[0],))
                if isinstance(last.operands[0], ValueRef):
                    spent.add(last.operands[0].name)
                fired = True
        if fired:
            _erase_dead(blocks, spent)
            f = _freeze(f, blocks)
            changed = True
            continue

        # drop unreachable blocks, trimming phi incomings from removed preds
        reach = set(rpo_order(f))
        if len(reach) < len(f.blocks):
            blocks = _edit(f)
            order = [b.label for b in f.blocks if b.label in reach]
            for lbl in order:
                instrs = blocks[lbl]
                for j, ins in enumerate(instrs):
                    if ins is not None and ins.is_phi:
                        keep = [(o, l) for o, l in zip(ins.operands, ins.labels) if l in reach]
                        if len(keep) != len(ins.labels):
                            instrs[j] = replace(ins, operands=tuple(o for o, _ in keep),
                                                labels=tuple(l for _, l in keep))
                    # defs that lived only in dropped blocks cannot be referenced
                    # from reachable code (dominance), so no substitution needed
            f = _freeze(f, {l: blocks[l] for l in order}, order=order)
            changed = True
            continue

        # merge B -> C when B ends with `br C` and C has no other predecessor
        preds = predecessors(f)
        merged = False
        for b in f.blocks:
            last = b.instrs[-1] if b.instrs else None
            if last is None or last.opcode != "br":
                continue
            c = last.labels[0]
            if c == b.label or preds.get(c) != [b.label]:
                continue
            cblk = f.block(c)
            subst: dict[str, Operand] = {}
            tail: list[Instruction] = []
            for ins in cblk.instrs:
                if ins.is_phi:
                    subst[ins.result] = ins.operands[0]  # single pred, single incoming
                else:
                    tail.append(ins)
            blocks = _edit(f)
            blocks[b.label] = list(b.instrs[:-1]) + tail
            del blocks[c]
            order = [x.label for x in f.blocks if x.label != c]
            g = _freeze(f, blocks, subst, order=order)
            # phis downstream still name C as the incoming edge
            from .ir import rename_blocks

            f = rename_blocks(g, {c: b.label})
            merged = True
            changed = True
            break
        if merged:
            continue
        return PassOutcome(changed, f)


# ---------------------------------------------------------------------------
# mem2reg

def _promotable_allocas(f: Function) -> list[str]:
    ud = use_def(f)
    reach = set(rpo_order(f))
    index = {b.label: b for b in f.blocks}
    out = []
    for lbl, i, ins in _rpo_instrs(f):
        if ins.opcode != "alloca":
            continue
        ok = True
        for ulbl, ui, uj in ud.uses.get(ins.result, ()):
            if ulbl not in reach:
                ok = False  # the rename walk only covers reachable blocks
                break
            user = index[ulbl].instrs[ui]
            if not ((user.opcode == "load" and uj == 0) or (user.opcode == "store" and uj == 1)):
                ok = False  # address escapes
                break
            if user.opcode == "store":
                v = user.operands[0]
                if isinstance(v, ValueRef):
                    vd = ud.defs.get(v.name)
                    if vd is not None and index[vd[0]].instrs[vd[1]].opcode == "alloca":
                        ok = False  # cell would hold an address; keep kinds intact
                        break
        if ok:
            out.append(ins.result)
    return out


def _promote_one(f: Function, p: str) -> tuple[Function, list[str]]:
    warnings: list[str] = []
    dt = compute_dominators(f)
    df = dominance_frontiers(f, dt)
    index = {b.label: b for b in f.blocks}
    preds = predecessors(f)

    loads: dict[str, list[int]] = {}
    stores: dict[str, list[int]] = {}
    for lbl in dt.rpo:
        for i, ins in enumerate(index[lbl].instrs):
            if ins.opcode == "load" and ins.operands[0] == ValueRef(p):
                loads.setdefault(lbl, []).append(i)
            elif ins.opcode == "store" and ins.operands[1] == ValueRef(p):
                stores.setdefault(lbl, []).append(i)

    # liveness: does the cell's value flow into a load not preceded by a store?
    gen = set()
    kill = set(stores)
    for lbl, idxs in loads.items():
        first_store = min(stores.get(lbl, [1 << 30]))
        if min(idxs) < first_store:
            gen.add(lbl)
    live_in = set(gen)
    while True:
        grew = False
        for lbl in dt.rpo:
            if lbl not in live_in and lbl not in kill:
                if any(s in live_in for s in successors(index[lbl])):
                    live_in.add(lbl)
                    grew = True
        if not grew:
            break

    # pruned SSA: phis at the iterated dominance frontier, where live
    phiblocks: set[str] = set()
    work = list(stores)
    while work:
        x = work.pop()
        for y in sorted(df.get(x, ())):
            if y not in phiblocks and y in live_in:
                phiblocks.add(y)
                work.append(y)

    rank = {l: i for i, l in enumerate(dt.rpo)}
    phi_order = sorted(phiblocks, key=lambda l: rank[l])
    names = fresh_names(f, f"{p}_", len(phi_order))
    phi_name = dict(zip(phi_order, names))
    phi_incoming: dict[str, dict[str, Operand]] = {lbl: {} for lbl in phi_order}

    blocks = _edit(f)
    subst: dict[str, Operand] = {}

    def current(stack: list[Operand], where: str) -> Operand:
        if stack:
            return stack[-1]
        warnings.append(f"UninitPromotion: @{f.name} %{p} read before any store near {where}")
        return Literal(0)

    def resolve(op: Operand) -> Operand:
        while isinstance(op, ValueRef) and op.name in subst:
            op = subst[op.name]
        return op

    def walk(lbl: str, stack: list[Operand]) -> None:
        depth = len(stack)
        if lbl in phi_name:
            stack.append(ValueRef(phi_name[lbl]))
        for i, ins in enumerate(index[lbl].instrs):
            if ins.opcode == "load" and ins.operands[0] == ValueRef(p):
                subst[ins.result] = current(stack, lbl)
                blocks[lbl][i] = None
            elif ins.opcode == "store" and ins.operands[1] == ValueRef(p):
                stack.append(resolve(ins.operands[0]))
                blocks[lbl][i] = None
            elif ins.opcode == "alloca" and ins.result == p:
                blocks[lbl][i] = None
        for s in successors(index[lbl]):
            if s in phi_incoming:
                phi_incoming[s][lbl] = current(stack, lbl)
        for child in dt.children(lbl):
            walk(child, stack)
        del stack[depth:]

    walk(dt.rpo[0], [])

    for lbl in phi_order:
        inc = phi_incoming[lbl]
        ops, lbls = [], []
        for q in preds[lbl]:
            ops.append(inc.get(q, Literal(0)))
            if q not in inc:
                warnings.append(f"UninitPromotion: @{f.name} %{p} undefined on edge {q}->{lbl}")
            lbls.append(q)
        phi = Instruction(phi_name[lbl], "phi", tuple(ops), tuple(lbls))
        instrs = blocks[lbl]
        at = 0
        for at, ins in enumerate(instrs):
            if ins is None or not ins.is_phi:
                break
        instrs.insert(at, phi)

    return _freeze(f, blocks, subst), warnings


def apply_mem2reg(f: Function) -> PassOutcome:
    """Promote allocas touched only by load/store into SSA values: phis at
    (live) dominance frontiers, loads replaced by reaching values, loads
    before any store become literal 0 with a warning."""
    warnings: list[str] = []
    changed = False
    while True:
        todo = _promotable_allocas(f)
        if not todo:
            return PassOutcome(changed, f, tuple(warnings))
        f, w = _promote_one(f, todo[0])
        warnings.extend(w)
        changed = True


# ---------------------------------------------------------------------------
# licm

def _loop_invariant_ok(ins: Instruction) -> bool:
    if ins.result is None or ins.is_phi or ins.opcode in ("load", "store", "alloca"):
        return False
    return erasable(ins)  # same trap-free purity bar


def apply_licm(f: Function) -> PassOutcome:
    """Hoist trap-free pure instructions whose operands live outside the loop
    into the preheader. Loads and stores never move."""
    changed = False
    while True:
        forest = find_natural_loops(f)
        loops = sorted(forest.loops, key=lambda lp: (len(lp.body), lp.header))
        moved = False
        for lp in loops:
            if lp.preheader is None:
                continue
            defblock = {}
            for b in f.blocks:
                for ins in b.instrs:
                    if ins.result is not None:
                        defblock[ins.result] = b.label

            def outside(op: Operand) -> bool:
                return isinstance(op, Literal) or defblock.get(op.name) not in lp.body

            index = {b.label: b for b in f.blocks}
            for lbl in [l for l in rpo_order(f) if l in lp.body]:
                for i, ins in enumerate(index[lbl].instrs):
                    if _loop_invariant_ok(ins) and all(outside(o) for o in ins.operands):
                        blocks = _edit(f)
                        blocks[lbl][i] = None
                        pre = blocks[lp.preheader]
                        pre.insert(len(pre) - 1, ins)
                        f = _freeze(f, blocks)
                        moved = True
                        changed = True
                        break
                if moved:
                    break
            if moved:
                break
        if not moved:
            return PassOutcome(changed, f)


# ---------------------------------------------------------------------------
# dse

def apply_dse(f: Function) -> PassOutcome:
    """Erase stores whose value can never be observed: overwritten before any
    load, or with no load of the same cell reachable afterwards."""
    index = {b.label: b for b in f.blocks}
    alloca_names = [ins.result for _, _, ins in _rpo_instrs(f) if ins.opcode == "alloca"]
    blocks = _edit(f)
    spent: set[str] = set()
    changed = False
    for p in alloca_names:
        pref = ValueRef(p)

        def first_access(lbl: str) -> str | None:
            for ins in index[lbl].instrs:
                if ins.opcode == "load" and ins.operands[0] == pref:
                    return "load"
                if ins.opcode == "store" and ins.operands[1] == pref:
                    return "store"
            return None

        for lbl in rpo_order(f):
            instrs = index[lbl].instrs
            for i, ins in enumerate(instrs):
                if ins.opcode != "store" or ins.operands[1] != pref:
                    continue
                live = False
                overwritten = False
                for later in instrs[i + 1:]:
                    if later.opcode == "load" and later.operands[0] == pref:
                        live = True
                        break
                    if later.opcode == "store" and later.operands[1] == pref:
                        overwritten = True
                        break
                if not live and not overwritten:
                    # scan forward through the CFG for a load of p; a store on
                    # the way kills the path
                    seen: set[str] = set()
                    work = list(successors(index[lbl]))
                    while work:
                        s = work.pop()
                        if s in seen:
                            continue
                        seen.add(s)
                        acc = first_access(s)
                        if acc == "load":
                            live = True
                            break
                        if acc is None:
                            work.extend(successors(index[s]))
                if not live:
                    blocks[lbl][i] = None
                    for op in ins.operands:
                        if isinstance(op, ValueRef):
                            spent.add(op.name)
                    changed = True
    if not changed:
        return PassOutcome(False, f)
    _erase_dead(blocks, spent)
    return PassOutcome(True, _freeze(f, blocks))


# ---------------------------------------------------------------------------
# dce

def apply_dce(f: Function) -> PassOutcome:
    blocks = _edit(f)
    changed = False
    while True:
        counts = _use_counts(blocks)
        fired = False
        for lbl, instrs in blocks.items():
            for i, ins in enumerate(instrs):
                if ins is None or ins.result is None:
                    continue
                if counts.get(ins.result, 0) == 0 and erasable(ins):
                    instrs[i] = None
                    fired = True
        if not fired:
            break
        changed = True
    return PassOutcome(changed, _freeze(f, blocks) if changed else f)


# ---------------------------------------------------------------------------

FORWARD_PASSES: dict[str, callable] = {
    "const-fold": apply_const_fold,
    "identity-simplify": apply_identity_simplify,
    "strength-reduce": apply_strength_reduce,
    "divmul-to-rem": apply_divmul_to_rem,
    "add-to-or": apply_add_to_or,
    "reassociate": apply_reassociate,
    "cse": apply_cse,
    "cond-prop": apply_cond_prop,
    "simplifycfg": apply_simplifycfg,
    "mem2reg": apply_mem2reg,
    "licm": apply_licm,
    "dse": apply_dse,
    "dce": apply_dce,
}


def apply_pass(name: str, f: Function) -> PassOutcome:
    if name not in FORWARD_PASSES:
        raise KeyError(f"unknown pass '{name}'")
    return FORWARD_PASSES[name](f)
