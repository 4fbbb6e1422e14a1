"""Core IR: a tiny SSA language over int32 with explicit blocks and phis.

Values are immutable; every rewrite builds a new Function. Blocks hold a flat
instruction tuple (phis first, one terminator last once validated), which lets
the parser stay lenient and validate() report structural breakage precisely.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace

MASK32 = (1 << 32) - 1

BINOPS = (
    "add", "sub", "mul", "udiv", "urem",
    "shl", "lshr", "and", "or", "xor",
    "icmp.eq", "icmp.ne", "icmp.ult", "icmp.ule",
)
COMMUTATIVE = ("add", "mul", "and", "or", "xor", "icmp.eq", "icmp.ne")
TERMINATORS = ("ret", "br", "condbr")
OPCODES = BINOPS + ("select", "alloca", "load", "store", "phi") + TERMINATORS

# operand counts per opcode; labels counted separately
_ARITY = {op: 2 for op in BINOPS}
_ARITY.update(select=3, alloca=0, load=1, store=2, ret=1, br=0, condbr=1)
_LABEL_ARITY = {"br": 1, "condbr": 2}


@dataclass(frozen=True)
class Literal:
    """32-bit unsigned constant; wrapping two's-complement semantics."""

    value: int


@dataclass(frozen=True)
class ValueRef:
    """Use of an SSA value by name (no sigil stored)."""

    name: str


Operand = Literal | ValueRef


@dataclass(frozen=True)
class Instruction:
    """One instruction; phis carry parallel (operands, labels) incoming lists."""

    result: str | None
    opcode: str
    operands: tuple[Operand, ...] = ()
    labels: tuple[str, ...] = ()

    @property
    def is_terminator(self) -> bool:
        return self.opcode in TERMINATORS

    @property
    def is_phi(self) -> bool:
        return self.opcode == "phi"


@dataclass(frozen=True)
class BasicBlock:
    label: str
    instrs: tuple[Instruction, ...] = ()

    @property
    def phis(self) -> tuple[Instruction, ...]:
        n = 0
        for ins in self.instrs:
            if not ins.is_phi:
                break
            n += 1
        return self.instrs[:n]

    @property
    def body(self) -> tuple[Instruction, ...]:
        # non-phi instructions before the terminator; meaningful on valid blocks
        return tuple(i for i in self.instrs[:-1] if not i.is_phi) if self.instrs else ()

    @property
    def terminator(self) -> Instruction:
        return self.instrs[-1]


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[str, ...] = ()
    blocks: tuple[BasicBlock, ...] = ()

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)


@dataclass(frozen=True)
class Module:
    functions: tuple[Function, ...] = ()

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)


class ParseError(Exception):
    """Syntax violation with a 1-based source position."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class ValidationError:
    kind: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.message}"


# ---------------------------------------------------------------------------
# printing

def _fmt_operand(op: Operand) -> str:
    return f"%{op.name}" if isinstance(op, ValueRef) else str(op.value)


def _fmt_instr(ins: Instruction) -> str:
    if ins.opcode == "phi":
        inc = ", ".join(
            f"[{_fmt_operand(v)}, {lbl}]" for v, lbl in zip(ins.operands, ins.labels)
        )
        return f"%{ins.result} = phi {inc}"
    if ins.opcode == "alloca":
        return f"%{ins.result} = alloca"
    if ins.opcode == "store":
        return f"store {_fmt_operand(ins.operands[0])}, {_fmt_operand(ins.operands[1])}"
    if ins.opcode == "ret":
        return f"ret {_fmt_operand(ins.operands[0])}"
    if ins.opcode == "br":
        return f"br {ins.labels[0]}"
    if ins.opcode == "condbr":
        return f"condbr {_fmt_operand(ins.operands[0])}, {ins.labels[0]}, {ins.labels[1]}"
    args = ", ".join(_fmt_operand(o) for o in ins.operands)
    return f"%{ins.result} = {ins.opcode} {args}"


def print_function(f: Function) -> str:
    lines = [f"func @{f.name}({', '.join('%' + p for p in f.params)}) {{"]
    for b in f.blocks:
        lines.append(f"{b.label}:")
        for ins in b.instrs:
            lines.append(f"  {_fmt_instr(ins)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def print_module(m: Module) -> str:
    return "\n".join(print_function(f) for f in m.functions)


# ---------------------------------------------------------------------------
# parsing

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_RE_FUNC = re.compile(rf"func\s+@({_IDENT})\s*\(([^)]*)\)\s*\{{\s*$")
_RE_LABEL = re.compile(rf"({_IDENT}):\s*$")
_RE_DEF = re.compile(rf"%({_IDENT})\s*=\s*(\S+)\s*(.*)$")
_RE_PHI_INC = re.compile(rf"\[\s*([^,\]]+)\s*,\s*({_IDENT})\s*\]")


def _strip(line: str) -> str:
    if ";" in line:
        line = line[: line.index(";")]
    return line.strip()


def _parse_operand(tok: str, lineno: int) -> Operand:
    tok = tok.strip()
    if tok.startswith("%"):
        name = tok[1:]
        if not re.fullmatch(_IDENT, name):
            raise ParseError(lineno, 1, f"bad value name '{tok}'")
        return ValueRef(name)
    if re.fullmatch(r"-?\d+", tok):
        v = int(tok)
        if not -(1 << 32) < v < (1 << 32):
            raise ParseError(lineno, 1, f"literal out of 32-bit range: {tok}")
        return Literal(v & MASK32)
    raise ParseError(lineno, 1, f"bad operand '{tok}'")


def _split_args(rest: str) -> list[str]:
    rest = rest.strip()
    return [t.strip() for t in rest.split(",")] if rest else []


def _parse_op_body(result: str | None, opcode: str, rest: str, lineno: int) -> Instruction:
    if opcode == "phi":
        incomings = _RE_PHI_INC.findall(rest)
        leftover = _RE_PHI_INC.sub("", rest).replace(",", "").strip()
        if not incomings or leftover:
            raise ParseError(lineno, 1, "malformed phi incoming list")
        ops = tuple(_parse_operand(v, lineno) for v, _ in incomings)
        lbls = tuple(lbl for _, lbl in incomings)
        return Instruction(result, "phi", ops, lbls)
    if opcode == "alloca":
        if rest.strip():
            raise ParseError(lineno, 1, "alloca takes no operands")
        return Instruction(result, "alloca")
    if opcode in ("br", "condbr"):
        toks = _split_args(rest)
        nlbl = _LABEL_ARITY[opcode]
        ops: list[Operand] = []
        if opcode == "condbr":
            if not toks:
                raise ParseError(lineno, 1, "condbr needs a condition")
            ops.append(_parse_operand(toks[0], lineno))
            toks = toks[1:]
        if len(toks) != nlbl or not all(re.fullmatch(_IDENT, t) for t in toks):
            raise ParseError(lineno, 1, f"{opcode} expects {nlbl} label(s)")
        return Instruction(result, opcode, tuple(ops), tuple(toks))
    ops = tuple(_parse_operand(t, lineno) for t in _split_args(rest))
    return Instruction(result, opcode, ops)


def _parse_instr(line: str, lineno: int) -> Instruction:
    m = _RE_DEF.match(line)
    if m:
        result, opcode, rest = m.group(1), m.group(2), m.group(3)
        if opcode not in OPCODES or opcode in TERMINATORS or opcode == "store":
            raise ParseError(lineno, line.index("=") + 2, f"unknown or valueless opcode '{opcode}'")
        return _parse_op_body(result, opcode, rest, lineno)
    parts = line.split(None, 1)
    opcode, rest = parts[0], parts[1] if len(parts) > 1 else ""
    if opcode not in ("store", "ret", "br", "condbr"):
        raise ParseError(lineno, 1, f"expected instruction, got '{line}'")
    return _parse_op_body(None, opcode, rest, lineno)


def parse_module(text: str) -> Module:
    """Parse the textual form; raises ParseError on syntax violations.

    Structural problems that the data model can represent (misplaced
    terminators, arity mistakes, unknown labels) are left for validate().
    """
    functions: list[Function] = []
    fname: str | None = None
    params: tuple[str, ...] = ()
    blocks: list[BasicBlock] = []
    label: str | None = None
    instrs: list[Instruction] = []

    def close_block() -> None:
        nonlocal label, instrs
        if label is not None:
            blocks.append(BasicBlock(label, tuple(instrs)))
        label, instrs = None, []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("func"):
            if fname is not None:
                raise ParseError(lineno, 1, "nested func (missing '}'?)")
            m = _RE_FUNC.match(line)
            if not m:
                raise ParseError(lineno, 1, "malformed func header")
            fname = m.group(1)
            ptoks = _split_args(m.group(2))
            for p in ptoks:
                if not p.startswith("%") or not re.fullmatch(_IDENT, p[1:]):
                    raise ParseError(lineno, 1, f"bad parameter '{p}'")
            params = tuple(p[1:] for p in ptoks)
            continue
        if line == "}":
            if fname is None:
                raise ParseError(lineno, 1, "'}' outside function")
            close_block()
            functions.append(Function(fname, params, tuple(blocks)))
            fname, params, blocks = None, (), []
            continue
        if fname is None:
            raise ParseError(lineno, 1, f"expected 'func', got '{line}'")
        m = _RE_LABEL.match(line)
        if m:
            close_block()
            label = m.group(1)
            continue
        if label is None:
            raise ParseError(lineno, 1, "instruction before first block label")
        instrs.append(_parse_instr(line, lineno))
    if fname is not None:
        raise ParseError(len(text.splitlines()) + 1, 1, "unterminated function (missing '}')")
    return Module(tuple(functions))


def parse_function(text: str) -> Function:
    m = parse_module(text)
    if len(m.functions) != 1:
        raise ParseError(1, 1, f"expected exactly one function, got {len(m.functions)}")
    return m.functions[0]


# ---------------------------------------------------------------------------
# CFG helpers

def successors(b: BasicBlock) -> tuple[str, ...]:
    return b.instrs[-1].labels if b.instrs and b.instrs[-1].is_terminator else ()


def predecessors(f: Function) -> dict[str, list[str]]:
    """Label -> predecessor labels, in block/edge order (duplicates collapsed)."""
    preds: dict[str, list[str]] = {b.label: [] for b in f.blocks}
    for b in f.blocks:
        for s in successors(b):
            if s in preds and b.label not in preds[s]:
                preds[s].append(b.label)
    return preds


def rpo_order(f: Function) -> list[str]:
    """Reverse postorder over reachable blocks, entry first; deterministic."""
    if not f.blocks:
        return []
    index = {b.label: b for b in f.blocks}
    seen: set[str] = set()
    post: list[str] = []

    def visit(lbl: str) -> None:
        stack = [(lbl, iter(successors(index[lbl])))]
        seen.add(lbl)
        while stack:
            cur, it = stack[-1]
            advanced = False
            for s in it:
                if s in index and s not in seen:
                    seen.add(s)
                    stack.append((s, iter(successors(index[s]))))
                    advanced = True
                    break
            if not advanced:
                post.append(cur)
                stack.pop()

    visit(f.blocks[0].label)
    return list(reversed(post))


def block_order_with_unreachable(f: Function) -> list[str]:
    """RPO followed by unreachable blocks in original order."""
    order = rpo_order(f)
    reached = set(order)
    order.extend(b.label for b in f.blocks if b.label not in reached)
    return order


# ---------------------------------------------------------------------------
# uses and renaming

def defined_values(f: Function) -> dict[str, tuple[str, int] | None]:
    """Value name -> (block label, instr index) for instruction defs, None for params."""
    defs: dict[str, tuple[str, int] | None] = {p: None for p in f.params}
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            if ins.result is not None:
                defs[ins.result] = (b.label, i)
    return defs


def uses_of(f: Function, name: str) -> list[tuple[str, int, int]]:
    """Occurrences of %name as an operand: (block label, instr index, operand index)."""
    out = []
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            for j, op in enumerate(ins.operands):
                if isinstance(op, ValueRef) and op.name == name:
                    out.append((b.label, i, j))
    return out


def substitute(f: Function, mapping: dict[str, Operand]) -> Function:
    """Rewrite every operand occurrence per mapping (defs untouched)."""
    def sub(op: Operand) -> Operand:
        while isinstance(op, ValueRef) and op.name in mapping:
            nxt = mapping[op.name]
            if nxt == op:
                break
            op = nxt
        return op

    blocks = []
    for b in f.blocks:
        instrs = tuple(
            replace(ins, operands=tuple(sub(o) for o in ins.operands)) for ins in b.instrs
        )
        blocks.append(BasicBlock(b.label, instrs))
    return Function(f.name, f.params, tuple(blocks))


def rename_values(f: Function, mapping: dict[str, str]) -> Function:
    """Alpha-rename values (defs and uses); names absent from mapping are kept."""
    def newname(n: str) -> str:
        return mapping.get(n, n)

    blocks = []
    for b in f.blocks:
        instrs = []
        for ins in b.instrs:
            ops = tuple(
                ValueRef(newname(o.name)) if isinstance(o, ValueRef) else o
                for o in ins.operands
            )
            res = newname(ins.result) if ins.result is not None else None
            instrs.append(replace(ins, result=res, operands=ops))
        blocks.append(BasicBlock(b.label, tuple(instrs)))
    return Function(f.name, tuple(newname(p) for p in f.params), tuple(blocks))


def rename_blocks(f: Function, mapping: dict[str, str]) -> Function:
    def newlbl(l: str) -> str:
        return mapping.get(l, l)

    blocks = []
    for b in f.blocks:
        instrs = tuple(
            replace(ins, labels=tuple(newlbl(l) for l in ins.labels)) for ins in b.instrs
        )
        blocks.append(BasicBlock(newlbl(b.label), instrs))
    return Function(f.name, f.params, tuple(blocks))


def fresh_names(f: Function, base: str, count: int = 1) -> list[str]:
    """Deterministic unused value names base0, base1, ... skipping collisions."""
    used = set(defined_values(f))
    out: list[str] = []
    i = 0
    while len(out) < count:
        cand = f"{base}{i}"
        if cand not in used:
            used.add(cand)
            out.append(cand)
        i += 1
    return out


def fresh_label(f: Function, base: str) -> str:
    used = {b.label for b in f.blocks}
    i = 0
    while f"{base}{i}" in used:
        i += 1
    return f"{base}{i}"


# ---------------------------------------------------------------------------
# canonicalization and hashing

@dataclass(frozen=True, order=True)
class CanonicalDigest:
    """Stable content digest of the canonicalized text (128-bit hex)."""

    hex: str

    def __str__(self) -> str:
        return self.hex


def canonicalize(f: Function) -> Function:
    """Alpha-normal form: blocks b0,b1,... in RPO (unreachables appended in
    original order), values v0,v1,... params-first then definition order.
    Operand order is preserved; commutative operands are not sorted."""
    order = block_order_with_unreachable(f)
    index = {b.label: b for b in f.blocks}
    bmap = {lbl: f"b{i}" for i, lbl in enumerate(order)}
    vmap: dict[str, str] = {}
    for p in f.params:
        vmap[p] = f"v{len(vmap)}"
    for lbl in order:
        for ins in index[lbl].instrs:
            if ins.result is not None and ins.result not in vmap:
                vmap[ins.result] = f"v{len(vmap)}"
    g = rename_values(f, vmap)
    g = rename_blocks(g, bmap)
    blocks = sorted(g.blocks, key=lambda b: int(b.label[1:]))
    return Function(g.name, g.params, tuple(blocks))


def canonical_text(f: Function) -> str:
    return print_function(canonicalize(f))


def canonical_hash(f: Function) -> CanonicalDigest:
    h = hashlib.blake2b(canonical_text(f).encode("utf-8"), digest_size=16)
    return CanonicalDigest(h.hexdigest())


# ---------------------------------------------------------------------------
# validation

def _dominator_sets(f: Function) -> dict[str, set[str]]:
    """Label -> set of dominating labels, reachable blocks only (iterative)."""
    order = rpo_order(f)
    preds = predecessors(f)
    allb = set(order)
    dom = {lbl: set(allb) for lbl in order}
    dom[order[0]] = {order[0]}
    changed = True
    while changed:
        changed = False
        for lbl in order[1:]:
            ps = [p for p in preds[lbl] if p in allb]
            new = set.intersection(*(dom[p] for p in ps)) if ps else set()
            new.add(lbl)
            if new != dom[lbl]:
                dom[lbl] = new
                changed = True
    return dom


def validate_function(f: Function) -> list[ValidationError]:
    """All structural and SSA rules; empty list means valid."""
    errs: list[ValidationError] = []

    def err(kind: str, where: str, msg: str) -> None:
        errs.append(ValidationError(kind, where, msg))

    if not f.blocks:
        err("StructureError", f"@{f.name}", "function has no blocks")
        return errs

    labels = [b.label for b in f.blocks]
    if len(set(labels)) != len(labels):
        err("StructureError", f"@{f.name}", "duplicate block labels")
        return errs
    known = set(labels)

    # SSA: unique definitions
    defs: dict[str, str] = {}
    for p in f.params:
        if p in defs:
            err("SSAError", f"@{f.name}", f"duplicate parameter %{p}")
        defs[p] = "param"
    alloca_vals: set[str] = set()
    for b in f.blocks:
        for ins in b.instrs:
            if ins.result is not None:
                if ins.result in defs:
                    err("SSAError", f"{b.label}", f"%{ins.result} defined more than once")
                defs[ins.result] = b.label
                if ins.opcode == "alloca":
                    alloca_vals.add(ins.result)

    preds = predecessors(f)

    for b in f.blocks:
        where = b.label
        if not b.instrs:
            err("TerminatorError", where, "block has no terminator")
            continue
        for i, ins in enumerate(b.instrs):
            if ins.is_terminator and i != len(b.instrs) - 1:
                err("TerminatorError", where, f"'{ins.opcode}' before end of block")
        if not b.instrs[-1].is_terminator:
            err("TerminatorError", where, "block does not end with a terminator")
        seen_nonphi = False
        for ins in b.instrs:
            if ins.is_phi and seen_nonphi:
                err("PhiError", where, "phi after non-phi instruction")
            if not ins.is_phi:
                seen_nonphi = True
        for ins in b.instrs:
            for lbl in ins.labels:
                if lbl not in known:
                    err("LabelError", where, f"unknown label '{lbl}'")

    entry = f.blocks[0]
    if preds[entry.label]:
        err("StructureError", entry.label, "entry block has predecessors")
    if any(i.is_phi for i in entry.instrs):
        err("PhiError", entry.label, "phi in entry block")

    # arity and operand kinds
    for b in f.blocks:
        for ins in b.instrs:
            where = b.label
            if ins.opcode not in OPCODES:
                err("OpcodeError", where, f"unknown opcode '{ins.opcode}'")
                continue
            if ins.opcode == "phi":
                if len(ins.operands) != len(ins.labels):
                    err("PhiError", where, "phi operand/label count mismatch")
            else:
                want = _ARITY[ins.opcode]
                if len(ins.operands) != want:
                    err("ArityError", where, f"'{ins.opcode}' wants {want} operand(s), got {len(ins.operands)}")
                if len(ins.labels) != _LABEL_ARITY.get(ins.opcode, 0):
                    err("ArityError", where, f"'{ins.opcode}' has wrong label count")
            needs_result = ins.opcode not in TERMINATORS and ins.opcode != "store"
            if needs_result and ins.result is None:
                err("StructureError", where, f"'{ins.opcode}' must define a value")
            if not needs_result and ins.result is not None:
                err("StructureError", where, f"'{ins.opcode}' cannot define a value")

    # operand references and pointer-kind discipline
    for b in f.blocks:
        for ins in b.instrs:
            where = b.label
            for j, op in enumerate(ins.operands):
                if isinstance(op, ValueRef) and op.name not in defs:
                    err("UseError", where, f"use of undefined value %{op.name}")
                    continue
                ptr_slot = (ins.opcode == "load" and j == 0) or (ins.opcode == "store" and j == 1)
                if ptr_slot:
                    if not (isinstance(op, ValueRef) and op.name in alloca_vals):
                        err("KindError", where, f"'{ins.opcode}' pointer operand must be an alloca result")
                elif isinstance(op, ValueRef) and op.name in alloca_vals:
                    # addresses may only flow through store *value* position (escape)
                    if not (ins.opcode == "store" and j == 0):
                        err("KindError", where, f"alloca %{op.name} used as int32 operand")

    # phi incomings match predecessors exactly
    for b in f.blocks:
        bpreds = preds[b.label]
        for ins in b.instrs:
            if not ins.is_phi:
                continue
            inc = list(ins.labels)
            if sorted(inc) != sorted(bpreds):
                err("PhiError", b.label, f"phi incomings {inc} do not match predecessors {bpreds}")
            if len(set(inc)) != len(inc):
                err("PhiError", b.label, "duplicate phi incoming labels")

    if errs:
        return errs

    # dominance over reachable blocks
    dom = _dominator_sets(f)
    reachable = set(dom)
    defsite = defined_values(f)
    index = {b.label: b for b in f.blocks}

    def dominates_point(dname: str, use_block: str, use_idx: int) -> bool:
        site = defsite[dname]
        if site is None:
            return True  # param
        dblk, didx = site
        if dblk not in reachable:
            return False
        if dblk == use_block:
            return didx < use_idx
        return dblk in dom[use_block]

    for b in f.blocks:
        if b.label not in reachable:
            continue  # unreachable code only needs the structural checks above
        for i, ins in enumerate(b.instrs):
            if ins.is_phi:
                for op, lbl in zip(ins.operands, ins.labels):
                    if isinstance(op, ValueRef):
                        # incoming value must be available at the end of the pred
                        site = defsite[op.name]
                        if site is not None:
                            dblk, _ = site
                            if lbl in reachable and not (dblk == lbl or dblk in dom.get(lbl, set())):
                                errs.append(ValidationError(
                                    "DominanceError", b.label,
                                    f"phi incoming %{op.name} does not dominate end of {lbl}"))
            else:
                for op in ins.operands:
                    if isinstance(op, ValueRef) and not dominates_point(op.name, b.label, i):
                        errs.append(ValidationError(
                            "DominanceError", b.label,
                            f"use of %{op.name} not dominated by its definition"))
    return errs


def validate_module(m: Module) -> list[ValidationError]:
    errs: list[ValidationError] = []
    names = [f.name for f in m.functions]
    if len(set(names)) != len(names):
        errs.append(ValidationError("StructureError", "module", "duplicate function names"))
    for f in m.functions:
        errs.extend(validate_function(f))
    return errs


def load_module(text: str) -> tuple[Module | None, list[str]]:
    """Parse then validate; error strings from either stage, module on success."""
    try:
        m = parse_module(text)
    except ParseError as e:
        return None, [str(e)]
    errs = validate_module(m)
    if errs:
        return None, [str(e) for e in errs]
    return m, []
