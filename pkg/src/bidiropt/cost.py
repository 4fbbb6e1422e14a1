"""Cost model and efficiency metrics.

rank_key is the total order the searches minimize: lower static cost wins,
then fewer instructions, then (optionally) lower dynamic cost, with the
canonical text as the final deterministic tie-break.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .ir import Function, canonical_text

if TYPE_CHECKING:
    from .interp import Workload

_DEFAULT_COSTS = {
    "udiv": 4, "urem": 4,
    "mul": 3,
    "load": 2, "store": 2,
    "add": 1, "sub": 1, "and": 1, "or": 1, "xor": 1, "shl": 1, "lshr": 1,
    "icmp.eq": 1, "icmp.ne": 1, "icmp.ult": 1, "icmp.ule": 1,
    "select": 1,
    "condbr": 1, "br": 1, "ret": 1,
    "phi": 0, "alloca": 0,
}


@dataclass(frozen=True)
class CostModel:
    """Per-opcode cost table; unknown opcodes are a configuration error."""

    costs: dict[str, int] = field(default_factory=dict)

    def cost(self, opcode: str) -> int:
        if opcode in self.costs:
            return self.costs[opcode]
        return _DEFAULT_COSTS[opcode]


DEFAULT_COST_MODEL = CostModel()


class Metric(enum.Enum):
    STATIC_COST = "static_cost"
    STATIC_SIZE = "static_size"
    DYNAMIC_COST = "dynamic_cost"


class Efficiency(enum.Enum):
    MORE_EFFICIENT = "more"
    LESS_EFFICIENT = "less"
    TIE = "tie"


def static_size(f: Function) -> int:
    """Instruction count, phis and terminators included."""
    return sum(len(b.instrs) for b in f.blocks)


def static_cost(f: Function, model: CostModel | None = None) -> int:
    model = model or DEFAULT_COST_MODEL
    return sum(model.cost(ins.opcode) for b in f.blocks for ins in b.instrs)


def metric_value(
    f: Function,
    metric: Metric,
    model: CostModel | None = None,
    workload: "Workload | None" = None,
) -> int:
    if metric is Metric.STATIC_COST:
        return static_cost(f, model)
    if metric is Metric.STATIC_SIZE:
        return static_size(f)
    from .interp import dynamic_cost_total

    if workload is None:
        raise ValueError("dynamic_cost metric needs a workload")
    return dynamic_cost_total(f, workload, model=model)


def compare_efficiency(
    f1: Function,
    f2: Function,
    metric: Metric = Metric.STATIC_COST,
    model: CostModel | None = None,
    workload: "Workload | None" = None,
) -> Efficiency:
    """f1 relative to f2 on the chosen metric; lower is more efficient."""
    a = metric_value(f1, metric, model, workload)
    b = metric_value(f2, metric, model, workload)
    if a < b:
        return Efficiency.MORE_EFFICIENT
    if a > b:
        return Efficiency.LESS_EFFICIENT
    return Efficiency.TIE


def rank_key(
    f: Function,
    model: CostModel | None = None,
    workload: "Workload | None" = None,
) -> tuple:
    """(static_cost, static_size[, dynamic_cost], canonical text); lower is better.

    Alpha-equivalent functions get identical keys; the text component makes
    the order total and every search result deterministic.
    """
    key: list = [static_cost(f, model), static_size(f)]
    if workload is not None:
        from .interp import dynamic_cost_total

        key.append(dynamic_cost_total(f, workload, model=model))
    key.append(canonical_text(f))
    return tuple(key)
