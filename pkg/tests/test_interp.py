"""Reference interpreter: values, traps, costs, differential checking."""

import pytest

from bidiropt.interp import (
    ExecResult,
    WorkloadDiverged,
    default_workload,
    differential_check,
    dynamic_cost_total,
    interpret,
    load_workload,
)
from bidiropt.ir import parse_function

from conftest import WORKLOADS, load


# Hand-checked outputs. bin2bcd(45) = 0x45 is the whole point of the fixture.
SPOT = [
    ("bin2bcd", [45], 69),
    ("bin2bcd", [255], 405),
    ("time_scale", [3725], 501),     # 62 minutes 5 seconds
    ("nibble_pack", [45], 144),
    ("scale_split", [45], 30),
    ("loop_sum", [10], 45),
    ("identities", [123], 0),        # urem x, 1 collapses the chain
]


@pytest.mark.parametrize("name,args,expected", SPOT,
                         ids=[f"{n}({','.join(map(str, a))})" for n, a, _ in SPOT])
def test_spot_values(name, args, expected):
    res = interpret(load(name), args)
    assert res.outcome == "returned"
    assert res.value == expected


def test_dynamic_cost_charges_the_table():
    # udiv 4 + shl 1 + urem 4 + add 1 + ret 1
    res = interpret(load("bin2bcd"), [45])
    assert res.dynamic_cost == 11
    assert res.steps == 5


def test_wrapping_arithmetic():
    f = parse_function("func @f(%x) {\nentry:\n  %a = add %x, 1\n  ret %a\n}\n")
    assert interpret(f, [0xFFFFFFFF]).value == 0


def test_parallel_phi_swap():
    f = load("phi_swap")
    # both phis read incoming values before either writes
    assert interpret(f, [0, 7, 9]).value == 7
    assert interpret(f, [1, 7, 9]).value == 9
    assert interpret(f, [2, 7, 9]).value == 7
    assert interpret(f, [5, 7, 9]).value == 9


# --- traps -------------------------------------------------------------------

def test_div_by_zero_traps():
    f = parse_function("func @f(%x) {\nentry:\n  %a = udiv 1, %x\n  ret %a\n}\n")
    res = interpret(f, [0])
    assert res.outcome == "trapped"
    assert res.reason == "DivByZero"
    assert interpret(f, [2]).value == 0


def test_rem_by_zero_traps():
    f = parse_function("func @f(%x) {\nentry:\n  %a = urem 1, %x\n  ret %a\n}\n")
    assert interpret(f, [0]).reason == "DivByZero"


def test_uninitialized_load_traps():
    f = parse_function(
        "func @f(%x) {\nentry:\n  %p = alloca\n  %v = load %p\n  ret %v\n}\n")
    res = interpret(f, [1])
    assert res.outcome == "trapped"
    assert res.reason == "UninitLoad"


def test_step_limit():
    f = load("loop_sum")
    res = interpret(f, [0xFFFFFFFF], limit=100)
    assert res.outcome == "steplimit"
    # the first step past the budget aborts the run
    assert res.steps == 101


def test_exec_result_matches():
    assert ExecResult("returned", value=3).matches(ExecResult("returned", value=3))
    assert not ExecResult("returned", value=3).matches(ExecResult("returned", value=4))
    assert ExecResult("trapped", reason="DivByZero").matches(
        ExecResult("trapped", reason="DivByZero"))
    assert not ExecResult("trapped", reason="DivByZero").matches(
        ExecResult("trapped", reason="UninitLoad"))
    # two runs that both blow the budget are indistinguishable
    assert ExecResult("steplimit", steps=50).matches(ExecResult("steplimit", steps=99))
    assert not ExecResult("returned", value=0).matches(ExecResult("steplimit"))


# --- workloads and differential checking -------------------------------------

def test_default_workload_unary_is_exhaustive_u8():
    w = default_workload(load("bin2bcd"), seed=7, count=10)
    assert w.args == tuple((i,) for i in range(256))


def test_default_workload_nary_is_seeded():
    f = load("phi_swap")
    w1 = default_workload(f, seed=7, count=10)
    w2 = default_workload(f, seed=7, count=10)
    assert w1.args == w2.args
    assert len(w1.args) == 10
    assert all(len(row) == 3 for row in w1.args)
    assert default_workload(f, seed=8, count=10).args != w1.args


def test_load_workload_masks_to_u32(tmp_path):
    p = tmp_path / "w.json"
    p.write_text("[[4294967296], [1]]")
    w = load_workload(p)
    assert w.args == ((0,), (1,))


def test_load_workload_rejects_non_arrays(tmp_path):
    p = tmp_path / "w.json"
    p.write_text('{"not": "rows"}')
    with pytest.raises(ValueError):
        load_workload(p)


def test_differential_equal_functions():
    f = load("bin2bcd")
    wl = default_workload(f)
    rep = differential_check(f, f, wl)
    assert rep.equivalent
    assert rep.checked == 256
    assert rep.mismatches == ()


def test_differential_catches_wrong_constant():
    f = load("bin2bcd")
    g = parse_function(f"""func @bin2bcd(%val) {{
entry:
  %q = udiv %val, 10
  %h = shl %q, 4
  %r = urem %val, 10
  %s = add %h, %r
  %t = add %s, 1
  ret %t
}}
""")
    wl = default_workload(f, seed=0, count=32)
    rep = differential_check(f, g, wl, stop_at=3)
    assert not rep.equivalent
    assert 1 <= len(rep.mismatches) <= 3
    m = rep.mismatches[0]
    assert m.left.value is not None and m.right.value == (m.left.value + 1) & 0xFFFFFFFF


def test_differential_treats_matching_traps_as_equal():
    t = "func @f(%x) {\nentry:\n  %a = udiv 1, %x\n  ret %a\n}\n"
    f = parse_function(t)
    g = parse_function(t.replace("udiv 1", "udiv 2"))
    from bidiropt.interp import Workload
    wl = Workload("zeros", ((0,), (4,)))
    rep = differential_check(f, g, wl)
    # both trap at 0 with the same reason; at 4 both return 0
    assert rep.equivalent


def test_dynamic_cost_total_sums_and_raises():
    f = load("bin2bcd")
    from bidiropt.interp import Workload
    assert dynamic_cost_total(f, Workload("w", ((45,), (255,)))) == 22
    g = parse_function("func @f(%x) {\nentry:\n  %a = udiv 1, %x\n  ret %a\n}\n")
    with pytest.raises(WorkloadDiverged) as ei:
        dynamic_cost_total(g, Workload("w", ((0,),)))
    assert ei.value.args == (0,)
    assert ei.value.result.reason == "DivByZero"


def test_curated_workloads_load():
    for p in sorted(WORKLOADS.glob("*.json")):
        w = load_workload(p)
        assert len(w.args) > 0
