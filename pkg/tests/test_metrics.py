import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from endurq.metrics import (
    CapacityScore,
    DomainError,
    StackTotals,
    SystemMetrics,
    aggregate_stack,
    capacity_ratio,
    compute_capacity,
    partition_systems,
    read_metrics_csv,
    utilization_ratio,
)


def sm(sid="a", p=0.0, u=0.0, D=0.0, dt=0.0, S=0.0):
    return SystemMetrics(sid, p, u, D, dt, S)


def test_capacity_worked_example():
    c = compute_capacity(sm(p=50, u=0.5, dt=20, S=0.1), StackTotals(200, 0.8, 100))
    assert c.c == pytest.approx(0.17625, abs=1e-12)


def test_capacity_trivial_cases():
    t = StackTotals(7, 0.3, 11)
    assert compute_capacity(sm(u=0.2, S=5), t).c == 0
    assert compute_capacity(sm(p=7, u=0.3, dt=11, S=1), t).c == pytest.approx(2.0)


def test_totals_must_be_positive():
    with pytest.raises(DomainError):
        StackTotals(0, 0.5, 1)
    with pytest.raises(DomainError):
        StackTotals(1, 0.5, 0)


def test_metrics_invariants():
    with pytest.raises(DomainError):
        sm(u=1.2)
    with pytest.raises(DomainError):
        sm(p=-1)
    with pytest.raises(DomainError):
        SystemMetrics("a", 0, 0, 0, 0, 0, window=(3, 3))


pos = st.floats(0, 100, allow_nan=False)


@given(pos, st.floats(0, 1), pos, pos, st.floats(0.1, 100))
def test_capacity_monotone(p, u, dt, S, bump):
    t = StackTotals(50, 0.5, 20)
    base = compute_capacity(sm(p=p, u=u, dt=dt, S=S), t).c
    assert compute_capacity(sm(p=p + bump, u=u, dt=dt, S=S), t).c >= base
    assert compute_capacity(sm(p=p, u=min(1.0, u + bump), dt=dt, S=S), t).c >= base
    assert compute_capacity(sm(p=p, u=u, dt=dt + bump, S=S), t).c >= base
    assert compute_capacity(sm(p=p, u=u, dt=dt, S=S + bump), t).c >= base


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 1), st.floats(0.1, 50))
def test_throughput_ratio_invariance(p, P, u, k):
    t1, t2 = StackTotals(P, 0.5, 1), StackTotals(P * k, 0.5, 1)
    c1 = compute_capacity(sm(p=p, u=u), t1).c
    c2 = compute_capacity(sm(p=p * k, u=u), t2).c
    assert c2 == pytest.approx(c1, rel=1e-12)


def test_aggregate_stack():
    one = aggregate_stack([sm(p=10, u=0.5, D=2)])
    assert (one.P, one.U, one.D_total) == (10, 0.5, 2)
    two = aggregate_stack([sm("a", p=10, u=0.4, D=1), sm("b", p=30, u=0.8, D=3)])
    assert (two.P, two.D_total) == (40, 4)
    assert two.U == pytest.approx(0.6)
    with pytest.raises(DomainError):
        aggregate_stack([sm(p=1, D=1), sm("b", p=1, D=1)])
    with pytest.raises(DomainError):
        aggregate_stack([])


def scores(values):
    return [CapacityScore(f"s{i}", v) for i, v in enumerate(values)]


def test_partition_median_split():
    part = partition_systems(scores([0.9, 0.1, 0.5, 0.2]), 2)
    assert [[s.c for s in g] for g in part.sets] == [[0.1, 0.2], [0.5, 0.9]]
    assert part.sets[0][-1].c < part.sets[1][-1].c
    assert part.k == 2 and not part.degenerate


def test_partition_single_group():
    part = partition_systems(scores([0.3, 0.1, 0.2]), 1)
    assert part.k == 1 and [s.c for s in part.sets[0]] == [0.1, 0.2, 0.3]


def test_partition_ties_flag_degenerate():
    part = partition_systems(scores([0.3, 0.3, 0.3]), 2)
    assert [[s.c for s in g] for g in part.sets] == [[0.3, 0.3], [0.3]]
    assert part.degenerate and part.degenerate_boundaries == (0,)


def test_partition_tie_break_by_id():
    part = partition_systems([CapacityScore("b", 1.0), CapacityScore("a", 1.0)], 1)
    assert [s.system_id for s in part.sets[0]] == ["a", "b"]


def test_partition_k_out_of_range():
    with pytest.raises(ValueError):
        partition_systems(scores([1, 2]), 3)
    with pytest.raises(ValueError):
        partition_systems(scores([1, 2]), 0)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=30), st.data())
def test_partition_properties(values, data):
    k = data.draw(st.integers(1, len(values)))
    sc = scores(values)
    part = partition_systems(sc, k)
    flat = [s for g in part.sets for s in g]
    assert sorted(s.system_id for s in flat) == sorted(s.system_id for s in sc)
    assert [s.c for s in flat] == sorted(values)
    assert all(len(g) >= 1 for g in part.sets)
    for i in range(k - 1):
        if part.sets[i][-1].c < part.sets[i + 1][0].c:
            assert part.sets[i][-1].c < part.sets[i + 1][-1].c
        else:
            assert i in part.degenerate_boundaries


def test_partition_json_fields():
    doc = json.loads(json.dumps(partition_systems(scores([0.1, 0.2]), 2).to_dict()))
    assert {"sets", "k"} <= set(doc)
    assert set(doc["sets"][0][0]) == {"system_id", "c"}


def test_utilization_ratio():
    t = StackTotals(1, 0.6, 1)
    assert utilization_ratio([sm(u=0.6)], t) == pytest.approx(1.0)
    assert utilization_ratio([sm(u=0.2), sm("b", u=0.4)], t) == pytest.approx(0.5)
    assert utilization_ratio([sm(u=0.9)], t) == pytest.approx(1.5)


def test_capacity_ratio():
    sc = scores([1.0, 3.0])
    assert capacity_ratio(sc[1], sc) == pytest.approx(0.75)
    assert capacity_ratio(CapacityScore("z", 0), scores([0, 0])) == 0.0


def test_read_metrics_csv():
    text = "system_id,p,u,D,dt,S\nA,50,0.5,1,20,0.1\nB,150,0.9,2,80,0.2\n"
    rows = read_metrics_csv(text)
    assert [r.system_id for r in rows] == ["A", "B"]
    with pytest.raises(DomainError):
        read_metrics_csv("system_id,p\nA,1\n")
    with pytest.raises(DomainError, match="line 2"):
        read_metrics_csv("system_id,p,u,D,dt,S\nA,x,0.5,1,20,0.1\n")
