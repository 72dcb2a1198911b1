"""Exit criteria. Each test registers one line in the end-of-run summary."""

import json
import random
import subprocess
import sys
import time
from itertools import product

import numpy as np
import pytest

from endurq.growth import (
    Decision,
    MonitorConfig,
    Observation,
    ackermann,
    init_monitor,
    monitor_step,
)
from endurq.heatmap import build_heatmap, export_heatmap, read_heatmap_csv
from endurq.metrics import (
    CapacityScore,
    StackTotals,
    SystemMetrics,
    compute_capacity,
    partition_systems,
)
from endurq.product_form import build_model, normalizing_constant, state_probability
from endurq.queue import new_queue
from endurq.simulator import compare_baseline, run_simulation
from endurq.config import config_from_dict

from .conftest import brute_g, naive_ackermann
from .helpers import bursty_overload, random_pipeline


def test_01_ackermann_correctness(criterion):
    criterion(1, "Ackermann: closed forms == naive recursion (m<=3, n<=8), A(0,n)=n+1 to 1e6, A(2,1)=5, A(3,3)=61, < 1 s")
    oracle = {(m, n): naive_ackermann(m, n) for m in range(4) for n in range(9)}
    start = time.perf_counter()
    for (m, n), v in oracle.items():
        got = ackermann(m, n, 10**9)
        assert got.value == v and not got.saturated
    cap = 2**21
    for n in range(10**6 + 1):
        assert ackermann(0, n, cap).value == n + 1
    assert ackermann(2, 1, 10**6).value == 5
    assert ackermann(3, 3, 10**6).value == 61
    assert time.perf_counter() - start < 1.0


def test_02_saturation(criterion, capsys):
    criterion(2, "Saturation: A(4,2) saturates for every cap <= 2^30 in < 1 s")
    from endurq.cli import main

    start = time.perf_counter()
    for cap in [1, 2, 13, 65533, 65534, 10**6, 2**20, 2**25, 2**30]:
        v = ackermann(4, 2, cap)
        assert v.saturated and v.value == cap
        assert main(["ackermann", "4", "2", "--cap", str(cap)]) == 0
        assert capsys.readouterr().out == f"{cap} saturated\n"
    assert time.perf_counter() - start < 1.0


def test_03_monitor_base_cases(criterion):
    criterion(3, "Monitor: init Q_d=0,Q_g=1; zero demand grows by exactly 1; depth never 0 over 1e5 random steps")
    s = init_monitor()
    assert s.Q_d == 0 and s.Q_g.value == 1
    for depth in (0, 1, 7, 500):
        s2, d = monitor_step(s.__class__(Q_d=depth), Observation(dt_i=2, dt_next=3, D_s=0.0))
        assert s2.Q_d == max(depth, 0) + 1 and d == Decision.grow(depth + 1)

    rng = np.random.default_rng(2024)
    cfg = MonitorConfig(cap=4096, levels=3, d_max=1.0)
    q = new_queue(cfg.cap)
    s = init_monitor()
    for i in range(100_000):
        obs = Observation(
            dt_i=int(rng.integers(0, 6)),
            dt_next=int(rng.integers(0, 6)),
            D_s=float(rng.choice([0.0, rng.uniform(0, 1.2)])),
            r=None if rng.random() < 0.5 else float(rng.uniform(0, 1.5)),
        )
        s, d = monitor_step(s, obs, cfg)
        if d.kind == "grow":
            q.apply_growth(d)
        assert s.Q_d >= 1 and q.depth >= 1


def test_04_convolution_oracle(criterion):
    criterion(4, "Convolution: G(N) == enumeration within 1e-9 rel, probabilities sum to 1 +- 1e-9 (<=4 stations, N<=6), < 10 s")
    start = time.perf_counter()
    for m in range(1, 5):
        for demands in product([0.5, 1.0, 2.0], repeat=m):
            g = normalizing_constant(demands, 6)
            for N in range(7):
                ref = brute_g(demands, N)
                assert abs(g[N] - ref) <= 1e-9 * ref
                model = build_model(demands, N)
                total = sum(
                    state_probability(model, s)
                    for s in product(range(N + 1), repeat=m)
                    if sum(s) == N
                )
                assert abs(total - 1.0) <= 1e-9
    assert time.perf_counter() - start < 10.0


def _capacity_by_hand(p, P, u, U, dt, D_total, S):
    return (p * u) / (P * U) + (dt * S) / D_total


def test_05_capacity_regression(criterion):
    criterion(5, "Capacity: worked example 0.17625 and 100 random inputs vs an independent formula")
    c = compute_capacity(SystemMetrics("x", 50, 0.5, 1.0, 20, 0.1), StackTotals(200, 0.8, 100)).c
    assert abs(c - 0.17625) <= 1e-12
    rng = random.Random(5)
    for _ in range(100):
        p, u, dt, S, D = rng.uniform(0, 500), rng.random(), rng.uniform(0, 300), rng.uniform(0, 2), rng.uniform(0, 5)
        P, U, D_total = rng.uniform(1, 1000), rng.uniform(0.01, 1), rng.uniform(0.1, 50)
        got = compute_capacity(SystemMetrics("x", p, u, D, dt, S), StackTotals(P, U, D_total)).c
        assert got == pytest.approx(_capacity_by_hand(p, P, u, U, dt, D_total, S), rel=1e-12, abs=1e-15)


def test_06_queue_conservation(criterion):
    criterion(6, "Queue: conservation at every snapshot, FIFO, 1 <= depth <= cap over 20 seeds of ~1e4 events")
    for seed in range(20):
        cap = 4 + 3 * seed
        cfg = random_pipeline(seed, duration=400.0, rate=20.0, cap=cap)
        r = run_simulation(cfg, record_queue_log=True)
        eng = r.engine
        assert r.generated >= 8000
        assert eng.snapshots
        for t, enq, deq, dropped, occupancy, depth in eng.snapshots:
            assert enq == deq + dropped + occupancy
            assert 1 <= depth <= cap and occupancy <= depth
        assert eng.served_ids == eng.accepted_ids[: len(eng.served_ids)]
        assert r.generated == r.completed + r.dropped + r.in_flight


def test_07_determinism(criterion, tmp_path):
    criterion(7, "Determinism: identical config+seed -> byte-identical report JSON, in-process and across processes")
    cfg = random_pipeline(11, duration=200.0)
    first, second = run_simulation(cfg).to_json(), run_simulation(cfg).to_json()
    assert first == second
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    code = "import sys; from endurq.cli import main; sys.exit(main(['simulate', sys.argv[1]]))"
    outs = [
        subprocess.run([sys.executable, "-c", code, str(path)], capture_output=True, check=True).stdout.decode()
        for _ in range(2)
    ]
    assert outs[0] == outs[1] == first


def test_08_throttle_reduction(criterion):
    criterion(8, "Throttle: bursty overload (burst 5x service rate), endurance drops < fixed depth-1 drops in all 10 seeds")
    for seed in range(10):
        arms = compare_baseline(bursty_overload(seed))
        e, f = arms["endurance"], arms["fixed"]
        assert e.generated == f.generated
        assert e.dropped < f.dropped, (seed, e.dropped, f.dropped)


def test_09_heatmap_conservation(criterion):
    criterion(9, "Heat map: density total == trace items for 50 random traces; CSV round-trips losslessly")
    rng = random.Random(9)
    for _ in range(50):
        systems = [f"s{i}" for i in range(rng.randint(1, 5))]
        events = sorted(
            (rng.uniform(0, 100), rng.choice(systems), rng.randint(1, 4)) for _ in range(rng.randint(0, 300))
        )
        width = rng.uniform(0.2, 10)
        hm = build_heatmap(events, width, systems)
        assert int(hm.density.sum()) == sum(c for _, _, c in events)
        back = read_heatmap_csv(export_heatmap(hm, "csv"), width)
        assert back == hm


def test_10_partition_validity(criterion):
    criterion(10, "Partition: sup ordering holds for 100 distinct vectors; ties flag degenerate without crashing")
    rng = random.Random(10)
    for _ in range(100):
        n = rng.randint(2, 40)
        values = rng.sample(range(10**6), n)
        scores = [CapacityScore(f"s{i}", v / 1e3) for i, v in enumerate(values)]
        k = rng.randint(1, n)
        part = partition_systems(scores, k)
        assert not part.degenerate
        for a, b in zip(part.sets, part.sets[1:]):
            assert max(s.c for s in a) < max(s.c for s in b)
            assert max(s.c for s in a) < min(s.c for s in b)
    for _ in range(20):
        n = rng.randint(2, 12)
        tied = [CapacityScore(f"s{i}", 0.5) for i in range(n)]
        part = partition_systems(tied, rng.randint(2, n))
        assert part.degenerate
