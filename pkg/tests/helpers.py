from endurq.config import config_from_dict


def two_stage(workload, first=0.5, second=0.5, **extra):
    doc = {
        "systems": [
            {"system_id": "up", "service": {"kind": "deterministic", "value": first}},
            {"system_id": "down", "service": {"kind": "deterministic", "value": second}},
        ],
        "workload": workload,
    }
    doc.update(extra)
    return config_from_dict(doc)


def random_pipeline(seed, duration=400.0, rate=12.0, **extra):
    doc = {
        "systems": [
            {"system_id": "edge", "service": {"kind": "exponential", "mean": 0.02}},
            {"system_id": "pricing", "service": {"kind": "exponential", "mean": 0.12}, "d_m": 2},
            {"system_id": "ledger", "service": {"kind": "exponential", "mean": 0.05}},
        ],
        "workload": {"kind": "bursty", "base_rate": rate, "burst_rate": 5 * rate,
                     "burst_duration": 4, "period": 25, "duration": duration},
        "seed": seed,
        "demand_scale": 0.15,
        "partition_k": 2,
    }
    doc.update(extra)
    return config_from_dict(doc)


def bursty_overload(seed):
    """Downstream serves 10 items/s; bursts arrive at 5x that."""
    return config_from_dict({
        "systems": [
            {"system_id": "ingest", "service": {"kind": "deterministic", "value": 0.01}},
            {"system_id": "ledger", "service": {"kind": "exponential", "mean": 0.1}},
        ],
        "workload": {"kind": "bursty", "base_rate": 2.0, "burst_rate": 50.0,
                     "burst_duration": 5.0, "period": 40.0, "duration": 400.0},
        "seed": seed,
    })
