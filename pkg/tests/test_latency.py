import io
import math

import numpy as np
import pytest

from paretotrack.latency import (
    CANDIDATE_OPS,
    ClockError,
    LatencyEntry,
    LatencyLookupError,
    LatencyTable,
    OpConfig,
    OpTemplate,
    ScriptedClock,
    expected_latency,
    nominal_cost_ms,
    profile_op,
    softmax_weights,
)

TPL = OpTemplate(in_channels=16, out_channels=16, resolution=32, stride=1)


def test_op_config_validation():
    with pytest.raises(ValueError):
        OpConfig("conv_11", 16, 16, 32, 1)
    with pytest.raises(ValueError):
        OpConfig("identity", 0, 16, 32, 1)


def test_profile_constant_clock():
    entry = profile_op(TPL.with_op("identity"), lambda: None,
                       clock=ScriptedClock([1.0]), warmup=10, reps=100)
    assert entry.mean_ms == 1.0
    assert entry.std_ms == 0.0
    assert entry.reps == 100


def test_profile_alternating_clock():
    entry = profile_op(TPL.with_op("identity"), lambda: None,
                       clock=ScriptedClock([1.0, 0.0, 3.0, 0.0]), warmup=0, reps=10)
    assert entry.mean_ms == 2.0
    assert entry.std_ms == 1.0


def test_profile_rejects_zero_reps():
    with pytest.raises(ValueError):
        profile_op(TPL.with_op("identity"), lambda: None, reps=0)


def test_profile_detects_backwards_clock():
    class Backwards:
        def __init__(self):
            self.t = 10.0

        def __call__(self):
            self.t -= 1.0
            return self.t

    with pytest.raises(ClockError):
        profile_op(TPL.with_op("identity"), lambda: None, clock=Backwards(), reps=3)


def test_profile_runs_warmup_before_timing():
    calls = []
    clock = ScriptedClock([1.0])
    profile_op(TPL.with_op("identity"), lambda: calls.append(1),
               clock=clock, warmup=7, reps=5)
    assert len(calls) == 12


def test_profile_reproducible_with_scripted_clock():
    a = profile_op(TPL.with_op("identity"), lambda: None,
                   clock=ScriptedClock([0.25, 0.5]), warmup=2, reps=40)
    b = profile_op(TPL.with_op("identity"), lambda: None,
                   clock=ScriptedClock([0.25, 0.5]), warmup=2, reps=40)
    assert a == b


def test_softmax_single_logit():
    assert softmax_weights([3.7]).tolist() == [1.0]


def test_softmax_equal_logits():
    w = softmax_weights([0.5] * 4)
    assert w.tolist() == [0.25] * 4


def test_softmax_ln2():
    w = softmax_weights([math.log(2), 0.0])
    assert abs(w[0] - 2 / 3) < 1e-15
    assert abs(w[1] - 1 / 3) < 1e-15


def test_softmax_sums_to_one(rng):
    for _ in range(100):
        w = softmax_weights(rng.uniform(-30, 30, int(rng.integers(1, 12))))
        assert abs(w.sum() - 1.0) <= 1e-12
        assert (w > 0).all()


def test_softmax_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        softmax_weights([])
    with pytest.raises(ValueError):
        softmax_weights([np.inf, 0.0])


def _table(values):
    table = LatencyTable()
    for op, ms in values.items():
        table.add(TPL.with_op(op), LatencyEntry(ms, 0.0, 1))
    return table


def test_expected_latency_single_op():
    table = _table({"identity": 5.0})
    lat = expected_latency([np.zeros(1)], table, [TPL], ops=("identity",))
    assert lat == 5.0


def test_expected_latency_equal_weights():
    table = _table({"identity": 10.0, "sep_conv_3": 20.0})
    lat = expected_latency([np.zeros(2)], table, [TPL],
                           ops=("identity", "sep_conv_3"))
    assert lat == 15.0


def test_expected_latency_ln2_weights():
    table = _table({"identity": 10.0, "sep_conv_3": 20.0})
    lat = expected_latency([np.array([math.log(2), 0.0])], table, [TPL],
                           ops=("identity", "sep_conv_3"))
    assert abs(lat - 40 / 3) < 1e-12


def test_expected_latency_missing_entry_names_config():
    table = _table({"identity": 10.0})
    with pytest.raises(LatencyLookupError, match="sep_conv_3"):
        expected_latency([np.zeros(2)], table, [TPL], ops=("identity", "sep_conv_3"))


def test_expected_latency_linear_in_table(rng):
    ops = ("identity", "max_pool_3", "sep_conv_3")
    base = {op: float(rng.uniform(1, 5)) for op in ops}
    logits = [rng.normal(size=3) for _ in range(4)]
    templates = [TPL] * 4
    lat1 = expected_latency(logits, _table(base), templates, ops=ops)
    lat3 = expected_latency(logits, _table({k: 3 * v for k, v in base.items()}),
                            templates, ops=ops)
    assert abs(lat3 - 3 * lat1) < 1e-9 * abs(lat3)


def test_expected_latency_bounds(rng):
    ops = ("identity", "max_pool_3", "sep_conv_3")
    vals = {op: float(rng.uniform(1, 9)) for op in ops}
    table = _table(vals)
    for _ in range(50):
        lat = expected_latency([rng.normal(size=3)], table, [TPL], ops=ops)
        assert min(vals.values()) <= lat <= max(vals.values())


def test_expected_latency_one_hot_limit(rng):
    ops = ("identity", "max_pool_3", "sep_conv_3")
    vals = {"identity": 2.0, "max_pool_3": 5.0, "sep_conv_3": 9.0}
    table = _table(vals)
    rng_range = max(vals.values()) - min(vals.values())
    for idx, op in enumerate(ops):
        logits = np.zeros(3)
        logits[idx] += 50.0
        lat = expected_latency([logits], table, [TPL], ops=ops)
        assert abs(lat - vals[op]) <= 1e-6 * rng_range


def test_table_exact_match_only():
    table = _table({"identity": 1.0})
    other = OpTemplate(in_channels=32, out_channels=16, resolution=32, stride=1)
    with pytest.raises(LatencyLookupError):
        table.get(other.with_op("identity"))


def test_table_io_roundtrip(rng):
    table = LatencyTable()
    for op in CANDIDATE_OPS:
        cfg = TPL.with_op(op)
        table.add(cfg, LatencyEntry(float(rng.uniform(0, 5)),
                                    float(rng.uniform(0, 0.5)),
                                    int(rng.integers(1, 200))))
    buf = io.StringIO()
    table.write(buf)
    text = buf.getvalue()
    assert text.startswith("latency-table v1\n")
    back = LatencyTable.read(io.StringIO(text))
    assert len(back) == len(table)
    for cfg, entry in table.items():
        assert back.get(cfg) == entry


def test_table_read_rejects_bad_header():
    with pytest.raises(ValueError):
        LatencyTable.read(io.StringIO("latency-table v2\n"))


def test_nominal_cost_scales():
    small = nominal_cost_ms(OpConfig("sep_conv_3", 16, 16, 32, 1))
    big = nominal_cost_ms(OpConfig("sep_conv_3", 16, 32, 32, 1))
    assert big == 2 * small
    assert nominal_cost_ms(OpConfig("none", 16, 16, 32, 1)) == 0.0
