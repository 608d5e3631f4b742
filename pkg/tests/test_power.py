"""Power model unit tests: worked examples, invariants, error handling."""

import math

import pytest
from hypothesis import given, strategies as st

from theas_sim.power import (
    CmosParams,
    CurrentTrial,
    PmcSample,
    PowerSample,
    cmos_dynamic_power,
    cpu_power_basic,
    cpu_power_full,
    l2_power,
    mean_current_delta,
    measured_power,
    relative_error,
)

METER_TRIALS = [
    (0.54, 0.76),
    (0.61, 1.07),
    (0.66, 1.08),
    (0.65, 0.90),
    (0.66, 1.00),
    (0.60, 1.00),
    (0.65, 1.08),
    (0.66, 1.07),
    (0.61, 1.10),
    (0.66, 0.98),
]


def sample(ipc=0.0, misses=0.0, accesses=None, l2=0.0, fetch=0.0, seconds=1.0):
    if accesses is None:
        accesses = misses
    return PmcSample(
        ipc=ipc,
        dcache_overall_misses=misses,
        dcache_overall_accesses=accesses,
        l2_overall_accesses=l2,
        fetch_rate=fetch,
        sim_seconds=seconds,
    )


class TestCmosDynamicPower:
    def test_zero_activity_gives_zero(self):
        p = CmosParams(activity_factor=0.0, capacitance=1e-9, voltage=1.0, frequency=1e9)
        assert cmos_dynamic_power(p) == 0.0

    def test_unit_case(self):
        p = CmosParams(activity_factor=1.0, capacitance=1e-9, voltage=1.0, frequency=1e9)
        assert cmos_dynamic_power(p) == pytest.approx(1.0)

    def test_squared_voltage(self):
        p = CmosParams(activity_factor=0.5, capacitance=2e-9, voltage=2.0, frequency=1e9)
        assert cmos_dynamic_power(p) == pytest.approx(4.0)

    @pytest.mark.parametrize("field,value", [
        ("activity_factor", -0.1),
        ("activity_factor", 1.5),
        ("capacitance", -1e-9),
        ("voltage", float("nan")),
        ("frequency", float("inf")),
    ])
    def test_rejects_bad_params(self, field, value):
        kwargs = dict(activity_factor=0.5, capacitance=1e-9, voltage=1.0, frequency=1e9)
        kwargs[field] = value
        with pytest.raises(ValueError):
            CmosParams(**kwargs)

    def test_monotone_in_each_field(self):
        base = dict(activity_factor=0.5, capacitance=1e-9, voltage=1.0, frequency=1e9)
        reference = cmos_dynamic_power(CmosParams(**base))
        for field, bumped in [
            ("activity_factor", 0.6),
            ("capacitance", 2e-9),
            ("voltage", 1.2),
            ("frequency", 2e9),
        ]:
            params = dict(base)
            params[field] = bumped
            assert cmos_dynamic_power(CmosParams(**params)) > reference


class TestCpuPower:
    def test_idle_core(self):
        assert cpu_power_basic(1.0, 0.0) == 0.0

    def test_basic_examples(self):
        assert cpu_power_basic(1.0, 1.0) == pytest.approx(2.0)
        assert cpu_power_basic(1.1, 1.5) == pytest.approx(3.3)

    def test_full_fully_idle(self):
        assert cpu_power_full(1.0, sample()) == 0.0

    def test_full_reduces_to_basic_without_misses(self):
        assert cpu_power_full(1.0, sample(ipc=1.0)) == pytest.approx(2.0)

    def test_full_worked_example(self):
        s = sample(ipc=1.2, misses=2e8, accesses=4e8, seconds=1.0)
        assert cpu_power_full(1.1, s) == pytest.approx(3.3)

    def test_rejects_negative_voltage(self):
        with pytest.raises(ValueError):
            cpu_power_basic(-1.0, 1.0)
        with pytest.raises(ValueError):
            cpu_power_full(-1.0, sample(ipc=1.0))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            cpu_power_basic(float("nan"), 1.0)
        with pytest.raises(ValueError):
            sample(ipc=float("inf"))

    def test_rejects_nonpositive_seconds(self):
        with pytest.raises(ValueError):
            sample(seconds=0.0)
        with pytest.raises(ValueError):
            sample(seconds=-1.0)

    @given(
        voltage=st.floats(0.0, 10.0),
        ipc=st.floats(0.0, 8.0),
        k=st.floats(0.1, 100.0),
    )
    def test_homogeneous_in_voltage(self, voltage, ipc, k):
        s = sample(ipc=ipc, misses=1e6, accesses=1e7, seconds=0.5)
        scaled = cpu_power_full(k * voltage, s)
        assert scaled == pytest.approx(k * cpu_power_full(voltage, s), rel=1e-12)

    def test_misses_zero_matches_basic_on_grid(self):
        for voltage in (0.0, 0.9, 1.0, 1.1, 5.0):
            for ipc in (0.0, 0.3, 1.0, 2.5):
                assert cpu_power_full(voltage, sample(ipc=ipc)) == pytest.approx(
                    cpu_power_basic(voltage, ipc), abs=0.0
                )


class TestL2Power:
    def test_empty_sum(self):
        assert l2_power([]) == 0.0

    def test_single_bank(self):
        assert l2_power([100000]) == pytest.approx(1.8)

    def test_linearity_over_banks(self):
        assert l2_power([50000, 50000]) == pytest.approx(1.8)

    def test_additive_over_concatenation(self):
        a, b = [123.0, 456.0], [789.0]
        assert l2_power(a + b) == pytest.approx(l2_power(a) + l2_power(b), rel=1e-12)

    def test_window_parameter_is_recorded_only(self):
        assert l2_power([100000], 0.1) == l2_power([100000], 2.0)

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            l2_power([100, -1])

    def test_rejects_nonpositive_window(self):
        with pytest.raises(ValueError):
            l2_power([100], 0.0)


class TestMeasuredPower:
    def test_no_load(self):
        assert measured_power(5.207, 0.0) == 0.0

    def test_mean_delta_case(self):
        assert measured_power(5.207, 0.374) == pytest.approx(1.94742, abs=1e-5)

    def test_unit_case(self):
        assert measured_power(5.0, 1.0) == pytest.approx(5.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            measured_power(float("inf"), 1.0)


class TestMeanCurrentDelta:
    def test_single_trial(self):
        assert mean_current_delta([CurrentTrial(0.54, 0.76)]) == pytest.approx(0.22)

    def test_all_ten_trials(self):
        trials = [CurrentTrial(i, f) for i, f in METER_TRIALS]
        assert mean_current_delta(trials) == pytest.approx(0.374, abs=1e-12)

    def test_no_change(self):
        assert mean_current_delta([CurrentTrial(0.6, 0.6)]) == 0.0

    def test_empty_is_error(self):
        with pytest.raises(ValueError):
            mean_current_delta([])

    def test_negative_delta_warns_but_counts(self):
        with pytest.warns(UserWarning):
            trial = CurrentTrial(1.0, 0.8)
        assert mean_current_delta([trial]) == pytest.approx(-0.2)


class TestRelativeError:
    def test_reported_error_pair(self):
        assert relative_error(1.71613, 1.62) * 100 == pytest.approx(5.60, abs=0.05)
        assert relative_error(1.80737, 1.62) * 100 == pytest.approx(10.37, abs=0.05)

    def test_exact_agreement(self):
        assert relative_error(2.5, 2.5) == 0.0

    def test_rejects_nonpositive_simulated(self):
        with pytest.raises(ValueError):
            relative_error(0.0, 1.0)
        with pytest.raises(ValueError):
            relative_error(-1.0, 1.0)

    @given(
        sim=st.floats(1e-6, 1e6),
        meas=st.floats(0.0, 1e6),
        k=st.floats(1e-3, 1e3),
    )
    def test_scale_invariant(self, sim, meas, k):
        assert relative_error(k * sim, k * meas) == pytest.approx(
            relative_error(sim, meas), rel=1e-9
        )


class TestSampleTypes:
    def test_misses_cannot_exceed_accesses(self):
        with pytest.raises(ValueError):
            sample(misses=10, accesses=5)

    def test_power_sample_total(self):
        ps = PowerSample(cpu_dynamic_watts=1.5, l2_dynamic_watts=0.5, timestamp=0.0)
        assert ps.total_watts == pytest.approx(2.0)

    def test_power_sample_rejects_negative(self):
        with pytest.raises(ValueError):
            PowerSample(cpu_dynamic_watts=-0.1, l2_dynamic_watts=0.0, timestamp=0.0)

    def test_current_trial_rejects_negative_amps(self):
        with pytest.raises(ValueError):
            CurrentTrial(-0.1, 0.5)
