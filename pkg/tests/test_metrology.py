import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzclock.metrology import (
    APPROX_CROSSOVER, GhzMeasurementModel, allan_deviation_entangled, allan_deviation_unentangled,
    average_fisher, average_fisher_approx, bitstring_probability, coherence_ok, fidelity_from_error,
    fisher_information, gain, parity_probability, phase_uncertainty, stability_report,
)


def exact_mean_fisher_norm(c):
    # phase average of s^2 / (1/c^2 - 1 + s^2) over a full period
    return 1.0 - math.sqrt(1.0 - c * c)


def test_model_invariants():
    m = GhzMeasurementModel(10, 0.64)
    assert m.contrast_c == pytest.approx(2 * m.fidelity_F - 1)
    assert GhzMeasurementModel.from_fidelity(10, 0.82).contrast_c == pytest.approx(0.64)
    assert GhzMeasurementModel.from_error(25000, 1.8e-5).contrast_c == pytest.approx(math.exp(-0.45))
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            GhzMeasurementModel(4, bad)
    with pytest.raises(ValueError):
        GhzMeasurementModel(0, 0.5)


@pytest.mark.parametrize(
    "p, phi, N, c, expected",
    [(0, 0.0, 3, 1.0, 1.0), (0, 0.3, 5, 0.0, 0.5), (1, 0.3, 5, 0.0, 0.5), (0, math.pi / 8, 4, 0.8, 0.5)],
)
def test_parity_examples(p, phi, N, c, expected):
    assert parity_probability(p, phi, GhzMeasurementModel(N, c)) == pytest.approx(expected, abs=1e-15)


def test_parity_rejects_bad_bit():
    with pytest.raises(ValueError):
        parity_probability(2, 0.0, GhzMeasurementModel(2, 1.0))


@given(st.integers(1, 50), st.floats(0, 1), st.floats(-10, 10))
def test_parity_normalized(N, c, phi):
    m = GhzMeasurementModel(N, c)
    assert parity_probability(0, phi, m) + parity_probability(1, phi, m) == pytest.approx(1.0)


def test_bitstring_example_and_guard():
    # a one-atom "GHZ" state at zero phase always reads 0
    assert bitstring_probability((0,), 0.0, GhzMeasurementModel(1, 1.0)) == pytest.approx(1.0)
    assert bitstring_probability((1,), 0.0, GhzMeasurementModel(1, 1.0)) == pytest.approx(0.0)
    assert bitstring_probability((0, 1), 0.3, GhzMeasurementModel(2, 0.0)) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        bitstring_probability((0,) * 21, 0.0, GhzMeasurementModel(21, 1.0))
    with pytest.raises(ValueError):
        bitstring_probability((0, 1), 0.0, GhzMeasurementModel(3, 1.0))


@given(st.integers(1, 10), st.floats(0, 1), st.floats(-math.pi, math.pi))
def test_bitstrings_normalize_and_marginalize(N, c, phi):
    m = GhzMeasurementModel(N, c)
    even = odd = 0.0
    for q in itertools.product((0, 1), repeat=N):
        p = bitstring_probability(q, phi, m)
        if sum(q) % 2:
            odd += p
        else:
            even += p
    assert even + odd == pytest.approx(1.0, abs=1e-12)
    assert even == pytest.approx(parity_probability(0, phi, m), abs=1e-12)


def test_fisher_examples():
    assert fisher_information(0.3, GhzMeasurementModel(7, 1.0)) == pytest.approx(49.0)
    assert fisher_information(0.0, GhzMeasurementModel(7, 1.0)) == 49.0
    assert fisher_information(0.3, GhzMeasurementModel(7, 0.0)) == 0.0
    assert fisher_information(0.3, GhzMeasurementModel(7, 1e-8)) < 1e-12
    assert fisher_information(math.pi / 4, GhzMeasurementModel(2, 0.5)) == pytest.approx(1.0)


@pytest.mark.parametrize("N", [1, 2, 5, 17, 100])
def test_average_fisher_perfect_contrast(N):
    assert average_fisher(GhzMeasurementModel(N, 1.0)) == N * N


@pytest.mark.parametrize("c", [0.05, 0.3, 0.5, 0.7, 0.85, 0.9, 0.99, 0.9999])
def test_average_fisher_closed_form(c):
    assert average_fisher(GhzMeasurementModel(3, c)) / 9 == pytest.approx(exact_mean_fisher_norm(c), rel=1e-8)


def test_average_fisher_asymptotic_branches():
    for c in (0.1, 0.3, 0.5):
        m = GhzMeasurementModel(6, c)
        assert average_fisher(m) == pytest.approx(36 * c * c / 2, rel=0.1)
    for c in (0.85, 0.9, 0.95, 0.99):
        m = GhzMeasurementModel(6, c)
        assert average_fisher(m) == pytest.approx(36 * (1 - math.sqrt(2 * (1 - c))), rel=0.1)
    assert average_fisher(GhzMeasurementModel(2, 0.9)) / 4 == pytest.approx(0.553, rel=0.1)


def test_approx_branches_switch_at_crossover():
    lo = GhzMeasurementModel(4, APPROX_CROSSOVER)
    hi = GhzMeasurementModel(4, APPROX_CROSSOVER + 1e-9)
    assert average_fisher_approx(lo) == pytest.approx(16 * APPROX_CROSSOVER**2 / 2)
    assert average_fisher_approx(hi) == pytest.approx(16 * (1 - math.sqrt(2 * (1 - APPROX_CROSSOVER))), rel=1e-6)


@given(st.floats(0, 1))
def test_average_fisher_independent_of_N(c):
    vals = [average_fisher(GhzMeasurementModel(N, c)) / N**2 for N in (2, 5, 17)]
    assert max(vals) - min(vals) < 1e-6


@given(st.floats(0, 1), st.integers(1, 30))
def test_average_fisher_bounded(c, N):
    assert 0.0 <= average_fisher(GhzMeasurementModel(N, c)) <= N * N * (1 + 1e-12)


def test_average_fisher_monotone_in_c():
    cs = np.linspace(0, 1, 201)
    vals = [average_fisher(GhzMeasurementModel(4, float(c))) for c in cs]
    assert np.all(np.diff(vals) > 0)


def test_phase_uncertainty():
    m = GhzMeasurementModel(10, 1.0)
    assert phase_uncertainty(m) == pytest.approx(0.1)
    assert phase_uncertainty(m, repetitions=4) == pytest.approx(0.05)


def test_allan_entangled_examples():
    m1 = GhzMeasurementModel(25000, 1.0)
    assert allan_deviation_entangled(25000, m1, 1.0, 1.0) == pytest.approx(3.24e-4, rel=1e-3)
    s = allan_deviation_entangled(100, GhzMeasurementModel(100, 1.0), 1.0, 1.0)
    s2 = allan_deviation_entangled(200, GhzMeasurementModel(200, 1.0), 1.0, 1.0)
    assert s2 / s == pytest.approx(0.5 * math.sqrt(math.log(200) / math.log(100)))
    half = allan_deviation_entangled(100, GhzMeasurementModel(100, 0.5), 1.0, 1.0)
    assert half == pytest.approx(2 * s)
    with pytest.raises(ValueError):
        allan_deviation_entangled(1, GhzMeasurementModel(1, 1.0), 1.0, 1.0)
    assert allan_deviation_entangled(5, GhzMeasurementModel(5, 0.0), 1.0, 1.0) == math.inf


def test_allan_unentangled_examples():
    assert allan_deviation_unentangled(1, 2.0, 3.0) == pytest.approx(1 / 6)
    assert allan_deviation_unentangled(25000, 1.0, 1.0) == pytest.approx(6.32e-3, rel=1e-3)
    assert allan_deviation_unentangled(400, 1.0, 1.0) == pytest.approx(allan_deviation_unentangled(100, 1.0, 1.0) / 2)


def test_gain_examples():
    assert gain(25000, 1.8e-5) == pytest.approx(12, abs=1)
    assert gain(15000, 3.0e-5) == pytest.approx(10, abs=1)
    assert gain(math.e, 0.0) == pytest.approx(math.pi / 8 * math.sqrt(math.e))
    assert gain(math.e, 0.0) == pytest.approx(0.648, abs=1e-3)
    arr = gain(np.array([10, 100]), 1e-3)
    assert arr.shape == (2,) and arr[1] == pytest.approx(gain(100, 1e-3))
    with pytest.raises(ValueError):
        gain(1, 0.1)
    with pytest.raises(ValueError):
        gain(10, -0.1)


@given(st.floats(2, 1e6), st.floats(0, 1e-3), st.floats(0.1, 1e3), st.floats(1e-3, 1e3))
def test_gain_identity(N, E, omega0, tau):
    model = GhzMeasurementModel.from_error(max(int(N), 2), E)
    c = math.exp(-E * N)
    if c == 0.0:
        return
    direct = allan_deviation_unentangled(N, omega0, tau) / (
        allan_deviation_entangled(N, GhzMeasurementModel(model.N, c), omega0, tau)
    )
    assert gain(N, E) == pytest.approx(direct, rel=1e-12)


@given(st.integers(2, 10**6), st.floats(1e-3, 1))
def test_stability_report_identity(N, c):
    rep = stability_report(GhzMeasurementModel(N, c), omega0=2.0, tau=0.5)
    assert rep.gain_G == pytest.approx(rep.sigma_nonent / (rep.sigma_ent / rep.contrast_c), rel=1e-14)
    assert rep.gain_G == pytest.approx(c * math.pi / 8 * math.sqrt(N / math.log(N)), rel=1e-12)


def test_fidelity_from_error():
    assert fidelity_from_error(1.8e-5, 25000) == pytest.approx(0.82, abs=0.01)
    assert fidelity_from_error(0.0, 100) == 1.0


def test_coherence_check():
    assert coherence_ok(100, 1e-3, 1.0)
    assert not coherence_ok(100, 1.0, 1.0)
