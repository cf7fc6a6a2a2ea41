import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import fftconvolve
from scipy.special import eval_hermite, factorial

from tflotfs.pulses import (TFL_DEFAULT_COEFFS, EffectivePulse, calibrate_tfl_scale, discrete_hermite, effective_pulse,
                            hermite_functions, isi_energy, localization_metrics, periodic_samples, rc_value,
                            sample_shifted, srrc_prototype, srrc_value, tfl_prototype, tfl_waveform)

BETA = 0.22


# --- SRRC / RC closed forms -------------------------------------------------

def test_srrc_peak_limit():
    assert srrc_value(0.0, BETA) == pytest.approx(1 - BETA + 4 * BETA / np.pi, abs=1e-12)
    assert srrc_value(0.0, BETA) == pytest.approx(1.06011, abs=1e-5)
    # continuity oracle: the regular branch just off zero
    assert srrc_value(1e-6, BETA) == pytest.approx(srrc_value(0.0, BETA), abs=1e-9)
    assert srrc_value(-1e-6, BETA) == pytest.approx(srrc_value(0.0, BETA), abs=1e-9)


@pytest.mark.parametrize("beta", [0.1, 0.22, 0.5, 1.0])
def test_srrc_edge_limit_is_continuous(beta):
    t0 = 1 / (4 * beta)
    assert srrc_value(t0, beta) == pytest.approx(srrc_value(t0 + 1e-6, beta), abs=1e-5)
    assert srrc_value(-t0, beta) == pytest.approx(srrc_value(-t0 - 1e-6, beta), abs=1e-5)


def test_srrc_scales_with_symbol_period():
    Ts = 2.5e-6
    assert srrc_value(0.4 * Ts, BETA, Ts) == pytest.approx(srrc_value(0.4, BETA) / np.sqrt(Ts))


def test_srrc_zero_rolloff_is_sinc():
    t = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(srrc_value(t, 0.0), np.sinc(t), atol=1e-15)


@pytest.mark.parametrize("beta", [-0.1, 1.5])
def test_srrc_rejects_rolloff(beta):
    with pytest.raises(ValueError):
        srrc_value(0.1, beta)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 20), st.floats(0.05, 1.0))
def test_srrc_even(t, beta):
    assert srrc_value(t, beta) == pytest.approx(srrc_value(-t, beta), abs=1e-12)


def test_rc_nyquist_zeros():
    assert rc_value(0.0, BETA) == 1.0
    k = np.arange(1, 9)
    assert np.max(np.abs(rc_value(k, BETA))) < 1e-12
    assert np.max(np.abs(rc_value(-k, BETA))) < 1e-12


def test_rc_reference_values():
    assert rc_value(0.7, BETA) == pytest.approx(0.3598, abs=1e-4)
    assert rc_value(0.3, BETA) == pytest.approx(0.8549, abs=1e-4)


def test_rc_values_against_fine_autocorrelation():
    # independent oracle: SRRC autocorrelation on a finer grid (Q=320 puts 0.3 and 0.7 on it)
    Q, span = 320, 32
    t = np.arange(-span * Q, span * Q + 1) / Q
    p = srrc_value(t, BETA)
    g = fftconvolve(p, p[::-1]) / Q
    lag = np.arange(g.size) - (g.size - 1) / 2
    g /= g[(g.size - 1) // 2]
    for x in (0.3, 0.7):
        assert g[int(np.flatnonzero(lag == round(x * Q))[0])] == pytest.approx(rc_value(x, BETA), abs=1e-4)


def test_rc_singularity_limit():
    for beta in (0.22, 0.5, 1.0):
        t0 = 1 / (2 * beta)
        assert rc_value(t0, beta) == pytest.approx(rc_value(t0 + 1e-7, beta), abs=1e-6)


def test_rc_rejects_rolloff():
    with pytest.raises(ValueError):
        rc_value(0.1, 1.2)


# --- effective pulses ----------------------------------------------------------

def test_srrc_effective_pulse_matches_rc(g_rc):
    rng = np.random.default_rng(0)
    t = rng.uniform(-8, 8, 1000)
    assert np.max(np.abs(g_rc(t) - rc_value(t, BETA))) < 1e-4


@pytest.mark.parametrize("beta,span", [(0.1, 32), (0.22, 16), (0.5, 16), (1.0, 16)])
def test_srrc_autocorrelation_is_rc(beta, span):
    g = effective_pulse(srrc_prototype(beta, span=span))
    t = np.linspace(-span / 2, span / 2, 4001)
    assert np.max(np.abs(g(t) - rc_value(t, beta))) < 1e-4


@pytest.mark.parametrize("which", ["g_rc", "g_tfl"])
def test_effective_pulse_shape(which, request):
    g = request.getfixturevalue(which)
    assert g(0.0) == 1.0
    t = np.linspace(0, 30, 301)
    np.testing.assert_allclose(g(t), g(-t), atol=1e-9)
    assert g(2 * g.span + 0.01) == 0.0
    assert g(-2 * g.span - 5) == 0.0
    # centre g at index 0 of a long periodic buffer so its DFT is real
    h = g.samples.size // 2
    buf = np.zeros(1 << 16)
    buf[: h + 1] = g.samples[h:]
    buf[-h:] = g.samples[:h]
    spec = np.fft.fft(buf)
    assert np.max(np.abs(spec.imag)) < 1e-9 * np.abs(spec).max()
    assert spec.real.min() > -1e-6 * spec.real.max()


@pytest.mark.parametrize("which", ["rc_proto", "tfl_proto"])
def test_prototype_invariants(which, request):
    p = request.getfixturevalue(which)
    assert p.samples.size == 2 * p.span * p.Q + 1
    assert p.energy == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(p.samples, p.samples[::-1], atol=1e-9)


def test_sample_shifted_nyquist(g_rc):
    # inside |t| < 8 Ts; the truncated SRRC tails near the support edge exceed 1e-4
    s = sample_shifted(g_rc, 0.0, 8)
    assert s[0] == pytest.approx(1.0)
    assert np.max(np.abs(s[1:])) < 1e-4
    s = sample_shifted(g_rc, 1.0, 8)
    assert s[1] == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(np.delete(s, 1))) < 1e-4


def test_sample_shifted_fractional(g_rc):
    s = sample_shifted(g_rc, 0.3, 4)
    assert s[0].real == pytest.approx(rc_value(-0.3, BETA), abs=1e-4)
    assert s[0].real == pytest.approx(0.8549, abs=1e-3)
    assert s[1].real == pytest.approx(0.3598, abs=1e-3)


def test_sample_shifted_outside_support_is_zero(g_rc):
    s = sample_shifted(g_rc, -100.0, 3)
    assert np.all(s == 0)
    with pytest.raises(ValueError):
        sample_shifted(g_rc, 0.0, 0)


def test_periodic_samples_wrap(g_tfl):
    L = 8
    c = periodic_samples(g_tfl, 0.4, L)
    k = np.arange(-40, 41)
    direct = np.zeros(L)
    np.add.at(direct, k % L, g_tfl(k - 0.4))
    np.testing.assert_allclose(c.real, direct, atol=1e-12)


# --- localisation ---------------------------------------------------------------

def test_isi_energy_nyquist(g_rc):
    t = np.arange(-32 * 64, 32 * 64 + 1) / 64
    ideal = EffectivePulse(rc_value(t, BETA), 64, 16, 1.0, "rc-ideal")
    assert isi_energy(ideal, 0.0) < 1e-6
    # the span-16 truncation leaves a small residue
    assert isi_energy(g_rc, 0.0) < 1e-5


def test_isi_energy_worst_at_half_symbol(g_rc):
    d = np.linspace(0, 0.5, 26)
    m = localization_metrics(g_rc, d)
    assert np.argmax(m.isi_energy) == d.size - 1
    assert m.isi(0.5) == pytest.approx(isi_energy(g_rc, 0.5))
    with pytest.raises(KeyError):
        m.isi(0.123)


def test_tfl_is_better_localised(g_rc, g_tfl):
    assert isi_energy(g_tfl, 0.3) < isi_energy(g_rc, 0.3)
    mr = localization_metrics(g_rc, [0.3])
    mt = localization_metrics(g_tfl, [0.3])
    assert mt.rms_time_width < mr.rms_time_width
    assert mt.peak_value[0] > 0


# --- Hermite functions ------------------------------------------------------------

def test_hermite_functions_closed_form():
    x = np.linspace(-5, 5, 201)
    psi = hermite_functions(16, x)
    for n in range(17):
        ref = eval_hermite(n, x) * np.exp(-x ** 2 / 2) / np.sqrt(2.0 ** n * factorial(n) * np.sqrt(np.pi))
        np.testing.assert_allclose(psi[n], ref, atol=1e-10)


def test_hermite_functions_orthonormal():
    x = np.linspace(-15, 15, 6001)
    psi = hermite_functions(16, x)
    gram = psi @ psi.T * (x[1] - x[0])
    np.testing.assert_allclose(gram, np.eye(17), atol=1e-10)


def test_default_coefficients_reproduce_physicist_weights():
    w = (1.412692577, -3.0145e-3, -8.8041e-6, -2.2611e-9, -4.4570e-15)
    x = np.linspace(-6, 6, 121)
    ref = sum(wi * eval_hermite(4 * i, x) for i, wi in enumerate(w)) * np.exp(-x ** 2 / 2)
    got = tfl_waveform(x, TFL_DEFAULT_COEFFS)
    np.testing.assert_allclose(got / got.max(), ref / ref.max(), atol=1e-12)


# --- discrete Hermite basis ---------------------------------------------------------

@pytest.mark.parametrize("M_tilde,sigma", [(8, 1.0), (33, 1.0), (64, 1.3), (257, 1.0)])
def test_discrete_hermite_orthonormal(M_tilde, sigma):
    V = discrete_hermite(M_tilde, sigma).vectors
    assert np.max(np.abs(V.T @ V - np.eye(M_tilde))) < 1e-10


def test_discrete_hermite_eigenpairs():
    b = discrete_hermite(129, 1.0)
    T = b.matrix()
    resid = np.linalg.norm(T @ b.vectors - b.vectors * b.eigenvalues, axis=0)
    assert resid.max() < 1e-8
    assert np.all(np.diff(b.eigenvalues) <= 0)


def test_discrete_hermite_gaussian_column():
    b = discrete_hermite(257, 1.0)
    ref = np.exp(-b.abscissae ** 2 / 2)
    v = b.vectors[:, 0]
    corr = abs(v @ ref) / (np.linalg.norm(v) * np.linalg.norm(ref))
    assert corr > 0.999


def test_discrete_hermite_symmetry_and_sign():
    b = discrete_hermite(257, 1.0)
    V = b.vectors
    for p in range(0, 17, 4):
        np.testing.assert_allclose(V[:, p], V[::-1, p], atol=1e-8)
    peak = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    assert np.all(peak > 0)
    # low-order columns oscillate like psi_p: p sign changes
    for p in range(6):
        v = V[:, p]
        v = v[np.abs(v) > 1e-6 * np.abs(v).max()]
        assert np.count_nonzero(np.diff(np.sign(v))) == p


def test_discrete_hermite_rejects_bad_input():
    with pytest.raises(ValueError):
        discrete_hermite(7)
    with pytest.raises(ValueError):
        discrete_hermite(16, 0.0)


# --- TFL pulse ------------------------------------------------------------------

def test_tfl_single_term_is_gaussian():
    p = tfl_prototype([1, 0, 0, 0, 0], scale=0.3)
    ref = np.exp(-(p.t / 0.3) ** 2 / 2)
    corr = p.samples @ ref / (np.linalg.norm(p.samples) * np.linalg.norm(ref))
    assert corr > 0.9999


def test_tfl_even(tfl_proto):
    np.testing.assert_allclose(tfl_proto.samples, tfl_proto.samples[::-1], atol=1e-9)


def test_tfl_discrete_and_continuous_agree(tfl_proto):
    d = tfl_prototype(method="discrete")
    assert np.linalg.norm(d.samples - tfl_proto.samples) / np.linalg.norm(tfl_proto.samples) < 1e-3


def test_tfl_rejects_zero_coefficients():
    with pytest.raises(ValueError):
        tfl_prototype([0, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        tfl_prototype(scale=-1.0)
    with pytest.raises(ValueError):
        tfl_prototype(method="spline")


def test_tfl_calibration(g_tfl, tfl_proto):
    k = np.arange(1, 5)
    assert np.max(np.abs(g_tfl(k))) < 0.02
    assert tfl_proto.params["scale"] == pytest.approx(calibrate_tfl_scale(), rel=1e-12)


def test_tfl_calibration_is_a_local_minimum(tfl_proto):
    a = tfl_proto.params["scale"]

    def leak(scale):
        g = effective_pulse(tfl_prototype(scale=scale))
        return np.sum(g(np.arange(1, 9)) ** 2)

    assert leak(a) < leak(a * 0.97)
    assert leak(a) < leak(a * 1.03)


@pytest.mark.parametrize("coeffs", [TFL_DEFAULT_COEFFS, (1.0, -0.05, 0.0, 0.0, 0.0)])
def test_tfl_localisation_beats_rc(coeffs, g_rc):
    g = effective_pulse(tfl_prototype(coeffs))
    assert isi_energy(g, 0.3) < isi_energy(g_rc, 0.3)
