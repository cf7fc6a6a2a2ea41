import numpy as np
import pytest

from tflotfs.channel import ChannelConfig, PathSet, apply_channel_waveform, generate_channel
from tflotfs.effective_channel import (EffectiveChannelMatrix, Response, apply_dd, block_effective_channel,
                                       build_effective_channel, dd_spread, doppler_sequence, dzt_sequence,
                                       effective_channel_from_responses, path_responses, time_domain_apply,
                                       time_domain_operator)
from tflotfs.grid_zak import DDFrame, dzt_array, vec
from tflotfs.modem import ModemConfig, receive, transmit
from tflotfs.pulses import EffectivePulse, effective_pulse, rc_value

from conftest import TS, crandn


def ideal_rc(beta=0.22, Q=16, span=16, Ts=TS):
    """Closed-form RC on the fine grid: Nyquist to machine precision."""
    t = np.arange(-2 * span * Q, 2 * span * Q + 1) / Q
    return EffectivePulse(rc_value(t, beta), Q, span, Ts, "rc-ideal")


def naive_dzt(x, M, N):
    n = np.arange(N)
    return np.array([[np.sum(x[l + n * M] * np.exp(-2j * np.pi * n * k / N)) for k in range(N)]
                     for l in range(M)]) / np.sqrt(N)


def brute_force_H(paths, g, M, N):
    """Element-wise double sum, evaluated entry by entry."""
    MN = M * N
    H = np.zeros((MN, MN), dtype=complex)
    for h, tau, nu in zip(paths.gains, paths.delays, paths.dopplers):
        hp = h * np.exp(2j * np.pi * nu * tau)
        eps = nu * MN * g.Ts
        u = np.exp(2j * np.pi * eps * np.arange(MN) / MN)
        gi = np.zeros(MN, dtype=complex)
        for r in range(-8, 9):
            gi += g((np.arange(MN) + r * MN) * g.Ts - tau)
        Uz, Gz = naive_dzt(u, M, N), naive_dzt(gi, M, N)
        for n in range(N):
            for m in range(M):
                for k in range(N):
                    for l in range(M):
                        rho = 1 if m - l < 0 else 0
                        H[n * M + m, k * M + l] += (hp * Uz[l, (n - k) % N] * Gz[(m - l) % M, n]
                                                    * np.exp(-2j * np.pi * n * rho / N))
    return H


def random_paths(rng, P, Ts, max_bins, M, N):
    delays = np.sort(rng.uniform(0, 3, P)) * Ts
    dopplers = rng.uniform(-max_bins, max_bins, P) / (M * N * Ts)
    return PathSet(crandn(rng, P), delays, dopplers, Ts)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# ---------------------------------------------------------------------------
# element-wise formula

def test_identity_for_single_direct_path():
    H = build_effective_channel(PathSet.single(Ts=TS), ideal_rc(), 32, 16)
    np.testing.assert_allclose(H.H, np.eye(512), atol=1e-6)


def test_identity_with_truncated_rc(g_rc):
    # the span-16 effective pulse carries a ~1e-3 truncation residue off the diagonal
    H = build_effective_channel(PathSet.single(Ts=g_rc.Ts), g_rc, 32, 16)
    assert np.abs(H.H - np.eye(512)).max() < 5e-3


@pytest.mark.parametrize("l0, k0", [(1, 0), (0, 1), (2, 3), (3, 1)])
def test_integer_shift_is_twisted_permutation(l0, k0):
    M, N = 4, 4
    g = ideal_rc(Ts=1.0)
    ps = PathSet.single(delay=float(l0), doppler=k0 / (M * N), Ts=1.0)
    H = build_effective_channel(ps, g, M, N).H
    np.testing.assert_allclose(H, brute_force_H(ps, g, M, N), atol=1e-10)
    P = np.zeros((M * N, M * N))
    for k in range(N):
        for l in range(M):
            P[((k + k0) % N) * M + (l + l0) % M, k * M + l] = 1
    np.testing.assert_allclose(np.abs(H), P, atol=1e-10)


def test_matches_brute_force_fractional(g_tfl):
    rng = np.random.default_rng(0)
    M, N = 4, 4
    ps = random_paths(rng, 2, g_tfl.Ts, 1.5, M, N)
    H = build_effective_channel(ps, g_tfl, M, N).H
    assert rel(H, brute_force_H(ps, g_tfl, M, N)) < 1e-10


def test_block_form_equals_elementwise(g_rc):
    rng = np.random.default_rng(1)
    M, N = 8, 4
    resp = path_responses(random_paths(rng, 3, g_rc.Ts, 1.2, M, N), g_rc, M, N)
    assert rel(block_effective_channel(resp, M, N), effective_channel_from_responses(resp, M, N)) < 1e-12


def test_time_domain_oracle(g_tfl):
    rng = np.random.default_rng(2)
    M, N = 8, 4
    resp = path_responses(random_paths(rng, 2, g_tfl.Ts, 1.7, M, N), g_tfl, M, N)
    H = effective_channel_from_responses(resp, M, N)
    for _ in range(20):
        d = crandn(rng, M * N)
        assert rel(H @ d, time_domain_apply(resp, d, M, N)) < 1e-10
    assert rel(time_domain_operator(resp, M, N), H) < 1e-10


def test_custom_time_variation_matches_time_domain():
    rng = np.random.default_rng(3)
    M, N = 8, 4
    resp = [Response(1.0 + 0.5j, 0.0, crandn(rng, M * N), u=crandn(rng, M * N))]
    assert rel(effective_channel_from_responses(resp, M, N), time_domain_operator(resp, M, N)) < 1e-10


def test_unit_path_preserves_energy():
    rng = np.random.default_rng(4)
    ps = PathSet.single(delay=5 * TS, doppler=2 / (512 * TS), Ts=TS)
    H = build_effective_channel(ps, ideal_rc(), 32, 16)
    d = crandn(rng, 512)
    assert np.linalg.norm(H @ d) == pytest.approx(np.linalg.norm(d), rel=1e-6)


def test_metadata_and_validation(g_tfl):
    H = build_effective_channel(PathSet.single(Ts=g_tfl.Ts), g_tfl, 8, 4)
    assert H.n_paths == 1 and H.pulse == g_tfl.label
    with pytest.raises(ValueError):
        EffectiveChannelMatrix(np.eye(5), 8, 4)
    bad = np.eye(32, dtype=complex)
    bad[0, 0] = np.nan
    with pytest.raises(FloatingPointError):
        EffectiveChannelMatrix(bad, 8, 4)


# ---------------------------------------------------------------------------
# helpers

def test_apply_dd():
    rng = np.random.default_rng(5)
    d = crandn(rng, 32)
    np.testing.assert_allclose(apply_dd(np.eye(32), d), d)
    A = crandn(rng, 32, 32)
    e = crandn(rng, 32)
    np.testing.assert_allclose(apply_dd(A, 2 * d + 3j * e), 2 * apply_dd(A, d) + 3j * apply_dd(A, e), atol=1e-12)
    with pytest.raises(ValueError):
        apply_dd(A, d[:10])


def test_apply_dd_matches_double_sum(g_rc):
    rng = np.random.default_rng(6)
    M, N = 4, 2
    ps = random_paths(rng, 2, g_rc.Ts, 0.8, M, N)
    H = build_effective_channel(ps, g_rc, M, N)
    d = crandn(rng, M * N)
    Hb = brute_force_H(ps, g_rc, M, N)
    z = np.array([sum(Hb[r, c] * d[c] for c in range(M * N)) for r in range(M * N)])
    np.testing.assert_allclose(apply_dd(H, d), z, atol=1e-10)


def test_dzt_sequence():
    rng = np.random.default_rng(7)
    x = crandn(rng, 32)
    Z = dzt_sequence(x, 8, 4)
    np.testing.assert_allclose(Z, dzt_array(x, 8, 4))
    np.testing.assert_allclose(Z, naive_dzt(x, 8, 4), atol=1e-12)
    assert np.linalg.norm(Z) == pytest.approx(np.linalg.norm(x))
    ones = dzt_sequence(np.ones(32), 8, 4)
    np.testing.assert_allclose(ones[:, 1:], 0, atol=1e-12)
    np.testing.assert_allclose(ones[:, 0], 2.0)
    with pytest.raises(ValueError):
        dzt_sequence(np.ones(30), 8, 4)


def test_doppler_sequence():
    u = doppler_sequence(1.0, 8, 4)
    np.testing.assert_allclose(u, np.exp(2j * np.pi * np.arange(32) / 32))


def test_dd_spread_integer_is_one_bin():
    M, N = 32, 16
    ps = PathSet.single(delay=2 * TS, doppler=3 / (M * N * TS), Ts=TS)
    Z = dd_spread(build_effective_channel(ps, ideal_rc(), M, N), 16, 8)
    E = Z ** 2
    assert E[18, 11] / E.sum() > 0.999


# ---------------------------------------------------------------------------
# waveform equivalence

@pytest.mark.parametrize("name", ["rc", "tfl"])
def test_zero_doppler_waveform_equivalence(sec5_pulses, name):
    proto = sec5_pulses[name]
    g = effective_pulse(proto)
    cfg = ModemConfig(proto)
    frame = DDFrame(crandn(np.random.default_rng(8), 32, 16))
    for seed in range(3):
        ps = generate_channel(ChannelConfig(speed_kmh=0), np.random.default_rng(seed), TS)
        z = vec(receive(apply_channel_waveform(transmit(frame, cfg), ps), cfg).values)
        Hd = build_effective_channel(ps, g, 32, 16) @ frame.vec()
        assert rel(z, Hd) < 1e-3


def test_integer_doppler_waveform_equivalence(sec5_pulses):
    # with whole-bin Doppler the cyclic extension wraps without a phase jump
    proto = sec5_pulses["tfl"]
    g = effective_pulse(proto)
    cfg = ModemConfig(proto)
    frame = DDFrame(crandn(np.random.default_rng(9), 32, 16))
    res = 1 / (512 * TS)
    for seed in range(3):
        ps = generate_channel(ChannelConfig(speed_kmh=500), np.random.default_rng(seed), TS)
        ps = PathSet(ps.gains, ps.delays, np.round(ps.dopplers / res) * res, TS)
        z = vec(receive(apply_channel_waveform(transmit(frame, cfg), ps), cfg).values)
        Hd = build_effective_channel(ps, g, 32, 16) @ frame.vec()
        assert rel(z, Hd) < 1e-2
