"""Sparse doubly-selective channels: generation, waveform application, noise.

A channel is a short list of paths ``(h_i, tau_i, nu_i)``.  Delays are
``(i + a_i) * Ts`` with a random fractional part ``a_i``; Dopplers follow a
Jakes-style ``nu_max * cos(theta_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ChannelConfig:
    P: int = 6
    pdp_decay: float = 1.0
    speed_kmh: float = 500.0
    f_c: float = 5.9e9
    frac_delay_range: tuple = (-0.5, 0.5)
    fractional_delay: bool = True

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("need at least one path")
        if self.speed_kmh < 0:
            raise ValueError("speed must be non-negative")

    @property
    def nu_max(self) -> float:
        return max_doppler(self.speed_kmh, self.f_c)


def max_doppler(speed_kmh: float, f_c: float) -> float:
    return f_c * (speed_kmh / 3.6) / SPEED_OF_LIGHT


@dataclass(frozen=True)
class PathSet:
    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    Ts: float = field(default=1.0)

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=np.complex128))
        d = np.atleast_1d(np.asarray(self.delays, dtype=float))
        v = np.atleast_1d(np.asarray(self.dopplers, dtype=float))
        if not g.shape == d.shape == v.shape:
            raise ValueError("gains, delays and dopplers must have equal length")
        if np.any(d < 0):
            raise ValueError("path delays must be non-negative")
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "dopplers", v)

    def __len__(self) -> int:
        return self.gains.size

    @classmethod
    def single(cls, gain=1.0, delay=0.0, doppler=0.0, Ts=1.0) -> "PathSet":
        return cls([gain], [delay], [doppler], Ts)

    def shifted_gains(self) -> np.ndarray:
        """``h_i' = h_i exp(j 2 pi nu_i tau_i)``."""
        return self.gains * np.exp(2j * np.pi * self.dopplers * self.delays)

    def doppler_bins(self, M: int, N: int) -> np.ndarray:
        """Doppler normalised to the resolution ``1/(M N Ts)``."""
        return self.dopplers * M * N * self.Ts

    def max_delay_samples(self) -> float:
        return float(self.delays.max() / self.Ts)


def generate_channel(cfg: ChannelConfig, rng: np.random.Generator, Ts: float) -> PathSet:
    """Draw one realisation with an exponential power-delay profile.

    The first tap's fractional delay is clamped to be non-negative so that
    ``tau_0 >= 0``.
    """
    i = np.arange(cfg.P)
    power = np.exp(-cfg.pdp_decay * i)
    power /= power.sum()
    gains = np.sqrt(power / 2) * (rng.standard_normal(cfg.P) + 1j * rng.standard_normal(cfg.P))
    lo, hi = cfg.frac_delay_range
    frac = rng.uniform(lo, hi, cfg.P)
    if not cfg.fractional_delay:
        frac[:] = 0.0
    frac[0] = min(max(frac[0], 0.0), hi)
    delays = (i + frac) * Ts
    theta = rng.uniform(0.0, 2 * np.pi, cfg.P)
    dopplers = cfg.nu_max * np.cos(theta)
    return PathSet(gains, delays, dopplers, Ts)


@dataclass(frozen=True)
class Waveform:
    """Fine-grid baseband waveform; sample ``k`` sits at ``t0 + k*Ts/Q``."""

    samples: np.ndarray = field(repr=False)
    Q: int
    Ts: float
    t0: float

    @property
    def dt(self) -> float:
        return self.Ts / self.Q

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) * self.dt

    def __len__(self) -> int:
        return self.samples.size


class _Delayer:
    """``x[k - shift]`` for ``k < out_len``: integer shift plus a cubic-spline remainder.

    The spline is built once and shared by every path.
    """

    pad = 4

    def __init__(self, x: np.ndarray, out_len: int):
        self.x = x
        self.out_len = out_len
        self._spline = None

    def spline(self) -> CubicSpline:
        if self._spline is None:
            # pad so the spline sees the zero run-in/run-out
            pad = self.pad
            xp = np.concatenate([np.zeros(pad), self.x, np.zeros(pad)])
            self._spline = CubicSpline(np.arange(-pad, self.x.size + pad), xp)
        return self._spline

    def __call__(self, shift: float) -> np.ndarray:
        x, out_len = self.x, self.out_len
        n_int = int(np.floor(shift))
        frac = shift - n_int
        y = np.zeros(out_len, dtype=np.complex128)
        if frac < 1e-12:
            stop = min(out_len, n_int + x.size)
            y[n_int:stop] = x[: stop - n_int]
            return y
        lo = max(n_int - self.pad, 0)
        hi = min(n_int + x.size + self.pad + 1, out_len)
        k = np.arange(lo, hi) - shift
        y[lo:hi] = self.spline()(k)
        return y


def _delayed(x: np.ndarray, shift: float, out_len: int) -> np.ndarray:
    return _Delayer(x, out_len)(shift)


def apply_channel_waveform(tx: Waveform, ps: PathSet) -> Waveform:
    """``r(t) = sum_i h_i tx(t - tau_i) exp(j 2 pi nu_i t)`` on the fine grid."""
    if not np.isclose(ps.Ts, tx.Ts):
        raise ValueError("path set and waveform disagree on Ts")
    extra = int(np.ceil(ps.delays.max() / tx.dt)) + 1 if len(ps) else 0
    out_len = tx.samples.size + extra
    t = tx.t0 + np.arange(out_len) * tx.dt
    delay = _Delayer(tx.samples, out_len)
    r = np.zeros(out_len, dtype=np.complex128)
    for h, tau, nu in zip(ps.gains, ps.delays, ps.dopplers):
        r += h * delay(tau / tx.dt) * np.exp(2j * np.pi * nu * t)
    return Waveform(r, tx.Q, tx.Ts, tx.t0)


def noise_variance(snr_db: float) -> float:
    """Per-sample noise variance for unit symbol energy; 0 at infinite SNR."""
    return 0.0 if np.isposinf(snr_db) else 10.0 ** (-snr_db / 10.0)


def add_awgn(sig: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    sig = np.asarray(sig, dtype=np.complex128)
    var = noise_variance(snr_db)
    if var == 0.0:
        return sig.copy()
    w = rng.standard_normal(sig.shape) + 1j * rng.standard_normal(sig.shape)
    return sig + np.sqrt(var / 2) * w


@dataclass(frozen=True)
class TimingOffset:
    """Receiver samples the matched-filter output at ``(l + delta) * Ts``."""

    delta: float = 0.0

    def fine_positions(self, first: int, count: int, Q: int) -> np.ndarray:
        """Fractional fine-grid positions of samples ``first .. first+count-1``."""
        return (np.arange(first, first + count) + self.delta) * Q


def fractional_to(delta: float) -> TimingOffset:
    if not 0.0 <= delta < 0.5:
        raise ValueError(f"fractional timing offset {delta} outside [0, 0.5)")
    return TimingOffset(float(delta))
