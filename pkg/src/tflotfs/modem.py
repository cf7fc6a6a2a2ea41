"""Transmit and receive chains between bits and the delay-Doppler grid.

Time origin: the first post-CP sample ``s[0]`` is transmitted at ``t = 0``,
so CP samples sit at negative times.  The receiver is aligned to this known
frame start; only the fractional timing offset is left uncompensated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from .channel import TimingOffset, Waveform, fractional_to
from .grid_zak import DDFrame, TimeSignal, add_cp, dzt, idzt, remove_cp, unvec, vec
from .pulses import PulsePrototype

QAM4 = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


@dataclass(frozen=True)
class ModemConfig:
    pulse: PulsePrototype
    M: int = 32
    N: int = 16
    delta_f: float = 15e3
    f_c: float = 5.9e9
    M_cp: int = 16
    M_cs: int = 8
    qam_order: int = 4

    def __post_init__(self):
        if self.qam_order != 4:
            raise ValueError("only 4-QAM is supported")
        if not np.isclose(self.pulse.Ts, self.Ts, rtol=1e-9):
            raise ValueError(f"pulse built for Ts={self.pulse.Ts}, modem needs {self.Ts}")
        if self.M_cp + self.M_cs > self.M * self.N:
            raise ValueError("cyclic extensions longer than the frame")

    @property
    def Ts(self) -> float:
        return 1.0 / (self.M * self.delta_f)

    @property
    def Q(self) -> int:
        return self.pulse.Q

    @property
    def doppler_resolution(self) -> float:
        return 1.0 / (self.M * self.N * self.Ts)

    @property
    def symbol_count(self) -> int:
        return self.M * self.N


def symbol_period(M: int, delta_f: float) -> float:
    return 1.0 / (M * delta_f)


def _mask_vec(mask, M: int, N: int) -> np.ndarray:
    if mask is None:
        return np.ones(M * N, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    return vec(mask) if mask.ndim == 2 else mask


def qam4_modulate(bits: np.ndarray) -> np.ndarray:
    """Gray 4-QAM: bit pair ``b1 b0`` -> ``((1-2 b1) + j(1-2 b0)) / sqrt(2)``."""
    b = np.asarray(bits, dtype=np.int8).reshape(-1, 2)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2)


def qam4_demodulate(symbols: np.ndarray) -> np.ndarray:
    s = np.asarray(symbols)
    bits = np.empty((s.size, 2), dtype=np.int8)
    bits[:, 0] = s.real < 0
    bits[:, 1] = s.imag < 0
    return bits.reshape(-1)


def map_bits(bits: np.ndarray, M: int, N: int, mask=None) -> DDFrame:
    """Place 4-QAM symbols on the ``mask`` positions (column-major), zeros elsewhere."""
    m = _mask_vec(mask, M, N)
    bits = np.asarray(bits)
    if bits.size != 2 * int(m.sum()):
        raise ValueError(f"expected {2 * int(m.sum())} bits, got {bits.size}")
    d = np.zeros(M * N, dtype=np.complex128)
    d[m] = qam4_modulate(bits)
    return DDFrame(unvec(d, M, N))


def demap(frame: DDFrame | np.ndarray, mask=None) -> np.ndarray:
    """Hard minimum-distance decisions on the masked positions."""
    if isinstance(frame, DDFrame):
        d, M, N = frame.vec(), frame.M, frame.N
    else:
        d = np.asarray(frame).reshape(-1)
        M, N = d.size, 1
    return qam4_demodulate(d[_mask_vec(mask, M, N)] if mask is not None else d)


def transmit(frame: DDFrame, cfg: ModemConfig) -> Waveform:
    """IDZT, cyclic extensions, then pulse shaping on the fine grid."""
    if (frame.M, frame.N) != (cfg.M, cfg.N):
        raise ValueError("frame shape does not match the modem")
    s_cp = add_cp(idzt(frame), cfg.M_cp, cfg.M_cs)
    Q = cfg.Q
    up = np.zeros(len(s_cp) * Q - Q + 1, dtype=np.complex128)
    up[::Q] = s_cp.samples
    x = fftconvolve(up, cfg.pulse.samples)
    t0 = -cfg.M_cp * cfg.Ts - cfg.pulse.span * cfg.Ts
    return Waveform(x, Q, cfg.Ts, t0)


def matched_filter(waveform: Waveform, cfg: ModemConfig) -> Waveform:
    p = cfg.pulse
    y = fftconvolve(waveform.samples, p.samples[::-1].conj()) * p.dt
    return Waveform(y, waveform.Q, waveform.Ts, waveform.t0 - p.span * cfg.Ts)


def sample_frame(y: Waveform, cfg: ModemConfig, offset: TimingOffset) -> TimeSignal:
    """Symbol-rate samples of the MF output at ``(l + delta) Ts`` over CP + frame + CS."""
    first = -cfg.M_cp
    count = cfg.M_cp + cfg.M * cfg.N + cfg.M_cs
    pos = offset.fine_positions(first, count, cfg.Q) - y.t0 / y.dt
    if pos.min() < 0 or pos.max() > y.samples.size - 1:
        raise ValueError("waveform shorter than one frame")
    if np.allclose(pos, np.round(pos), atol=1e-9):
        vals = y.samples[np.round(pos).astype(int)]
    else:
        lo = max(int(np.floor(pos.min())) - 4, 0)
        hi = min(int(np.ceil(pos.max())) + 5, y.samples.size)
        vals = CubicSpline(np.arange(lo, hi), y.samples[lo:hi])(pos)
    return TimeSignal(vals, cp_len=cfg.M_cp, cs_len=cfg.M_cs)


def receive_samples(waveform: Waveform, cfg: ModemConfig, delta_to: float = 0.0) -> TimeSignal:
    """Matched filter, offset sampling and CP/CS removal (delay-time samples)."""
    if waveform.samples.size < cfg.M * cfg.N * cfg.Q:
        raise ValueError("waveform shorter than one frame")
    y = matched_filter(waveform, cfg)
    return remove_cp(sample_frame(y, cfg, fractional_to(delta_to)))


def receive(waveform: Waveform, cfg: ModemConfig, delta_to: float = 0.0) -> DDFrame:
    return dzt(receive_samples(waveform, cfg, delta_to), cfg.M, cfg.N)
