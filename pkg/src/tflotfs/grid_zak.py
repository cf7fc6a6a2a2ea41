"""Delay-Doppler grid containers and the discrete Zak transform pair.

Conventions
-----------
* ``values[m, n]`` holds delay bin ``m`` and Doppler bin ``n``.
* ``vec()`` stacks columns, so the delay-time sample index is ``n*M + m``.
* The N-point DFT is unitary (scaled by ``1/sqrt(N)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DDFrame:
    """M x N complex symbol grid in the delay-Doppler domain."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"DDFrame needs a non-empty 2-D array, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def vec(self) -> np.ndarray:
        return vec(self.values)

    @classmethod
    def from_vec(cls, d: np.ndarray, M: int, N: int) -> "DDFrame":
        return cls(unvec(d, M, N))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True)
class TimeSignal:
    """Symbol-rate delay-time samples, optionally carrying a cyclic prefix."""

    samples: np.ndarray
    cp_len: int = 0
    cs_len: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1:
            raise ValueError("TimeSignal samples must be one-dimensional")
        if self.cp_len < 0 or self.cs_len < 0 or self.cp_len + self.cs_len > s.size:
            raise ValueError(f"cyclic extensions ({self.cp_len}, {self.cs_len}) incompatible with {s.size} samples")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size


def vec(A: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(A).reshape(-1, order="F")


def unvec(a: np.ndarray, M: int, N: int) -> np.ndarray:
    a = np.asarray(a)
    if a.size != M * N:
        raise ValueError(f"length {a.size} does not match M*N = {M * N}")
    return a.reshape((M, N), order="F")


def dft_matrix(N: int) -> np.ndarray:
    """Unitary DFT matrix ``F[m, n] = exp(-2j*pi*m*n/N) / sqrt(N)``."""
    k = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)


def idzt_array(D: np.ndarray) -> np.ndarray:
    """``vec(D @ F_N^H)`` for a bare M x N array."""
    D = np.asarray(D, dtype=np.complex128)
    # D @ F^H is an inverse DFT along the Doppler axis with unitary scaling
    return vec(np.fft.ifft(D, axis=1, norm="ortho"))


def dzt_array(s: np.ndarray, M: int, N: int) -> np.ndarray:
    """Inverse of :func:`idzt_array`: un-vec then unitary DFT along Doppler."""
    S = unvec(np.asarray(s, dtype=np.complex128), M, N)
    return np.fft.fft(S, axis=1, norm="ortho")


def idzt(frame: DDFrame) -> TimeSignal:
    """Inverse discrete Zak transform, DD grid -> length-MN delay-time signal."""
    return TimeSignal(idzt_array(frame.values))


def dzt(signal: TimeSignal | np.ndarray, M: int, N: int) -> DDFrame:
    """Discrete Zak transform over the fundamental period.

    Raises
    ------
    ValueError
        If the signal still carries a CP or its length is not ``M*N``.
    """
    if isinstance(signal, TimeSignal):
        if signal.cp_len or signal.cs_len:
            raise ValueError("remove the cyclic prefix before the DZT")
        signal = signal.samples
    return DDFrame(dzt_array(signal, M, N))


def add_cp(signal: TimeSignal, M_cp: int, M_cs: int = 0) -> TimeSignal:
    """Prepend the last ``M_cp`` samples; optionally append the first ``M_cs``.

    The suffix keeps the circular model exact for the acausal half of the
    matched-filter response.
    """
    if signal.cp_len or signal.cs_len:
        raise ValueError("signal already carries a cyclic extension")
    n = len(signal)
    if not 0 <= M_cp <= n:
        raise ValueError(f"M_cp={M_cp} outside [0, {n}]")
    if not 0 <= M_cs <= n:
        raise ValueError(f"M_cs={M_cs} outside [0, {n}]")
    s = signal.samples
    return TimeSignal(np.concatenate([s[n - M_cp:], s, s[:M_cs]]), cp_len=M_cp, cs_len=M_cs)


def remove_cp(signal: TimeSignal) -> TimeSignal:
    end = len(signal) - signal.cs_len
    return TimeSignal(signal.samples[signal.cp_len:end])
