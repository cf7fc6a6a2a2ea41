"""Delay-Doppler input-output operator ``z = H d`` including the effective pulse.

Three constructions of the same matrix are provided:

``build_effective_channel``
    vectorised element-wise double sum over input bins (the normative form),
``block_effective_channel``
    block-circulant Hadamard form with the ``E_p`` phase masks,
``time_domain_operator``
    ``DZT o sum_i h_i' C(g_i) diag(u_i) o IDZT`` on the delay-time samples.

All three take a list of :class:`Response` items, so the same code also
rebuilds the matrix from estimated sampled responses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import circulant

from .grid_zak import dzt_array, idzt_array, unvec, vec
from .pulses import EffectivePulse, periodic_samples


@dataclass(frozen=True)
class Response:
    """One path as seen after sampling: gain ``h'``, Doppler in bins, circular ``g_i``.

    ``u`` overrides the complex-exponential time variation with an arbitrary
    length-MN sequence (used for non-exponential basis expansions).
    """

    gain: complex
    doppler_bins: float
    g: np.ndarray
    u: np.ndarray | None = None

    def time_variation(self, M: int, N: int) -> np.ndarray:
        if self.u is not None:
            return self.u
        return doppler_sequence(self.doppler_bins, M, N)


@dataclass(frozen=True)
class EffectiveChannelMatrix:
    H: np.ndarray = field(repr=False)
    M: int
    N: int
    pulse: str = ""
    n_paths: int = 0

    def __post_init__(self):
        if self.H.shape != (self.M * self.N, self.M * self.N):
            raise ValueError(f"H has shape {self.H.shape}, expected {(self.M * self.N,) * 2}")
        if not np.all(np.isfinite(self.H)):
            raise FloatingPointError("effective channel contains NaN/Inf")

    def __matmul__(self, d):
        return self.H @ d


def dzt_sequence(x: np.ndarray, M: int, N: int) -> np.ndarray:
    return dzt_array(x, M, N)


def doppler_sequence(doppler_bins: float, M: int, N: int) -> np.ndarray:
    """``u[k] = exp(j*2*pi*eps*k/(M*N))``."""
    k = np.arange(M * N)
    return np.exp(2j * np.pi * doppler_bins * k / (M * N))


def path_responses(paths, g: EffectivePulse, M: int, N: int, timing_offset: float = 0.0) -> list[Response]:
    """Sampled responses of a :class:`~tflotfs.channel.PathSet`.

    ``timing_offset`` is the receiver's fractional sampling lag in units of
    ``Ts``; sampling late by ``delta*Ts`` shifts every ``g_i`` by ``-delta*Ts``.
    """
    Ts = g.Ts
    out = []
    for h, tau, nu in zip(paths.gains, paths.delays, paths.dopplers):
        gain = h * np.exp(2j * np.pi * nu * tau)
        eps = nu * M * N * Ts
        out.append(Response(gain, eps, periodic_samples(g, tau - timing_offset * Ts, M * N)))
    return out


def _row_phase(M: int, N: int) -> np.ndarray:
    """``exp(-j*2*pi*n*rho_{m-l}/N)`` indexed ``[n, m, l]``."""
    m = np.arange(M)
    wrapped = (m[:, None] - m[None, :]) < 0
    n = np.arange(N)
    return np.where(wrapped[None], np.exp(-2j * np.pi * n / N)[:, None, None], 1.0)


def effective_channel_from_responses(responses, M: int, N: int) -> np.ndarray:
    """Dense ``MN x MN`` matrix; row ``n*M + m`` and column ``k*M + l``."""
    m = np.arange(M)
    n = np.arange(N)
    lag = (m[:, None] - m[None, :]) % M               # [m, l]
    dop = (n[:, None] - n[None, :]) % N               # [n, k]
    phase = _row_phase(M, N)
    H = np.zeros((N, M, N, M), dtype=np.complex128)
    for r in responses:
        Uz = dzt_array(r.time_variation(M, N), M, N)
        Gz = dzt_array(r.g, M, N)
        A = Uz.T[dop]                                 # [n, k, l] = Uz[l, n-k]
        B = Gz.T[:, lag] * phase                      # [n, m, l] = Gz[m-l, n] e^{..}
        H += r.gain * A[:, None, :, :] * B[:, :, None, :]
    return H.reshape(M * N, M * N)


def build_effective_channel(paths, g: EffectivePulse, M: int, N: int, timing_offset: float = 0.0) -> EffectiveChannelMatrix:
    responses = path_responses(paths, g, M, N, timing_offset)
    H = effective_channel_from_responses(responses, M, N)
    return EffectiveChannelMatrix(H, M, N, g.label, len(responses))


def block_effective_channel(responses, M: int, N: int) -> np.ndarray:
    """Block form ``sum_i h_i' (U~_i o G~_i)`` assembled block by block."""
    upper = np.triu(np.ones((M, M), dtype=bool), 1)
    H = np.zeros((M * N, M * N), dtype=np.complex128)
    for r in responses:
        Uz = dzt_array(r.time_variation(M, N), M, N)
        Gz = dzt_array(r.g, M, N)
        # block circulant U~: block (n, k) repeats row u_z^{(n-k)_N}
        U_blocks = [np.kron(np.ones((M, 1)), Uz[:, p][None, :]) for p in range(N)]
        U_tilde = np.block([[U_blocks[(n - k) % N] for k in range(N)] for n in range(N)])
        G_stack = []
        for p in range(N):
            E_p = np.where(upper, np.exp(-2j * np.pi * p / N), 1.0)
            G_stack.append(circulant(Gz[:, p]) * E_p)
        G_tilde = np.kron(np.ones((1, N)), np.vstack(G_stack))
        H += r.gain * U_tilde * G_tilde
    return H


def time_domain_apply(responses, d: np.ndarray, M: int, N: int) -> np.ndarray:
    """``vec(DZT(sum_i h_i' (s*u_i) (circ-conv) g_i))`` with ``s = IDZT(d)``."""
    s = idzt_array(unvec(d, M, N))
    r = np.zeros(M * N, dtype=np.complex128)
    for resp in responses:
        x = s * resp.time_variation(M, N)
        r += resp.gain * np.fft.ifft(np.fft.fft(x) * np.fft.fft(resp.g))
    return vec(dzt_array(r, M, N))


def time_domain_operator(responses, M: int, N: int) -> np.ndarray:
    """Matrix of :func:`time_domain_apply`, built as ``W^H H_t W``."""
    MN = M * N
    Ht = np.zeros((MN, MN), dtype=np.complex128)
    for r in responses:
        Ht += r.gain * circulant(r.g) * r.time_variation(M, N)[None, :]
    W = idzt_matrix(M, N)
    return W.conj().T @ Ht @ W


def idzt_matrix(M: int, N: int) -> np.ndarray:
    """``F_N^H kron I_M``: maps ``vec(D)`` to delay-time samples."""
    k = np.arange(N)
    FH = np.exp(2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)
    return np.kron(FH, np.eye(M))


def apply_dd(Hm: EffectiveChannelMatrix | np.ndarray, d: np.ndarray) -> np.ndarray:
    H = Hm.H if isinstance(Hm, EffectiveChannelMatrix) else np.asarray(Hm)
    d = np.asarray(d)
    if d.shape[0] != H.shape[1]:
        raise ValueError(f"vector of length {d.shape[0]} does not match H {H.shape}")
    return H @ d


def dd_spread(H: EffectiveChannelMatrix, l: int, k: int) -> np.ndarray:
    """``|Z|`` on the M x N grid for a unit impulse at delay ``l``, Doppler ``k``."""
    return np.abs(unvec(H.H[:, k * H.M + l], H.M, H.N))
