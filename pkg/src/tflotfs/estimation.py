"""Embedded PCP pilot, channel estimation, MMSE detection and NMSE.

Pilot layout along the delay axis of one Doppler column::

    | guard_pre | prefix | x[0] .. x[L-1] | suffix | guard_post | data ... |

``x`` is a length-``L`` unit-modulus Zadoff-Chu sequence, ``prefix``/``suffix``
are its cyclic extensions, and every row of the pilot block is data-free
across *all* Doppler bins.  In the delay-time domain the pilot therefore
reappears in each of the N time slots, where the cyclic extensions make the
slot's channel act on it circularly: one length-``L`` DFT division per slot
gives ``L`` delay taps (lags ``-acausal .. L-1-acausal``).  The N per-slot
snapshots are then fitted with a complex-exponential basis expansion along
time, and the fitted responses are fed back through the effective-channel
builder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .effective_channel import Response, effective_channel_from_responses
from .grid_zak import DDFrame, idzt_array, unvec, vec


@dataclass(frozen=True)
class PilotLayout:
    M: int = 32
    N: int = 16
    pcp_len: int = 9
    acausal: int = 2
    pilot_power_db: float = 30.0
    pilot_doppler_bin: int = 0
    start: int = 0
    delay_guard_pre: int = 1
    delay_guard_post: int = 1
    zc_root: int = 1

    def __post_init__(self):
        if not 0 <= self.acausal < self.pcp_len:
            raise ValueError("acausal taps must be fewer than the pilot length")
        if self.stop > self.M:
            raise ValueError(
                f"pilot block needs rows {self.start}..{self.stop - 1} but M={self.M}"
            )
        if not 0 <= self.pilot_doppler_bin < self.N:
            raise ValueError("pilot Doppler bin outside the grid")

    @property
    def prefix(self) -> int:
        return self.pcp_len - 1 - self.acausal

    @property
    def suffix(self) -> int:
        return self.acausal

    @property
    def pilot_rows(self) -> range:
        first = self.start + self.delay_guard_pre
        return range(first, first + self.prefix + self.pcp_len + self.suffix)

    @property
    def observation_rows(self) -> range:
        first = self.pilot_rows.start + self.prefix
        return range(first, first + self.pcp_len)

    @property
    def stop(self) -> int:
        return (
            self.start + self.delay_guard_pre + self.prefix + self.pcp_len
            + self.suffix + self.delay_guard_post
        )

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.acausal, self.pcp_len - self.acausal)

    @property
    def pilot_amplitude(self) -> float:
        return 10.0 ** (self.pilot_power_db / 20.0)

    def sequence(self) -> np.ndarray:
        L, u = self.pcp_len, self.zc_root
        n = np.arange(L)
        return np.exp(-1j * np.pi * u * n * (n + L % 2) / L)

    def pilot_column(self) -> np.ndarray:
        """Pilot values on ``pilot_rows`` (prefix, sequence, suffix)."""
        x = self.sequence()
        ext = np.concatenate([x[self.pcp_len - self.prefix:], x, x[: self.suffix]])
        return self.pilot_amplitude * ext

    def masks(self) -> tuple[np.ndarray, np.ndarray]:
        """``(data, pilot)`` boolean M x N masks; the rest is guard."""
        data = np.ones((self.M, self.N), dtype=bool)
        data[self.start:self.stop, :] = False
        pilot = np.zeros((self.M, self.N), dtype=bool)
        pilot[self.pilot_rows.start:self.pilot_rows.stop, self.pilot_doppler_bin] = True
        return data, pilot

    def pilot_frame(self) -> np.ndarray:
        P = np.zeros((self.M, self.N), dtype=np.complex128)
        P[self.pilot_rows.start:self.pilot_rows.stop, self.pilot_doppler_bin] = self.pilot_column()
        return P


def embed_pilot(frame: DDFrame, layout: PilotLayout) -> tuple[DDFrame, np.ndarray]:
    """Overwrite the pilot block of ``frame``; returns the new frame and the data mask."""
    if (frame.M, frame.N) != (layout.M, layout.N):
        raise ValueError("layout does not fit the frame")
    data, _ = layout.masks()
    values = np.where(data, frame.values, 0) + layout.pilot_frame()
    return DDFrame(values), data


@dataclass(frozen=True)
class ChannelEstimate:
    """Basis-expansion coefficients per lag, the rebuilt matrix, noise variance."""

    lags: np.ndarray
    basis: np.ndarray = field(repr=False)          # [time, basis function]
    coefficients: np.ndarray = field(repr=False)   # [basis function, lag]
    snapshots: np.ndarray = field(repr=False)      # [slot, lag], per-slot deconvolution
    H: np.ndarray = field(repr=False)
    noise_var: float

    def responses(self, M: int, N: int) -> list[Response]:
        out = []
        for phi, coef in zip(self.basis.T, self.coefficients):
            g = np.zeros(M * N, dtype=np.complex128)
            g[self.lags % (M * N)] = coef
            out.append(Response(1.0, 0.0, g, u=phi))
        return out


def bem_order(nu_max: float, M: int, N: int, Ts: float) -> int:
    """Number of complex exponentials, ``2*ceil(nu_max M N Ts) + 1``."""
    return 2 * int(np.ceil(nu_max * M * N * Ts - 1e-12)) + 1


def default_basis(M: int, N: int, max_doppler_bins: float) -> np.ndarray:
    """DPS basis of size ``2*ceil(eps_max) + 3`` with half-bandwidth ``eps_max`` bins."""
    eps = max(float(max_doppler_bins), 0.0)
    K = 2 * int(np.ceil(eps - 1e-12)) + 3
    return doppler_basis(M, N, K, "dps", max_doppler_bins=eps)


def doppler_basis(M: int, N: int, n_basis: int, kind: str = "ce",
                  oversampling: int = 1, max_doppler_bins: float = 0.0) -> np.ndarray:
    """Time-variation basis over one frame, shape ``(M*N, n_basis)``.

    ``"ce"``: complex exponentials at Doppler bins ``b/oversampling``,
    ``b = -(n_basis//2) .. n_basis//2``.
    ``"dps"``: discrete prolate spheroidal sequences concentrated in
    ``|nu| <= max_doppler_bins`` Doppler bins.
    """
    MN = M * N
    k = np.arange(MN)
    if kind == "ce":
        if n_basis < 1 or n_basis % 2 == 0:
            raise ValueError(f"complex-exponential basis size must be odd, got {n_basis}")
        half = n_basis // 2
        freqs = np.arange(-half, half + 1) / oversampling
        return np.exp(2j * np.pi * np.outer(k, freqs) / MN)
    if kind == "dps":
        from scipy.signal.windows import dpss

        nw = max(max_doppler_bins, 0.5)
        return dpss(MN, nw, n_basis).T.astype(np.complex128) * np.sqrt(MN)
    raise ValueError(f"unknown basis kind {kind!r}")


def estimate_channel(
    Z: DDFrame | np.ndarray,
    layout: PilotLayout,
    basis: np.ndarray | int = 1,
    noise_var: float | None = None,
) -> ChannelEstimate:
    """Least-squares fit of a basis-expanded, time-varying delay response to the PCP.

    ``basis`` is a ``(M*N, K)`` time-variation basis or, as a shortcut, the
    odd size of a plain complex-exponential basis.  The received samples
    used are those whose whole lag window reads only pilot or guard
    positions, so no unknown data enters the fit.
    """
    Zv = Z.values if isinstance(Z, DDFrame) else np.asarray(Z)
    M, N = layout.M, layout.N
    MN = M * N
    if Zv.shape != (M, N):
        raise ValueError("received frame does not match the layout")
    if layout.pilot_amplitude == 0:
        raise ValueError("pilot power is zero; nothing to estimate from")
    Phi = doppler_basis(M, N, basis) if np.ndim(basis) == 0 else np.asarray(basis)
    if Phi.shape[0] != MN:
        raise ValueError("basis length must equal M*N")
    K = Phi.shape[1]

    L = layout.pcp_len
    lags = layout.lags
    r = idzt_array(Zv)
    s = idzt_array(layout.pilot_frame())

    # per-slot circular deconvolution of the PCP (snapshots of the response)
    q = np.arange(N)
    rows = layout.observation_rows
    obs = unvec(r, M, N)[rows.start:rows.stop, :]
    slot_phase = np.exp(2j * np.pi * q * layout.pilot_doppler_bin / N) / np.sqrt(N)
    X = np.fft.fft(layout.pilot_amplitude * layout.sequence())
    if np.min(np.abs(X)) < 1e-9 * np.max(np.abs(X)):
        raise LinAlgError("pilot sequence has a spectral null; deconvolution is singular")
    c = np.fft.ifft(np.fft.fft(obs, axis=0) / X[:, None], axis=0) / slot_phase[None, :]
    snapshots = c[lags % L, :].T

    # joint fit: r[l] = sum_{d,k} beta_k[d] Phi[l-d, k] s[l-d]
    first = layout.start + lags.max()
    last = layout.stop + lags.min()
    obs_rows = np.arange(first, last)
    ell = (obs_rows[:, None] + M * q[None, :]).reshape(-1)
    kappa = (ell[:, None] - lags[None, :]) % MN                     # [obs, lag]
    A = (Phi[kappa] * s[kappa][:, :, None]).reshape(ell.size, -1)   # columns (lag, basis)
    if ell.size < A.shape[1]:
        raise LinAlgError(f"{ell.size} pilot observations for {A.shape[1]} unknowns")
    sol, _, rank, _ = np.linalg.lstsq(A, r[ell], rcond=None)
    if rank < A.shape[1]:
        raise LinAlgError("pilot least-squares system is rank deficient")
    coef = sol.reshape(lags.size, K).T

    if noise_var is None:
        resid = r[ell] - A @ sol
        noise_var = float(np.sum(np.abs(resid) ** 2) / max(ell.size - A.shape[1], 1))

    est = ChannelEstimate(lags, Phi, coef, snapshots, np.empty((0, 0)), float(noise_var))
    H = effective_channel_from_responses(est.responses(M, N), M, N)
    return ChannelEstimate(lags, Phi, coef, snapshots, H, float(noise_var))


class MMSEEqualizer:
    """Linear MMSE for one channel matrix, reusable across noise draws.

    The Gram matrix is formed once; Cholesky factors are kept per noise
    variance, so repeated calls at the same ``sigma2`` cost two triangular
    solves.
    """

    def __init__(self, H: np.ndarray, mask=None):
        H = getattr(H, "H", H)
        if mask is not None:
            m = np.asarray(mask, dtype=bool)
            H = H[:, vec(m) if m.ndim == 2 else m]
        self.A = H
        self.gram = H.conj().T @ H
        self._factors: dict[float, tuple] = {}

    def factor(self, sigma2: float) -> tuple:
        if sigma2 not in self._factors:
            G = self.gram.copy()
            G[np.diag_indices_from(G)] += sigma2
            try:
                f = cho_factor(G)
            except LinAlgError as exc:
                raise LinAlgError("normal matrix is singular; MMSE needs sigma2 > 0 or full-rank H") from exc
            if sigma2 == 0 and np.linalg.cond(G) > 1e12:
                raise LinAlgError("normal matrix is numerically singular at sigma2 = 0")
            self._factors[sigma2] = f
        return self._factors[sigma2]

    def __call__(self, z: np.ndarray, sigma2: float) -> np.ndarray:
        return cho_solve(self.factor(sigma2), self.A.conj().T @ z)


def mmse_detect(H: np.ndarray, z: np.ndarray, sigma2: float, mask=None) -> np.ndarray:
    """Linear MMSE estimate ``(H^H H + sigma2 I)^-1 H^H z``.

    With ``mask`` only those columns of ``H`` are treated as unknown; known
    contributions (pilots) must already be subtracted from ``z``.
    """
    return MMSEEqualizer(H, mask)(z, sigma2)


def nmse(H_hat, H) -> float:
    H_hat = getattr(H_hat, "H", H_hat)
    H = getattr(H, "H", H)
    if np.shape(H_hat) != np.shape(H):
        raise ValueError("matrices differ in shape")
    return float(np.linalg.norm(H_hat - H) ** 2 / np.linalg.norm(H) ** 2)
