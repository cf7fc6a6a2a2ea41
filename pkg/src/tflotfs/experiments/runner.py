"""Monte Carlo engine behind the BER and NMSE sweeps.

Each trial draws a channel, data bits and a unit noise realisation from
counter-seeded streams ``default_rng([seed, trial, stream, point])`` and runs
every configured pulse on exactly those draws, so pulse comparisons are
paired.  Trials run in fixed-size batches; after each batch the stopping
rule (minimum trials, then enough bit errors everywhere or the cap) is
checked.  Results are reduced in trial order, which keeps the output
independent of the worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError

from ..channel import ChannelConfig, PathSet, TimingOffset, Waveform, apply_channel_waveform, generate_channel
from ..effective_channel import build_effective_channel
from ..estimation import (MMSEEqualizer, PilotLayout, bem_order, default_basis, doppler_basis, estimate_channel,
                          nmse)
from ..grid_zak import DDFrame, dzt_array, remove_cp, unvec, vec
from ..modem import ModemConfig, matched_filter, qam4_demodulate, qam4_modulate, sample_frame, transmit
from ..pulses import effective_pulse, srrc_prototype, tfl_prototype
from .config import ExperimentConfig

log = logging.getLogger(__name__)

WORKERS_ENV = "TFLOTFS_WORKERS"
STREAM_CHANNEL, STREAM_DATA, STREAM_NOISE = 0, 1, 2


def trial_rng(seed: int, trial: int, stream: int, point: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, trial, stream, point])


@dataclass(frozen=True)
class System:
    name: str
    modem: ModemConfig
    g: object


@lru_cache(maxsize=8)
def build_systems(cfg: ExperimentConfig) -> dict[str, System]:
    out = {}
    for name in cfg.pulses:
        if name == "rc":
            proto = srrc_prototype(cfg.rolloff, Q=cfg.Q, span=cfg.span, Ts=cfg.Ts)
        else:
            proto = tfl_prototype(cfg.tfl_coeffs, scale=cfg.tfl_scale, Q=cfg.Q, span=cfg.span, Ts=cfg.Ts)
        modem = ModemConfig(proto, M=cfg.M, N=cfg.N, delta_f=cfg.delta_f, f_c=cfg.f_c,
                            M_cp=cfg.M_cp, M_cs=cfg.M_cs)
        out[name] = System(name, modem, effective_pulse(proto))
    return out


@lru_cache(maxsize=8)
def static_channel(cfg: ExperimentConfig, name: str) -> tuple[np.ndarray, MMSEEqualizer]:
    """Effective channel and equalizer of the flat AWGN link, shared by all trials."""
    M, N = cfg.M, cfg.N
    H = build_effective_channel(PathSet.single(Ts=cfg.Ts), build_systems(cfg)[name].g, M, N).H
    return H, MMSEEqualizer(H, _masks(cfg)[0])


def _masks(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(data_mask, pilot_mask, pilot)`` as vectors over the MN grid."""
    layout = pilot_layout(cfg)
    MN = cfg.M * cfg.N
    if layout is None:
        return np.ones(MN, dtype=bool), np.zeros(MN, dtype=bool), np.zeros(MN, dtype=np.complex128)
    dmask, pmask = layout.masks()
    return vec(dmask), vec(pmask), vec(layout.pilot_frame())


def pilot_layout(cfg: ExperimentConfig) -> PilotLayout | None:
    if not cfg.pilot:
        return None
    return PilotLayout(M=cfg.M, N=cfg.N, pcp_len=cfg.pcp_len, pilot_power_db=cfg.pilot_power_db,
                       pilot_doppler_bin=cfg.pilot_doppler_bin)


def channel_config(cfg: ExperimentConfig, speed_kmh: float | None = None) -> ChannelConfig:
    return ChannelConfig(P=cfg.P, pdp_decay=cfg.pdp_decay,
                         speed_kmh=cfg.speed_kmh if speed_kmh is None else speed_kmh,
                         f_c=cfg.f_c, fractional_delay=cfg.fractional_delay)


def estimator_basis(cfg: ExperimentConfig, ch: ChannelConfig) -> np.ndarray:
    eps_max = ch.nu_max * cfg.M * cfg.N * cfg.Ts
    if cfg.basis == "dps":
        if cfg.basis_size is None:
            return default_basis(cfg.M, cfg.N, eps_max)
        return doppler_basis(cfg.M, cfg.N, cfg.basis_size, "dps", max_doppler_bins=eps_max)
    if cfg.basis == "ce":
        size = cfg.basis_size or bem_order(ch.nu_max, cfg.M, cfg.N, cfg.Ts)
        return doppler_basis(cfg.M, cfg.N, size, "ce")
    raise ValueError(f"unknown basis {cfg.basis!r}")


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class Point:
    index: int
    value: float
    snr_db: float
    delta: float = 0.0


@dataclass(frozen=True)
class Group:
    """Sweep points sharing one channel realisation."""

    index: int
    channel: ChannelConfig
    points: tuple


def sweep_groups(cfg: ExperimentConfig, kind: str) -> tuple[Group, ...]:
    if kind == "snr":
        pts = tuple(Point(i, s, s) for i, s in enumerate(cfg.snr_db))
        return (Group(0, channel_config(cfg), pts),)
    if kind == "speed":
        return tuple(Group(i, channel_config(cfg, v), (Point(i, v, cfg.fixed_snr_db),))
                     for i, v in enumerate(cfg.speeds_kmh))
    if kind == "to":
        pts = tuple(Point(i, d, cfg.fixed_snr_db, d) for i, d in enumerate(cfg.to_frac))
        return (Group(0, channel_config(cfg), pts),)
    raise ValueError(f"unknown sweep {kind!r}")


def _noise_var(snr_db: float) -> float:
    return 0.0 if np.isposinf(snr_db) else 10.0 ** (-snr_db / 10.0)


def _receive_linear(wave: Waveform, modem: ModemConfig, delta: float) -> np.ndarray:
    """Matched filter, sampling at ``(l + delta) Ts``, CP/CS removal, DZT."""
    y = matched_filter(wave, modem)
    s = remove_cp(sample_frame(y, modem, TimingOffset(delta)))
    return vec(dzt_array(s.samples, modem.M, modem.N))


@dataclass
class TrialResult:
    trial: int
    # (pulse, mode, point) -> [errors, bits, nmse]
    values: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)


def run_trial(cfg: ExperimentConfig, kind: str, trial: int) -> TrialResult:
    systems = build_systems(cfg)
    layout = pilot_layout(cfg)
    M, N, Ts = cfg.M, cfg.N, cfg.Ts
    data_mask, pilot_mask, pilot = _masks(cfg)
    result = TrialResult(trial)

    for group in sweep_groups(cfg, kind):
        if cfg.channel == "awgn":
            paths = PathSet.single(Ts=Ts)
        else:
            paths = generate_channel(group.channel, trial_rng(cfg.seed, trial, STREAM_CHANNEL, group.index), Ts)
        bits = trial_rng(cfg.seed, trial, STREAM_DATA, group.index).integers(0, 2, 2 * int(data_mask.sum()))
        x = pilot.copy()
        x[data_mask] = qam4_modulate(bits)
        noise_rng = trial_rng(cfg.seed, trial, STREAM_NOISE, group.index)
        basis = estimator_basis(cfg, group.channel) if "estimated" in cfg.csi else None

        noise_wave = None
        noise_dd = None
        for name, sys_ in systems.items():
            if cfg.channel == "awgn":
                H, equalizer = static_channel(cfg, name)
            else:
                H = build_effective_channel(paths, sys_.g, M, N).H
                equalizer = None
            if cfg.chain == "waveform":
                rx = apply_channel_waveform(transmit(DDFrame(unvec(x, M, N)), sys_.modem), paths)
                if noise_wave is None:
                    # unit two-sided PSD: matched-filter output variance equals 1
                    n = rx.samples.size
                    noise_wave = (noise_rng.standard_normal(n) + 1j * noise_rng.standard_normal(n)) / np.sqrt(2 * rx.dt)
                wn = Waveform(noise_wave[: rx.samples.size], rx.Q, rx.Ts, rx.t0)
            elif noise_dd is None:
                noise_dd = (noise_rng.standard_normal(M * N) + 1j * noise_rng.standard_normal(M * N)) / np.sqrt(2)

            cache = {}
            for pt in group.points:
                if pt.delta not in cache:
                    if cfg.chain == "waveform":
                        cache[pt.delta] = (_receive_linear(rx, sys_.modem, pt.delta),
                                           _receive_linear(wn, sys_.modem, pt.delta))
                    else:
                        Hd = H if pt.delta == 0 else build_effective_channel(paths, sys_.g, M, N, pt.delta).H
                        cache[pt.delta] = (Hd @ x, noise_dd)
                z_clean, z_noise = cache[pt.delta]
                s2 = _noise_var(pt.snr_db)
                z = z_clean + np.sqrt(s2) * z_noise
                for mode in cfg.csi:
                    key = (name, mode, pt.index)
                    try:
                        if mode == "perfect":
                            if equalizer is None:
                                # the Gram matrix is shared by every SNR point
                                equalizer = MMSEEqualizer(H, data_mask)
                            H_hat, s2_det, err, eq = H, s2, np.nan, equalizer
                        else:
                            est = estimate_channel(unvec(z, M, N), layout, basis,
                                                   noise_var=s2 if cfg.genie_noise else None)
                            H_hat, s2_det, err = est.H, est.noise_var, nmse(est.H, H)
                            eq = MMSEEqualizer(H_hat, data_mask)
                        z_data = z - H_hat[:, pilot_mask] @ pilot[pilot_mask] if layout else z
                        d_hat = eq(z_data, s2_det)
                        if not np.all(np.isfinite(d_hat)):
                            raise FloatingPointError("non-finite MMSE output")
                    except (LinAlgError, FloatingPointError) as exc:
                        result.failures.append(f"trial {trial} {key}: {exc}")
                        continue
                    errors = int(np.count_nonzero(qam4_demodulate(d_hat) != bits))
                    result.values[key] = (errors, bits.size, err)
    return result


# ---------------------------------------------------------------------------
# aggregation

@dataclass
class Accumulator:
    errors: int = 0
    bits: int = 0
    ber: list = field(default_factory=list)
    nmse: list = field(default_factory=list)

    def add(self, errors: int, bits: int, err: float):
        self.errors += errors
        self.bits += bits
        self.ber.append(errors / bits)
        if np.isfinite(err):
            self.nmse.append(err)


@dataclass
class SweepOutcome:
    cfg: ExperimentConfig
    kind: str
    trials: int
    stats: dict
    failures: list

    def point_value(self, index: int) -> float:
        for g in sweep_groups(self.cfg, self.kind):
            for p in g.points:
                if p.index == index:
                    return p.value
        raise KeyError(index)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return max(os.cpu_count() or 1, 1)
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return n


def _enough(stats: dict, target: int) -> bool:
    return all(acc.errors >= target for acc in stats.values())


def run_sweep(cfg: ExperimentConfig, kind: str, workers: int | None = None) -> SweepOutcome:
    """Run trials in batches until the stopping rule fires."""
    workers = worker_count() if workers is None else workers
    stats: dict = {}
    failures: list = []
    done = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while done < cfg.max_trials:
            count = min(cfg.batch, cfg.max_trials - done)
            ids = range(done, done + count)
            if pool is None:
                results = [run_trial(cfg, kind, t) for t in ids]
            else:
                results = list(pool.map(run_trial, [cfg] * count, [kind] * count, ids))
            for res in sorted(results, key=lambda r: r.trial):
                for key in sorted(res.values):
                    stats.setdefault(key, Accumulator()).add(*res.values[key])
                failures.extend(res.failures)
            done += count
            log.info("%s sweep: %d trials", kind, done)
            if done >= cfg.min_trials and _enough(stats, cfg.target_errors):
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepOutcome(cfg, kind, done, stats, failures)
