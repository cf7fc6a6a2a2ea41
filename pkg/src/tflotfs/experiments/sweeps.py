"""Figure-style experiments: BER/NMSE sweeps and the pulse dumps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import PathSet
from ..effective_channel import build_effective_channel, dd_spread
from ..pulses import EffectivePulse, effective_pulse, srrc_prototype, tfl_prototype
from .config import ExperimentConfig
from .records import ResultRecord, records_from_outcome
from .runner import SweepOutcome, run_sweep


@dataclass(frozen=True)
class SweepResult:
    ber: list
    nmse: list
    outcome: SweepOutcome

    @property
    def records(self) -> list[ResultRecord]:
        return self.ber + self.nmse

    @property
    def failures(self) -> list:
        return self.outcome.failures


def run_sweep_records(cfg: ExperimentConfig, kind: str, workers: int | None = None) -> SweepResult:
    out = run_sweep(cfg, kind, workers)
    return SweepResult(records_from_outcome(out, "ber"), records_from_outcome(out, "nmse"), out)


def run_ber_vs_snr(cfg: ExperimentConfig, workers: int | None = None) -> list[ResultRecord]:
    return run_sweep_records(cfg, "snr", workers).ber


def run_nmse_vs_snr(cfg: ExperimentConfig, workers: int | None = None) -> list[ResultRecord]:
    cfg = cfg.replace(csi=("estimated",))
    return run_sweep_records(cfg, "snr", workers).nmse


def run_ber_vs_speed(cfg: ExperimentConfig, workers: int | None = None) -> list[ResultRecord]:
    return run_sweep_records(cfg, "speed", workers).ber


def run_ber_vs_to(cfg: ExperimentConfig, workers: int | None = None) -> list[ResultRecord]:
    """BER against fractional timing offset; detection uses the offset-free channel."""
    return run_sweep_records(cfg, "to", workers).ber


def select(records, pulse: str, mode: str, metric: str = "ber") -> tuple[np.ndarray, np.ndarray]:
    """``(sweep values, means)`` of one curve, sorted by sweep value."""
    rows = sorted((r.sweep_value, r.mean) for r in records
                  if r.pulse == pulse and r.mode == mode and r.metric == metric)
    if not rows:
        raise KeyError((pulse, mode, metric))
    x, y = zip(*rows)
    return np.array(x), np.array(y)


def required_snr(snr_db, ber, target: float) -> float:
    """SNR at which a BER curve first reaches ``target`` (log-BER interpolation).

    Returns ``inf`` when the curve never gets there inside the sweep.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    for i in range(snr_db.size):
        if ber[i] <= target:
            if i == 0:
                return float(snr_db[0])
            lo, hi = np.log10(max(ber[i - 1], 1e-300)), np.log10(max(ber[i], 1e-300))
            t = np.log10(target)
            if hi == lo:
                return float(snr_db[i])
            return float(snr_db[i - 1] + (snr_db[i] - snr_db[i - 1]) * (t - lo) / (hi - lo))
    return float("inf")


def snr_gap(records, mode: str, reference: str = "tfl", other: str = "rc", at_snr: float | None = None) -> float:
    """Extra SNR ``other`` needs to reach the BER ``reference`` has at ``at_snr``.

    ``at_snr`` defaults to the second-highest SNR in the sweep, the highest
    point at which the other curve can still be seen catching up.
    """
    x, ref = select(records, reference, mode)
    xo, oth = select(records, other, mode)
    if at_snr is None:
        at_snr = x[-2] if x.size > 1 else x[-1]
    target = float(ref[np.flatnonzero(np.isclose(x, at_snr))[0]])
    if target == 0.0:
        return float("nan")
    return required_snr(xo, oth, target) - required_snr(x, ref, target)


# ---------------------------------------------------------------------------
# pulse dumps

def _pulse(cfg: ExperimentConfig, name: str, rolloff: float | None = None) -> EffectivePulse:
    if name == "rc":
        beta = cfg.rolloff if rolloff is None else rolloff
        return effective_pulse(srrc_prototype(beta, Q=cfg.Q, span=cfg.span, Ts=cfg.Ts))
    return effective_pulse(tfl_prototype(cfg.tfl_coeffs, scale=cfg.tfl_scale, Q=cfg.Q, span=cfg.span, Ts=cfg.Ts))


PULSE_DUMP_COLUMNS = ("pulse", "path_delay", "kind", "t_over_Ts", "g_value")


def dump_pulse_response(cfg: ExperimentConfig) -> list[tuple]:
    """Received pulses ``g(t - tau_i)`` for unit-gain, Doppler-free paths.

    Rows are ``(pulse, path_delay, kind, t_over_Ts, g_value)`` with times and delays in
    units of ``Ts``; ``kind`` is ``"fine"`` for the fine-grid curve and
    ``"sampled"`` for the symbol-spaced samples ``t = k``.
    """
    rows = []
    W = cfg.dump_window
    fine = np.arange(-W * cfg.Q, W * cfg.Q + 1) / cfg.Q
    ks = np.arange(-int(W), int(W) + 1, dtype=float)
    for name in cfg.pulses:
        g = _pulse(cfg, name)
        label = g.label
        for tau in cfg.dump_delays:
            for kind, t in (("fine", fine + tau), ("sampled", ks)):
                vals = g((t - tau) * cfg.Ts)
                rows.extend((label, float(tau), kind, float(ti), float(v)) for ti, v in zip(t, vals))
    return rows


def sampled_response(rows, pulse: str, delay: float) -> dict[float, float]:
    return {t: v for p, d, kind, t, v in rows if p == pulse and np.isclose(d, delay) and kind == "sampled"}


def spread_pulses(cfg: ExperimentConfig) -> list[EffectivePulse]:
    out = [_pulse(cfg, "rc", b) for b in cfg.spread_rolloffs]
    return out + [_pulse(cfg, "tfl")]


def dump_dd_spread(cfg: ExperimentConfig) -> dict[str, np.ndarray]:
    """``|Z[m, n]|`` for a unit impulse through one fractional path, per pulse."""
    l, k = cfg.spread_bin
    ps = PathSet.single(delay=cfg.spread_delay * cfg.Ts,
                        doppler=cfg.spread_doppler / (cfg.M * cfg.N * cfg.Ts), Ts=cfg.Ts)
    return {g.label: dd_spread(build_effective_channel(ps, g, cfg.M, cfg.N), l, k) for g in spread_pulses(cfg)}


def spread_leakage(Z: np.ndarray, centre: int, halfwidth: int = 1) -> float:
    """Energy fraction outside delay rows ``centre +- halfwidth`` (all Doppler bins)."""
    E = np.abs(Z) ** 2
    rows = np.arange(centre - halfwidth, centre + halfwidth + 1) % Z.shape[0]
    return float(1.0 - E[rows].sum() / E.sum())


def spread_centre(cfg: ExperimentConfig) -> int:
    return (cfg.spread_bin[0] + int(np.floor(cfg.spread_delay + 0.5))) % cfg.M
