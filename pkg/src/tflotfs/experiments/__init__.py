"""Monte Carlo experiments, result records and the command-line interface."""

from .config import ExperimentConfig, apply_overrides, load_config
from .records import ResultRecord, read_csv, write_csv, write_sidecar
from .runner import run_sweep, trial_rng
from .sweeps import (dump_dd_spread, dump_pulse_response, run_ber_vs_snr, run_ber_vs_speed, run_ber_vs_to,
                     run_nmse_vs_snr, run_sweep_records, snr_gap)

__all__ = [
    "ExperimentConfig", "ResultRecord", "apply_overrides", "dump_dd_spread", "dump_pulse_response",
    "load_config", "read_csv", "run_ber_vs_snr", "run_ber_vs_speed", "run_ber_vs_to", "run_nmse_vs_snr",
    "run_sweep", "run_sweep_records", "snr_gap", "trial_rng", "write_csv", "write_sidecar",
]
