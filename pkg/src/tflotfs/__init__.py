"""OTFS link-level simulator comparing a time-frequency localized pulse with RC/SRRC shaping."""

from .channel import ChannelConfig, PathSet, apply_channel_waveform, generate_channel
from .effective_channel import EffectiveChannelMatrix, build_effective_channel
from .estimation import PilotLayout, estimate_channel, mmse_detect, nmse
from .grid_zak import DDFrame, TimeSignal, dzt, idzt
from .modem import ModemConfig, receive, transmit
from .pulses import effective_pulse, srrc_prototype, tfl_prototype

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig", "DDFrame", "EffectiveChannelMatrix", "ModemConfig", "PathSet", "PilotLayout",
    "TimeSignal", "apply_channel_waveform", "build_effective_channel", "dzt", "effective_pulse",
    "estimate_channel", "generate_channel", "idzt", "mmse_detect", "nmse", "receive", "srrc_prototype",
    "tfl_prototype", "transmit",
]
