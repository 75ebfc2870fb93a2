"""Named modem/model profiles and the profile configuration file.

Two profiles ship built in:

- ``jt65a-full``: the real protocol scale (11025 Hz, 4096-sample symbols,
  64 tones, sync on bin 472, 2500 Hz reference bandwidth; CNN with 128
  filters and 64 hidden units).  Training at this scale is hours on a CPU.
- ``reduced-m8``: a desk-scale cousin (512-sample symbols, 8 tones, sync
  on bin 59 so the sync frequency matches; CNN with 32 filters and 32
  hidden units) that trains in minutes and drives CI.

Extra profiles load from an INI-style file: one section per profile name,
flat keys listed in PROFILE_KEYS.  File values override builtins of the
same name.
"""

import configparser
from dataclasses import dataclass

from .nn.model import ModelConfig
from .signal import ModemProfile

PROFILE_KEYS = (
    "sample_rate_hz",
    "symbol_len",
    "tone_count",
    "sync_bin",
    "tone_offset",
    "ref_bandwidth_hz",
    "conv_filters",
    "conv_kernel",
    "hidden_units",
)


@dataclass(frozen=True)
class Profile:
    """A modem profile paired with the CNN sized for it."""

    name: str
    modem: ModemProfile
    model: ModelConfig


def _builtin_profiles():
    full = ModemProfile(sample_rate_hz=11025.0, symbol_len=4096, tone_count=64,
                        sync_bin=472, tone_offset=2, ref_bandwidth_hz=2500.0)
    reduced = ModemProfile(sample_rate_hz=11025.0, symbol_len=512, tone_count=8,
                           sync_bin=59, tone_offset=2, ref_bandwidth_hz=2500.0)
    return {
        "jt65a-full": Profile(
            "jt65a-full", full,
            ModelConfig(input_len=4096, conv_filters=128, conv_kernel=16,
                        hidden_units=64, classes=64)),
        "reduced-m8": Profile(
            "reduced-m8", reduced,
            ModelConfig(input_len=512, conv_filters=32, conv_kernel=16,
                        hidden_units=32, classes=8)),
    }


def load_profiles(path=None) -> dict:
    """Builtin profiles, optionally merged with an INI profile file."""
    profiles = _builtin_profiles()
    if path is None:
        return profiles
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read profile file {path}")
    for name in parser.sections():
        section = parser[name]
        missing = [key for key in PROFILE_KEYS if key not in section]
        if missing:
            raise ValueError(
                f"profile [{name}] is missing keys: {', '.join(missing)}"
            )
        modem = ModemProfile(
            sample_rate_hz=section.getfloat("sample_rate_hz"),
            symbol_len=section.getint("symbol_len"),
            tone_count=section.getint("tone_count"),
            sync_bin=section.getint("sync_bin"),
            tone_offset=section.getint("tone_offset"),
            ref_bandwidth_hz=section.getfloat("ref_bandwidth_hz"),
        )
        model = ModelConfig(
            input_len=modem.symbol_len,
            conv_filters=section.getint("conv_filters"),
            conv_kernel=section.getint("conv_kernel"),
            hidden_units=section.getint("hidden_units"),
            classes=modem.tone_count,
        )
        profiles[name] = Profile(name, modem, model)
    return profiles


def get_profile(name: str, path=None) -> Profile:
    profiles = load_profiles(path)
    if name not in profiles:
        known = ", ".join(sorted(profiles))
        raise ValueError(f"unknown profile {name!r} (known: {known})")
    return profiles[name]
