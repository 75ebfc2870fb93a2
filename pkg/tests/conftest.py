import numpy as np
import pytest

from mfskmodem.signal import ModemProfile


@pytest.fixture(scope="session")
def full_profile():
    return ModemProfile(sample_rate_hz=11025.0, symbol_len=4096, tone_count=64,
                        sync_bin=472, tone_offset=2, ref_bandwidth_hz=2500.0)


@pytest.fixture(scope="session")
def reduced_profile():
    return ModemProfile(sample_rate_hz=11025.0, symbol_len=512, tone_count=8,
                        sync_bin=59, tone_offset=2, ref_bandwidth_hz=2500.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
