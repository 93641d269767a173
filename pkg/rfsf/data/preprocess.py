""" Doppler compensation, windowing, FFT and filter-bank normalization

signal -> compensate_doppler -> segment_windows -> fft_magnitude
       -> filter_bank_split -> zscore_per_band -> bags of t instances
"""
import dataclasses
import logging
from typing import List, Optional

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view

from rfsf.common.errors import ContractError
from .signal_sim import FlightState, IQSignal, doppler_shift_hz

__all__ = [
    'Spectrum', 'WindowedBag', 'compensate_doppler', 'segment_windows', 'window_count', 'fft_magnitude',
    'fft_magnitudes', 'band_edges', 'filter_bank_split', 'zscore_per_band', 'instances_from_signal', 'make_bags']

_logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrum:
    magnitudes: np.ndarray  # fftshift order, -fs/2 .. +fs/2
    bin_width_hz: float = 1.
    center_freq_hz: float = 0.

    def __len__(self):
        return self.magnitudes.shape[-1]


@dataclasses.dataclass(frozen=True, eq=False)
class WindowedBag:
    instances: np.ndarray  # [t, d] in temporal order
    label: Optional[FlightState]
    source: str = ''
    first_window: int = 0

    @property
    def bag_size(self):
        return self.instances.shape[0]

    @property
    def instance_dim(self):
        return self.instances.shape[1]


def compensate_doppler(signal: IQSignal, f_d) -> IQSignal:
    """Undo a Doppler offset: x[n] * exp(-i 2 pi f_d n / fs)."""
    if not abs(f_d) < signal.sample_rate_hz / 2:
        raise ContractError(f'|f_d| = {abs(f_d)} must be below fs / 2 = {signal.sample_rate_hz / 2}')
    if f_d == 0:
        return signal
    n = np.arange(len(signal))
    return signal.replace(samples=signal.samples * np.exp(-2j * np.pi * f_d * n / signal.sample_rate_hz))


def window_count(length, window_len, stride):
    return max(0, (length - window_len) // stride + 1)


def segment_windows(x, window_len, stride):
    """Overlapping windows x[k:k + N] for k = 0, stride, 2 * stride, ..., partial tail dropped.

    Returns:
        [n_windows, window_len] view of the samples.
    """
    if isinstance(x, IQSignal):
        x = x.samples
    if not 1 <= stride <= window_len:
        raise ContractError(f'need 1 <= stride ({stride}) <= window length ({window_len})')
    if x.shape[0] < window_len:
        raise ContractError(f'signal of {x.shape[0]} samples is shorter than window length {window_len}')
    return sliding_window_view(x, window_len)[::stride]


def fft_magnitudes(windows):
    """|DFT| of each row, bins reordered from -fs/2 to +fs/2."""
    return np.abs(scipy.fft.fftshift(scipy.fft.fft(windows, axis=-1), axes=-1))


def fft_magnitude(window, sample_rate_hz=1., center_freq_hz=0.) -> Spectrum:
    window = np.asarray(window)
    return Spectrum(
        magnitudes=fft_magnitudes(window),
        bin_width_hz=sample_rate_hz / window.shape[-1],
        center_freq_hz=center_freq_hz)


def band_edges(n_bins, n_bands):
    if not 1 <= n_bands <= n_bins:
        raise ContractError(f'cannot split {n_bins} bins into {n_bands} bands')
    size = n_bins // n_bands
    # last band absorbs the remainder
    return [i * size for i in range(n_bands)] + [n_bins]


def filter_bank_split(spectrum, n_bands) -> List[np.ndarray]:
    """Contiguous partition of the (last axis) bins into n_bands near-equal bands."""
    x = spectrum.magnitudes if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    edges = band_edges(x.shape[-1], n_bands)
    return [x[..., lo:hi] for lo, hi in zip(edges[:-1], edges[1:])]


def zscore_per_band(bands, eps=1e-8):
    """(x - mean) / (std + eps) per band with population std, bands concatenated."""
    out = []
    for b in bands:
        if b.shape[-1] < 1:
            raise ContractError('empty band')
        mean = b.mean(axis=-1, keepdims=True)
        std = b.std(axis=-1, keepdims=True)
        out.append((b - mean) / (std + eps))
    return np.concatenate(out, axis=-1)


def _oracle_doppler(signal, doppler_mode):
    if doppler_mode != 'oracle' or signal.kinematics is None or signal.center_freq_hz <= 0:
        return signal
    k = signal.kinematics
    return compensate_doppler(signal, doppler_shift_hz(k.speed_mps, signal.center_freq_hz, k.angle_rad))


def instances_from_signal(signal: IQSignal, config):
    """Normalized spectra of every window, [n_windows, fft_len]."""
    signal = _oracle_doppler(signal, config.doppler_mode)
    windows = segment_windows(signal.samples, config.window_len, config.stride)
    spectra = fft_magnitudes(windows)
    return zscore_per_band(filter_bank_split(spectra, config.n_bands), config.zscore_eps)


def make_bags(signal: IQSignal, config) -> List[WindowedBag]:
    """Group consecutive normalized spectra into bags of config.bag_size, short tail dropped."""
    t = config.bag_size
    length = len(signal)
    n_windows = window_count(length, config.window_len, config.stride) if length >= config.window_len else 0
    if n_windows < t:
        raise ContractError(
            f'{signal.source or "signal"}: {n_windows} windows from {length} samples, need at least {t} for one bag')
    instances = instances_from_signal(signal, config)
    n_bags = n_windows // t
    if n_windows % t:
        _logger.debug(f'{signal.source}: dropping {n_windows % t} trailing windows')
    return [
        WindowedBag(instances=instances[i * t:(i + 1) * t], label=signal.label, source=signal.source,
                    first_window=i * t)
        for i in range(n_bags)]
