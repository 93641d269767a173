""" Synthetic UAV RF baseband signals

Each class of a label set gets a spectral signature (tones, FM bandwidth, burst
gating). A signal is its signature summed at baseband, attenuated by distance,
frequency shifted by the Doppler offset of kinematics drawn for its flight state and
finally buried in complex white Gaussian noise at the requested SNR.

All randomness comes from an explicit numpy Generator; datasets derive one
substream per signal from (seed, index).
"""
import concurrent.futures
import dataclasses
import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from rfsf.common.constants import SPEED_OF_LIGHT, STATIONARY, HOVERING, FLYING, get_label_set, kinematic_class
from rfsf.common.errors import ConfigError, ContractError

__all__ = [
    'FlightState', 'KinematicParams', 'StateSignature', 'SignalProfile', 'IQSignal', 'KINEMATIC_RANGES',
    'sample_kinematics', 'doppler_shift_hz', 'apply_doppler', 'synth_signal', 'add_noise', 'make_dataset',
    'get_profile', 'list_profiles']

_logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class FlightState:
    index: int
    name: str
    label_set: str = ''  # empty for classes that only exist in a manifest

    def __post_init__(self):
        if self.index < 0:
            raise ConfigError(f'class index must be >= 0, got {self.index}')
        if self.label_set:
            labels = get_label_set(self.label_set)
            if labels is None:
                raise ConfigError(f'Unknown label set {self.label_set}')
            if self.index >= len(labels) or labels[self.index] != self.name:
                raise ConfigError(f'{self.name} is not class {self.index} of {self.label_set}')

    @classmethod
    def of(cls, label_set, index_or_name):
        labels = get_label_set(label_set)
        if labels is None:
            raise ConfigError(f'Unknown label set {label_set}')
        if isinstance(index_or_name, str):
            if index_or_name.upper() not in labels:
                raise ConfigError(f'{index_or_name} is not a class of {label_set}')
            index = labels.index(index_or_name.upper())
        else:
            index = int(index_or_name)
            if not 0 <= index < len(labels):
                raise ConfigError(f'class index {index} out of range for {label_set} ({len(labels)} classes)')
        return cls(index=index, name=labels[index], label_set=label_set.upper())

    @property
    def num_classes(self):
        labels = get_label_set(self.label_set) if self.label_set else None
        return len(labels) if labels is not None else None

    @property
    def kinematic_class(self):
        return kinematic_class(self.name)


@dataclasses.dataclass(frozen=True)
class KinematicParams:
    speed_mps: float = 0.
    angle_rad: float = 0.
    distance_m: float = 0.

    def __post_init__(self):
        if self.speed_mps < 0 or self.distance_m < 0 or not 0 <= self.angle_rad <= math.pi / 2:
            raise ContractError(f'invalid kinematics {self}')


# kinematic class -> (speed range m/s, angle range degrees, distance range m)
KINEMATIC_RANGES = {
    STATIONARY: ((0., 0.), (0., 0.), (0., 100.)),
    HOVERING: ((0., 5.), (0., 15.), (50., 500.)),
    FLYING: ((0., 26.), (0., 90.), (10., 1000.)),
}


def sample_kinematics(state: FlightState, rng: np.random.Generator) -> KinematicParams:
    kin = state.kinematic_class
    if kin is None:
        raise ConfigError(f'Flight state {state.name} has no kinematic class')
    (v_lo, v_hi), (a_lo, a_hi), (d_lo, d_hi) = KINEMATIC_RANGES[kin]
    speed = rng.uniform(v_lo, v_hi) if v_hi > v_lo else v_lo
    angle = math.radians(rng.uniform(a_lo, a_hi)) if a_hi > a_lo else math.radians(a_lo)
    distance = rng.uniform(d_lo, d_hi)
    # radians() of the upper bound can round a hair above pi / 2
    return KinematicParams(float(speed), float(min(angle, math.pi / 2)), float(distance))


def doppler_shift_hz(v, f_c, theta):
    """f_d = (v / c) * f_c * cos(theta)"""
    if v < 0 or f_c <= 0:
        raise ContractError(f'doppler_shift_hz needs v >= 0 and f_c > 0, got v={v}, f_c={f_c}')
    return v / SPEED_OF_LIGHT * f_c * math.cos(theta)


@dataclasses.dataclass(frozen=True)
class StateSignature:
    tones: Tuple[float, ...]  # baseband tone frequencies, Hz
    amps: Tuple[float, ...]
    mod_bw_hz: float = 0.  # peak-to-peak sinusoidal FM deviation per tone
    duty: float = 1.  # burst duty cycle, 1 = continuous
    burst_period: int = 1024  # samples

    def __post_init__(self):
        if len(self.tones) != len(self.amps):
            raise ConfigError('tones and amps differ in length')
        if not 0 < self.duty <= 1 or self.burst_period < 1:
            raise ConfigError(f'bad burst gating duty={self.duty}, period={self.burst_period}')


@dataclasses.dataclass(frozen=True)
class SignalProfile:
    name: str
    sample_rate_hz: float
    center_freq_hz: float
    bandwidth_hz: float
    label_set: str
    signatures: Dict[str, StateSignature]

    def __post_init__(self):
        if self.bandwidth_hz > self.sample_rate_hz:
            raise ConfigError(f'bandwidth {self.bandwidth_hz} exceeds sample rate {self.sample_rate_hz}')
        for name, sig in self.signatures.items():
            if not sig.tones:
                raise ConfigError(f'signature for {name} has no tones')
            if any(abs(f) > self.bandwidth_hz / 2 for f in sig.tones):
                raise ConfigError(f'signature for {name} has a tone outside +-bandwidth/2')


@dataclasses.dataclass(frozen=True, eq=False)
class IQSignal:
    samples: np.ndarray  # complex128
    sample_rate_hz: float
    label: Optional[FlightState] = None
    kinematics: Optional[KinematicParams] = None
    snr_db: float = math.nan
    center_freq_hz: float = 0.
    source: str = ''

    def __post_init__(self):
        if self.samples.ndim != 1 or self.samples.shape[0] < 1:
            raise ContractError(f'IQSignal needs a non-empty 1-D sample array, got shape {self.samples.shape}')
        if not self.sample_rate_hz > 0:
            raise ContractError(f'sample rate must be > 0, got {self.sample_rate_hz}')

    def __len__(self):
        return self.samples.shape[0]

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)


# signature templates per mode as fractions of the profile bandwidth:
# (tones, amps, mod bandwidth, duty, burst period in samples)
_MODE_TEMPLATES = dict(
    ON=((-0.30,), (1.0,), 0.005, 0.25, 512),  # narrow beacon bursts
    HO=((-0.10, 0.15), (1.0, 0.7), 0.05, 1.0, 1024),  # mid-bandwidth continuous tones
    FY=((-0.35, 0.05, 0.30), (0.8, 1.0, 0.6), 0.15, 0.5, 128),  # wide tones, fast bursts
    VR=((-0.35, 0.05, 0.30), (0.8, 1.0, 0.6), 0.15, 0.75, 192),
    BG=((0.0,), (0.05,), 0.40, 1.0, 1024),
)


def _derive_signatures(label_set, bandwidth_hz):
    labels = get_label_set(label_set)
    if labels is None:
        raise ConfigError(f'Unknown label set {label_set}')
    drones = []
    for name in labels:
        drone = name.rsplit('_', 1)[0] if '_' in name else ''
        if drone not in drones:
            drones.append(drone)
    signatures = {}
    for name in labels:
        drone, mode = name.rsplit('_', 1) if '_' in name else ('', name)
        tones, amps, mod_bw, duty, period = _MODE_TEMPLATES[mode]
        # spread drones across +-0.1 of the band so the same mode differs per airframe
        shift = 0. if len(drones) < 2 else -0.1 + 0.2 * drones.index(drone) / (len(drones) - 1)
        tones = tuple(float(np.clip(f + shift, -0.45, 0.45)) * bandwidth_hz for f in tones)
        signatures[name] = StateSignature(
            tones=tones, amps=amps, mod_bw_hz=mod_bw * bandwidth_hz, duty=duty, burst_period=period)
    return signatures


_PROFILES = dict(
    synthetic=dict(sample_rate_hz=1e6, bandwidth_hz=0.8e6, center_freq_hz=2.4375e9),
    dronedetect=dict(sample_rate_hz=60e6, bandwidth_hz=28e6, center_freq_hz=2.4375e9),
    dronerf=dict(sample_rate_hz=40e6, bandwidth_hz=40e6, center_freq_hz=2.422e9),
)


def list_profiles():
    return list(_PROFILES.keys())


def get_profile(name='synthetic', label_set='SYNTH3') -> SignalProfile:
    if name not in _PROFILES:
        raise ConfigError(f'Unknown profile {name}, expected one of {list_profiles()}')
    args = _PROFILES[name]
    return SignalProfile(
        name=name, label_set=label_set.upper(), signatures=_derive_signatures(label_set, args['bandwidth_hz']),
        **args)


def apply_doppler(signal: IQSignal, f_d) -> IQSignal:
    """Shift the signal by f_d Hz: x[n] * exp(i 2 pi f_d n / fs)."""
    if f_d == 0:
        return signal
    n = np.arange(len(signal))
    rot = np.exp(2j * np.pi * f_d * n / signal.sample_rate_hz)
    return signal.replace(samples=signal.samples * rot)


def add_noise(signal: IQSignal, snr_db, rng: np.random.Generator) -> IQSignal:
    """Add circular complex Gaussian noise so that 10 log10(Ps / Pn) = snr_db."""
    power = float(np.mean(np.abs(signal.samples) ** 2))
    if power == 0:
        raise ContractError('add_noise on a zero-power signal')
    noise_power = power / 10 ** (snr_db / 10)
    noise = rng.standard_normal(len(signal)) + 1j * rng.standard_normal(len(signal))
    noise *= math.sqrt(noise_power / 2)
    return signal.replace(samples=signal.samples + noise, snr_db=float(snr_db))


def synth_signal(
        state: FlightState,
        profile: SignalProfile,
        kinematics: KinematicParams,
        snr_db,
        n_samples: int,
        rng: np.random.Generator,
        source: str = '',
        window_len: int = 1) -> IQSignal:
    """Synthesize one labeled baseband capture. snr_db = inf disables noise.

    window_len is the downstream preprocessing window, n_samples must cover at least one.
    """
    if n_samples < max(window_len, 1):
        raise ContractError(f'n_samples ({n_samples}) must be >= the window length ({window_len})')
    sig = profile.signatures.get(state.name)
    if sig is None or not sig.tones:
        raise ConfigError(f'No spectral signature for {state.name} in profile {profile.name}')
    fs = profile.sample_rate_hz
    n = np.arange(n_samples)
    t = n / fs
    mod_rate = fs / 2048  # FM rate
    x = np.zeros(n_samples, dtype=np.complex128)
    for f, a in zip(sig.tones, sig.amps):
        phase0 = rng.uniform(0., 2 * np.pi)
        phase = 2 * np.pi * f * t + phase0
        if sig.mod_bw_hz > 0:
            phase = phase + (sig.mod_bw_hz / 2) / mod_rate * np.sin(2 * np.pi * mod_rate * t)
        x += a * np.exp(1j * phase)
    if sig.duty < 1:
        x *= (n % sig.burst_period) < max(1, int(round(sig.duty * sig.burst_period)))
    x /= max(kinematics.distance_m, 1.)

    signal = IQSignal(
        samples=x, sample_rate_hz=fs, label=state, kinematics=kinematics, snr_db=float(snr_db),
        center_freq_hz=profile.center_freq_hz, source=source)
    f_d = doppler_shift_hz(kinematics.speed_mps, profile.center_freq_hz, kinematics.angle_rad)
    signal = apply_doppler(signal, f_d)
    if math.isfinite(snr_db):
        signal = add_noise(signal, snr_db, rng)
    return signal


def make_dataset(
        counts: Dict[str, int],
        profile: SignalProfile,
        snr_range: Sequence[float] = (0., 20.),
        n_samples: int = 5248,
        seed: int = 0,
        jobs: int = 1,
        window_len: int = 1):
    """Labeled, shuffled list of IQSignal, a pure function of (counts, profile, seed).

    Args:
        counts: class name (or index) of the profile's label set -> number of signals
        snr_range: (low, high) dB, SNR drawn uniformly per signal
        jobs: worker threads, output order does not depend on it
        window_len: preprocessing window the signals must cover
    """
    plan = []
    for key, count in counts.items():
        if count < 1:
            raise ConfigError(f'count must be >= 1, got {count} for {key}')
        state = FlightState.of(profile.label_set, key)
        plan.extend([state] * count)
    snr_lo, snr_hi = snr_range

    def _one(i):
        state = plan[i]
        rng = np.random.default_rng([seed, i])
        kin = sample_kinematics(state, rng)
        snr_db = rng.uniform(snr_lo, snr_hi) if snr_hi > snr_lo else snr_lo
        return synth_signal(
            state, profile, kin, snr_db, n_samples, rng, source=f'{state.name}_{i:05d}', window_len=window_len)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(jobs) as pool:
            signals = list(pool.map(_one, range(len(plan))))
    else:
        signals = [_one(i) for i in range(len(plan))]
    order = np.random.default_rng(seed).permutation(len(signals))
    _logger.info(f'Synthesized {len(signals)} signals ({profile.name}, {profile.label_set})')
    return [signals[i] for i in order]
