from .signal_sim import FlightState, KinematicParams, StateSignature, SignalProfile, IQSignal, sample_kinematics,\
    doppler_shift_hz, apply_doppler, synth_signal, add_noise, make_dataset, get_profile, list_profiles
from .ingest import Manifest, ManifestEntry, read_iq, write_iq, load_manifest, write_manifest, export_dataset,\
    load_signals
from .preprocess import Spectrum, WindowedBag, compensate_doppler, segment_windows, window_count, fft_magnitude,\
    filter_bank_split, zscore_per_band, make_bags
from .bags import BagSet, BagReport, bags_from_signals, write_bags, read_bags, split_bags
