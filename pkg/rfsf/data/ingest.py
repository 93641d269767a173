""" Raw IQ files and CSV manifests

Raw IQ: interleaved little-endian float32 I, Q pairs, no header.
Manifest: UTF-8 CSV, '#' comment lines allowed, required header
    path,class_index,class_name,sample_rate_hz,center_freq_hz,snr_db
and optional columns label_set,speed_mps,angle_rad,distance_m. Paths are relative
to the manifest's directory.
"""
import concurrent.futures
import dataclasses
import logging
import math
import os
from typing import List, Optional

import numpy as np
import pandas as pd

from rfsf.common.constants import get_label_set
from rfsf.common.errors import FormatError
from .signal_sim import FlightState, IQSignal, KinematicParams

__all__ = [
    'MANIFEST_COLUMNS', 'OPTIONAL_COLUMNS', 'ManifestEntry', 'Manifest', 'read_iq', 'write_iq', 'load_manifest',
    'write_manifest', 'export_dataset', 'load_signals']

_logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ('path', 'class_index', 'class_name', 'sample_rate_hz', 'center_freq_hz', 'snr_db')
OPTIONAL_COLUMNS = ('label_set', 'speed_mps', 'angle_rad', 'distance_m')
_IQ_DTYPE = np.dtype('<f4')


def write_iq(filename, samples):
    samples = np.asarray(samples)
    out = np.empty(2 * samples.shape[0], dtype=_IQ_DTYPE)
    out[0::2] = samples.real
    out[1::2] = samples.imag
    with open(filename, 'wb') as f:
        f.write(out.tobytes())


def read_iq(filename, sample_rate_hz, **meta) -> IQSignal:
    """Read a raw IQ file into a complex128 IQSignal.

    Args:
        meta: IQSignal metadata (label, kinematics, snr_db, center_freq_hz, source)
    """
    with open(filename, 'rb') as f:
        data = f.read()
    size = len(data)
    if size % 4:
        raise FormatError(f'{filename}: truncated float32 at byte offset {size - size % 4}')
    if (size // 4) % 2:
        raise FormatError(f'{filename}: odd float count {size // 4}, last I has no Q at byte offset {size - 4}')
    iq = np.frombuffer(data, dtype=_IQ_DTYPE).astype(np.float64)
    samples = iq[0::2] + 1j * iq[1::2]
    meta.setdefault('source', os.path.splitext(os.path.basename(filename))[0])
    return IQSignal(samples=samples, sample_rate_hz=float(sample_rate_hz), **meta)


@dataclasses.dataclass(frozen=True)
class ManifestEntry:
    path: str
    class_index: int
    class_name: str
    sample_rate_hz: float
    center_freq_hz: float
    snr_db: float = math.nan
    label_set: str = ''
    kinematics: Optional[KinematicParams] = None

    @property
    def label(self):
        return FlightState(self.class_index, self.class_name, self.label_set)


@dataclasses.dataclass
class Manifest:
    root: str
    entries: List[ManifestEntry]

    def __len__(self):
        return len(self.entries)

    @property
    def num_classes(self):
        return len({e.class_index for e in self.entries})

    @property
    def class_names(self):
        names = {e.class_index: e.class_name for e in self.entries}
        return [names[i] for i in sorted(names)]

    def abspath(self, entry):
        return os.path.join(self.root, entry.path)


def _opt(row, key):
    v = row.get(key, None)
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return v


def load_manifest(filename) -> Manifest:
    df = pd.read_csv(filename, comment='#', encoding='utf-8', dtype={'path': str, 'class_name': str})
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in MANIFEST_COLUMNS if c not in df.columns]
    if missing:
        raise FormatError(f'{filename}: missing column(s) {missing}')
    root = os.path.dirname(os.path.abspath(filename))

    entries = []
    seen = {}
    for i, row in enumerate(df.to_dict('records')):
        where = f'{filename} row {i + 1} ({row["path"]})'
        if row['path'] in seen:
            raise FormatError(f'{where}: duplicate path, first seen in row {seen[row["path"]]}')
        seen[row['path']] = i + 1
        full = os.path.join(root, row['path'])
        if not os.path.isfile(full):
            raise FileNotFoundError(f'{where}: file not found')
        if os.path.getsize(full) % 8:
            raise FormatError(f'{where}: file size {os.path.getsize(full)} is not whole I/Q float32 pairs')
        kin = None
        if _opt(row, 'speed_mps') is not None:
            kin = KinematicParams(
                float(row['speed_mps']), float(_opt(row, 'angle_rad') or 0.), float(_opt(row, 'distance_m') or 0.))
        label_set = _opt(row, 'label_set') or ''
        if label_set and get_label_set(label_set) is None:
            raise FormatError(f'{where}: unknown label set {label_set}')
        try:
            entries.append(ManifestEntry(
                path=row['path'],
                class_index=int(row['class_index']),
                class_name=str(row['class_name']),
                sample_rate_hz=float(row['sample_rate_hz']),
                center_freq_hz=float(row['center_freq_hz']),
                snr_db=float(row['snr_db']) if _opt(row, 'snr_db') is not None else math.nan,
                label_set=label_set,
                kinematics=kin,
            ))
        except (TypeError, ValueError) as e:
            raise FormatError(f'{where}: {e}')

    indices = sorted({e.class_index for e in entries})
    if indices != list(range(len(indices))):
        raise FormatError(f'{filename}: non-contiguous classes {indices}')
    return Manifest(root=root, entries=entries)


def write_manifest(filename, entries):
    rows = []
    for e in entries:
        row = dict(
            path=e.path, class_index=e.class_index, class_name=e.class_name, sample_rate_hz=e.sample_rate_hz,
            center_freq_hz=e.center_freq_hz, snr_db=e.snr_db, label_set=e.label_set)
        if e.kinematics is not None:
            row.update(
                speed_mps=e.kinematics.speed_mps, angle_rad=e.kinematics.angle_rad,
                distance_m=e.kinematics.distance_m)
        rows.append(row)
    df = pd.DataFrame(rows, columns=list(MANIFEST_COLUMNS + OPTIONAL_COLUMNS))
    df.to_csv(filename, index=False, float_format='%.17g', encoding='utf-8')


def export_dataset(signals, outdir, manifest_name='manifest.csv'):
    """Write signals as raw IQ files plus a manifest, returns the manifest path."""
    os.makedirs(outdir, exist_ok=True)
    entries = []
    for i, s in enumerate(signals):
        rel = f'{i:05d}_{s.source or s.label.name}.iq'
        write_iq(os.path.join(outdir, rel), s.samples)
        entries.append(ManifestEntry(
            path=rel, class_index=s.label.index, class_name=s.label.name, sample_rate_hz=s.sample_rate_hz,
            center_freq_hz=s.center_freq_hz, snr_db=s.snr_db, label_set=s.label.label_set,
            kinematics=s.kinematics))
    filename = os.path.join(outdir, manifest_name)
    write_manifest(filename, entries)
    _logger.info(f'Wrote {len(entries)} signals and {filename}')
    return filename


def load_signals(manifest: Manifest, jobs=1):
    """Read every manifest entry, in manifest order."""

    def _one(e):
        return read_iq(
            manifest.abspath(e), e.sample_rate_hz, label=e.label, kinematics=e.kinematics, snr_db=e.snr_db,
            center_freq_hz=e.center_freq_hz, source=os.path.splitext(e.path)[0])

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(_one, manifest.entries))
    return [_one(e) for e in manifest.entries]
