""" Checkpoint container and output directory helpers

A checkpoint is a msgpack map holding a magic string, a format version, the model
kind ('generator' or 'discriminator'), the ModelConfig echoed as JSON and the flat
parameter dict. Names are '/' joined Flax param paths, values are row-major float64
arrays. Keys are written sorted so identical params give identical bytes.
"""
import hashlib
import json
import os

import numpy as np
from flax import serialization, traverse_util

from .errors import FormatError

__all__ = ['CKPT_MAGIC', 'CKPT_VERSION', 'save_checkpoint', 'load_checkpoint', 'get_outdir', 'file_sha256']

CKPT_MAGIC = 'RFSF-CKPT'
CKPT_VERSION = 1


def flatten_params(params):
    flat = traverse_util.flatten_dict(serialization.to_state_dict(params), sep='/')
    return {k: np.asarray(flat[k], dtype=np.float64) for k in sorted(flat)}


def unflatten_params(flat):
    return traverse_util.unflatten_dict({k: np.asarray(v, dtype=np.float64) for k, v in flat.items()}, sep='/')


def save_checkpoint(filename, kind, config, params):
    state = dict(
        magic=CKPT_MAGIC,
        version=CKPT_VERSION,
        kind=kind,
        config=json.dumps(config, sort_keys=True),
        params=flatten_params(params),
    )
    with open(filename, 'wb') as f:
        f.write(serialization.msgpack_serialize(state))


def load_checkpoint(filename, kind=None):
    """Returns (kind, config dict, nested params)."""
    with open(filename, 'rb') as f:
        data = f.read()
    try:
        state = serialization.msgpack_restore(data)
    except Exception as e:
        raise FormatError(f'{filename} is not a checkpoint container ({e})')
    if not isinstance(state, dict) or state.get('magic') != CKPT_MAGIC:
        raise FormatError(f'{filename}: bad checkpoint magic')
    if state.get('version') != CKPT_VERSION:
        raise FormatError(f'{filename}: unsupported checkpoint version {state.get("version")}')
    if kind is not None and state['kind'] != kind:
        raise FormatError(f'{filename}: expected a {kind} checkpoint, got {state["kind"]}')
    return state['kind'], json.loads(state['config']), unflatten_params(state['params'])


def file_sha256(filename):
    h = hashlib.sha256()
    with open(filename, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()


def get_outdir(path, *paths):
    """Create (or reuse) an output directory. Reruns overwrite the files they produce."""
    outdir = os.path.join(path, *paths)
    os.makedirs(outdir, exist_ok=True)
    return outdir
