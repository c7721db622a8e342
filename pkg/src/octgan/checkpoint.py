"""Binary checkpoint format for exact training resume.

Layout (all integers little-endian):

    4s   magic "SOGC"
    u32  format version (1)
    u32  config length, then UTF-8 config text (flat key=value form)
    u32  completed epochs
    u64  global iteration count
    u64  generator optimizer step count
    u64  discriminator optimizer step count
    13 x u64  latent RNG state (Philox counter[4], key[2], buffer[4],
              buffer_pos, has_uint32, uinteger)
    u32  blob count, then per blob:
         u16 name length + UTF-8 name
         u8  ndim, then ndim x u32 dims
         float32 data (row-major)

Blobs cover both models' parameters and buffers (prefixes ``g.``/``d.``)
and both optimizers' moments (``og.m.<i>`` etc.), in a fixed order, so
save -> load -> save reproduces the file byte for byte.  Writes go through
a temp file and atomic rename; any malformed or truncated field raises
:class:`CheckpointError` naming the field.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import CheckpointError

MAGIC = b"SOGC"
VERSION = 1

_RNG_KEYS = ("counter", "key", "buffer")  # list-valued, in order
_RNG_SCALARS = ("buffer_pos", "has_uint32", "uinteger")


def _rng_state_to_words(state: dict) -> list[int]:
    words = []
    for k in _RNG_KEYS:
        words.extend(int(x) for x in state[k])
    words.extend(int(state[k]) for k in _RNG_SCALARS)
    if len(words) != 13:
        raise CheckpointError(f"unexpected rng state layout ({len(words)} words)")
    return words


def _words_to_rng_state(words) -> dict:
    return {
        "counter": [int(w) for w in words[0:4]],
        "key": [int(w) for w in words[4:6]],
        "buffer": [int(w) for w in words[6:10]],
        "buffer_pos": int(words[10]),
        "has_uint32": int(words[11]),
        "uinteger": int(words[12]),
    }


def _collect_blobs(state) -> list[tuple[str, np.ndarray]]:
    blobs: list[tuple[str, np.ndarray]] = []
    for prefix, model in (("g.", state.generator), ("d.", state.discriminator)):
        for name, p in model.named_parameters():
            blobs.append((prefix + name, p.data))
        for name, b in model.named_buffers():
            blobs.append((prefix + name, b))
    for prefix, opt in (("og.", state.opt_g), ("od.", state.opt_d)):
        m, v, _ = opt.state_arrays()
        for i, arr in enumerate(m):
            blobs.append((f"{prefix}m.{i}", arr))
        for i, arr in enumerate(v):
            blobs.append((f"{prefix}v.{i}", arr))
    return blobs


def save_checkpoint(state, path: str) -> None:
    """Serialize a TrainState; atomic (temp file + rename)."""
    cfg_bytes = state.cfg.serialize().encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", len(cfg_bytes)) + cfg_bytes
    out += struct.pack("<I", state.epoch)
    out += struct.pack("<Q", state.iteration)
    out += struct.pack("<Q", state.opt_g.step_count)
    out += struct.pack("<Q", state.opt_d.step_count)
    out += struct.pack("<13Q", *_rng_state_to_words(state.latent_rng.get_state()))

    blobs = _collect_blobs(state)
    out += struct.pack("<I", len(blobs))
    for name, arr in blobs:
        nb = name.encode("utf-8")
        a = np.ascontiguousarray(arr, dtype="<f4")
        out += struct.pack("<H", len(nb)) + nb
        out += struct.pack("<B", a.ndim)
        out += struct.pack(f"<{a.ndim}I", *a.shape)
        out += a.tobytes()

    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(bytes(out))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, field: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"truncated checkpoint while reading {field}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, field: str):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt), field))
        return vals[0] if len(vals) == 1 else vals


def load_checkpoint(path: str):
    """Deserialize a checkpoint into a fresh TrainState.

    The embedded config snapshot rebuilds the models and optimizers; blobs
    then overwrite every parameter, buffer, and optimizer moment.
    """
    from .config import parse_config_text
    from .train import init_state

    with open(path, "rb") as fh:
        r = _Reader(fh.read())

    if r.take(4, "magic") != MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    version = r.unpack("<I", "version")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    cfg_len = r.unpack("<I", "config length")
    try:
        cfg_text = r.take(cfg_len, "config").decode("utf-8")
    except UnicodeDecodeError:
        raise CheckpointError("config snapshot is not valid UTF-8") from None
    cfg = parse_config_text(cfg_text)

    epoch = r.unpack("<I", "epoch")
    iteration = r.unpack("<Q", "iteration")
    og_step = r.unpack("<Q", "generator optimizer step")
    od_step = r.unpack("<Q", "discriminator optimizer step")
    rng_words = r.unpack("<13Q", "rng state")

    n_blobs = r.unpack("<I", "blob count")
    blobs: dict[str, np.ndarray] = {}
    order: list[str] = []
    for i in range(n_blobs):
        name_len = r.unpack("<H", f"blob {i} name length")
        name = r.take(name_len, f"blob {i} name").decode("utf-8")
        ndim = r.unpack("<B", f"blob '{name}' ndim")
        shape = tuple(
            r.unpack(f"<{ndim}I", f"blob '{name}' dims")) if ndim > 1 else (
            (r.unpack("<I", f"blob '{name}' dims"),) if ndim == 1 else ())
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(4 * count, f"blob '{name}' data")
        blobs[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        order.append(name)
    if r.pos != len(r.data):
        raise CheckpointError(f"{len(r.data) - r.pos} trailing bytes after last blob")

    state = init_state(cfg)
    state.epoch = epoch
    state.iteration = iteration
    state.latent_rng.set_state(_words_to_rng_state(rng_words))

    expected = [name for name, _ in _collect_blobs(state)]
    if order != expected:
        missing = [n for n in expected if n not in blobs]
        extra = [n for n in order if n not in set(expected)]
        raise CheckpointError(
            f"blob set mismatch: missing {missing[:4]}, unexpected {extra[:4]}")

    for prefix, model in (("g.", state.generator), ("d.", state.discriminator)):
        for name, p in model.named_parameters():
            arr = blobs[prefix + name]
            if arr.shape != p.data.shape:
                raise CheckpointError(f"blob '{prefix + name}' has shape {arr.shape}, "
                                      f"expected {p.data.shape}")
            p.data = arr.astype(p.data.dtype, copy=True)
        for name, b in model.named_buffers():
            arr = blobs[prefix + name]
            if arr.shape != b.shape:
                raise CheckpointError(f"blob '{prefix + name}' has shape {arr.shape}, "
                                      f"expected {b.shape}")
            b[...] = arr
    for prefix, opt in (("og.", state.opt_g), ("od.", state.opt_d)):
        m = [blobs[f"{prefix}m.{i}"] for i in range(len(opt.params))]
        v = [blobs[f"{prefix}v.{i}"] for i in range(len(opt.params))]
        opt.load_state_arrays(m, v, og_step if prefix == "og." else od_step)

    return state
