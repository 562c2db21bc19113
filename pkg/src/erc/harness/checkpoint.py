"""Checkpoint bundle: network blobs, optimizer moments and PI-gain state.

Layout (little-endian): magic ``ERCK``, u16 version, 16-byte config digest,
u32 section count, then per section a u16 name length, the UTF-8 name, a
u8 kind and a u64 payload length followed by the payload.  Kinds: 0 is a
ParameterSet blob, 1 an AdamState, 2 a PiGainState, 3 a raw float64 vector.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from ..algorithms import A2cNets, SacNets
from ..nn import AdamState, ParameterSet
from ..tricks import PiGainState
from .config import TrainerConfig

MAGIC = b"ERCK"
VERSION = 1
PARAMS, ADAM, GAIN, VECTOR = 0, 1, 2, 3


def _sections(nets) -> list[tuple[str, int, object]]:
    if isinstance(nets, A2cNets):
        return [
            ("policy", PARAMS, nets.policy.params),
            ("policy_target", PARAMS, nets.policy_target),
            ("value", PARAMS, nets.value.params),
            ("value_target", PARAMS, nets.value_target),
            ("disc", PARAMS, nets.disc.params),
            ("policy_opt", ADAM, nets.policy_opt),
            ("value_opt", ADAM, nets.value_opt),
            ("disc_opt", ADAM, nets.disc.opt),
            ("gain", GAIN, nets.gain),
        ]
    if isinstance(nets, SacNets):
        return [
            ("policy", PARAMS, nets.policy.params),
            *((f"q{k}", PARAMS, q.params) for k, q in enumerate(nets.q)),
            *((f"q_target{k}", PARAMS, q) for k, q in enumerate(nets.q_target)),
            ("policy_opt", ADAM, nets.policy_opt),
            *((f"q_opt{k}", ADAM, o) for k, o in enumerate(nets.q_opt)),
            ("log_alpha", VECTOR, nets.log_alpha),
            ("alpha_opt", ADAM, nets.alpha_opt),
        ]
    raise TypeError(f"cannot checkpoint {type(nets).__name__}")


def _adam_bytes(s: AdamState) -> bytes:
    head = struct.pack("<QQddddQ", len(s.m), s.t, s.lr, s.beta1, s.beta2, s.eps, s.skipped)
    return head + s.m.astype("<f8").tobytes() + s.v.astype("<f8").tobytes()


def _adam_load(blob: bytes, into: AdamState):
    n, t, lr, b1, b2, eps, skipped = struct.unpack_from("<QQddddQ", blob)
    if n != len(into.m):
        raise ValueError("optimizer state size mismatch")
    off = struct.calcsize("<QQddddQ")
    into.m[:] = np.frombuffer(blob, "<f8", n, off)
    into.v[:] = np.frombuffer(blob, "<f8", n, off + 8 * n)
    into.t, into.lr, into.beta1, into.beta2, into.eps, into.skipped = t, lr, b1, b2, eps, skipped


def save_checkpoint(nets, config: TrainerConfig, path):
    buf = io.BytesIO()
    sections = _sections(nets)
    buf.write(MAGIC + struct.pack("<H", VERSION) + config.digest().encode("ascii"))
    buf.write(struct.pack("<I", len(sections)))
    for name, kind, obj in sections:
        if kind == PARAMS:
            payload = obj.to_bytes()
        elif kind == ADAM:
            payload = _adam_bytes(obj)
        elif kind == GAIN:
            payload = struct.pack("<dd", obj.eta_c, obj.I)
        else:
            payload = np.asarray(obj, "<f8").tobytes()
        encoded = name.encode()
        buf.write(struct.pack("<H", len(encoded)) + encoded + struct.pack("<BQ", kind, len(payload)))
        buf.write(payload)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(nets, config: TrainerConfig, path):
    """Restore a bundle into freshly built ``nets`` for the same config."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint bundle")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    digest = data[6:22].decode("ascii")
    if digest != config.digest():
        raise ValueError(f"{path}: config digest {digest} does not match {config.digest()}")
    (count,) = struct.unpack_from("<I", data, 22)
    off = 26
    targets = {name: (kind, obj) for name, kind, obj in _sections(nets)}
    if count != len(targets):
        raise ValueError(f"{path}: expected {len(targets)} sections, found {count}")
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, off)
        name = data[off + 2: off + 2 + nlen].decode()
        off += 2 + nlen
        kind, plen = struct.unpack_from("<BQ", data, off)
        off += struct.calcsize("<BQ")
        payload = data[off: off + plen]
        off += plen
        if name not in targets or targets[name][0] != kind:
            raise ValueError(f"{path}: unexpected section {name!r}")
        obj = targets[name][1]
        if kind == PARAMS:
            p = ParameterSet.from_bytes(payload)
            if p.spec != obj.spec:
                raise ValueError(f"{path}: section {name!r} has a different network shape")
            obj.values[:] = p.values
        elif kind == ADAM:
            _adam_load(payload, obj)
        elif kind == GAIN:
            assert isinstance(obj, PiGainState)
            obj.eta_c, obj.I = struct.unpack("<dd", payload)
        else:
            obj[:] = np.frombuffer(payload, "<f8")
