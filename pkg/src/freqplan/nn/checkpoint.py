"""Binary checkpoints: magic, JSON header, then float32 little-endian arrays.

Layout::

    b"FPDCKPT" + version byte
    uint32 LE header length
    header (UTF-8 JSON: format, version, policy config, [[name, shape], ...], extra)
    parameter arrays, float32 LE, in declaration order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from freqplan.errors import ParseError, ValidationError
from freqplan.nn.policy import PolicyConfig, PolicyNet, param_shapes

MAGIC = b"FPDCKPT"
VERSION = 1
FORMAT_ID = "freqplan-policy"


def save_checkpoint(path, net: PolicyNet, extra: dict | None = None) -> None:
    shapes = param_shapes(net.cfg)
    header = {
        "format": FORMAT_ID,
        "version": VERSION,
        "policy": net.cfg.to_dict(),
        "layers": [[name, list(shape)] for name, shape in shapes],
        "extra": extra or {},
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + bytes([VERSION]))
        fh.write(struct.pack("<I", len(hb)))
        fh.write(hb)
        for name, _ in shapes:
            fh.write(np.ascontiguousarray(net.params[name], dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[PolicyNet, dict]:
    """Returns the network and the header's ``extra`` dict."""
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise ParseError(f"{path}: not a policy checkpoint (bad magic)")
    if raw[len(MAGIC)] != VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {raw[len(MAGIC)]}")
    off = len(MAGIC) + 1
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    try:
        header = json.loads(raw[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"{path}: corrupt checkpoint header") from e
    off += hlen
    if header.get("format") != FORMAT_ID:
        raise ParseError(f"{path}: unexpected format id {header.get('format')!r}")
    cfg = PolicyConfig.from_dict(header["policy"])
    expected = [[n, list(s)] for n, s in param_shapes(cfg)]
    if header["layers"] != expected:
        raise ValidationError(f"{path}: layer shape list does not match the policy config")
    params = {}
    for name, shape in expected:
        n = int(np.prod(shape))
        if off + 4 * n > len(raw):
            raise ParseError(f"{path}: truncated at parameter {name}")
        params[name] = np.frombuffer(raw, dtype="<f4", count=n, offset=off).reshape(shape).astype(np.float32)
        off += 4 * n
    if off != len(raw):
        raise ParseError(f"{path}: {len(raw) - off} trailing bytes after parameters")
    return PolicyNet(cfg, params), header.get("extra", {})
