"""Binary signal-file format shared by the CLI commands.

Layout: 5-byte magic ``TFFT1``, version byte, dtype byte (1 = c64, 2 = c128),
then n and b as little-endian u64, followed by n*b interleaved (re, im)
little-endian values in the payload precision. The payload length must match
the header exactly; anything else is malformed.
"""

from __future__ import annotations

import struct

import numpy as np

from .fft_core import SignalBatch

MAGIC = b"TFFT1"
VERSION = 1
_HEADER = struct.Struct("<5sBBQQ")

_DTYPE_CODES = {1: np.dtype("<c8"), 2: np.dtype("<c16")}
_CODES_BY_PRECISION = {"single": 1, "double": 2}


class SignalFileError(ValueError):
    """Raised for malformed or incompatible signal files."""


class UnsupportedSizeError(ValueError):
    """Raised when a well-formed file carries a size the library rejects."""


def write_signal_file(path, batch: SignalBatch):
    code = _CODES_BY_PRECISION[batch.precision]
    payload = np.ascontiguousarray(batch.data, dtype=_DTYPE_CODES[code])
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, code, batch.n, batch.b))
        fh.write(payload.tobytes())


def read_signal_file(path) -> SignalBatch:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SignalFileError("file too short for a signal header")
    magic, version, code, n, b = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SignalFileError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SignalFileError(f"unsupported version {version}")
    if code not in _DTYPE_CODES:
        raise SignalFileError(f"unknown dtype code {code}")
    dtype = _DTYPE_CODES[code]
    expected = n * b * dtype.itemsize
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise SignalFileError(
            f"payload is {len(payload)} bytes, header promises {expected}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(b, n)
    native = data.astype(np.complex64 if code == 1 else np.complex128)
    try:
        return SignalBatch(native)
    except ValueError as exc:
        raise UnsupportedSizeError(str(exc)) from None
