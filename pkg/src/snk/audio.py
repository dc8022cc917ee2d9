"""Dependency-free PCM WAV reading and sample statistics.

Supported encodings: 16-bit integer PCM and 32-bit IEEE float, mono or
multi-channel (only the first channel is kept). Samples are returned as
float64 normalized amplitudes in [-1, 1]; the silence filter threshold
applies to this normalized scale.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import AudioReadError, EmptyAudioError

__all__ = ["read_wav", "write_wav", "audio_stddev"]

_FMT_PCM = 1
_FMT_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


def audio_stddev(samples) -> float:
    """Population standard deviation of an amplitude sequence."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise EmptyAudioError("no samples")
    return float(np.sqrt(np.mean((arr - arr.mean()) ** 2)))


def read_wav(path) -> np.ndarray:
    """Read a RIFF/WAVE file into normalized float64 samples.

    Raises :class:`AudioReadError` on missing files, non-WAV content, or
    unsupported encodings.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise AudioReadError(f"{path}: {exc}") from exc
    try:
        return _parse_wav(data)
    except (struct.error, ValueError) as exc:
        raise AudioReadError(f"{path}: {exc}") from exc


def _parse_wav(data: bytes) -> np.ndarray:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError("not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or payload is None:
        raise ValueError("missing fmt or data chunk")

    code, channels, _rate, _byte_rate, _block_align, bits = fmt
    if code == _FMT_EXTENSIBLE:
        raise ValueError("WAVE_FORMAT_EXTENSIBLE is not supported")
    if code == _FMT_PCM and bits == 16:
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif code == _FMT_FLOAT and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise ValueError(f"unsupported encoding: format={code} bits={bits}")
    if channels > 1:
        samples = samples[: len(samples) - len(samples) % channels]
        samples = samples.reshape(-1, channels)[:, 0]
    return samples


def write_wav(path, samples, rate: int = 16000, encoding: str = "pcm16") -> None:
    """Write mono samples (normalized floats) as a WAV file.

    ``encoding`` is ``"pcm16"`` or ``"float32"``. Used for fixtures and
    for exporting synthetic audio; not part of the scoring pipeline.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if encoding == "pcm16":
        code, bits = _FMT_PCM, 16
        payload = np.clip(np.round(arr * 32768.0), -32768, 32767).astype("<i2").tobytes()
    elif encoding == "float32":
        code, bits = _FMT_FLOAT, 32
        payload = arr.astype("<f4").tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    block_align = bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, code, 1, rate, rate * block_align, block_align, bits)
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)
