"""Mono waveform I/O, power measurement, and additive noise mixing at a target SNR."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import AudioError


@dataclass(frozen=True)
class Waveform:
    """Mono audio: float samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioError("mono required: samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise AudioError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise AudioError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class SnrCondition:
    """A signal-to-noise ratio in dB."""

    snr_db: float

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise AudioError("SNR must be finite")


def _snr_db(snr) -> float:
    return float(snr.snr_db) if isinstance(snr, SnrCondition) else float(snr)


def read_wav(path: str | Path) -> Waveform:
    """Read a mono PCM-16 or float-32 WAV file, normalized to [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise AudioError(f"cannot read {path}: {exc}") from exc
    if data.ndim != 1:
        raise AudioError(f"mono required: {path} has {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported encoding {data.dtype} in {path}; need PCM 16-bit or float 32-bit")
    return Waveform(samples, int(rate))


def write_wav(path: str | Path, w: Waveform, encoding: str = "float32") -> None:
    """Write a waveform; float32 round-trips bit-exactly through read_wav."""
    if encoding == "float32":
        wavfile.write(path, w.sample_rate, w.samples.astype(np.float32))
    elif encoding == "pcm16":
        scaled = np.clip(np.round(w.samples * 32768.0), -32768, 32767)
        wavfile.write(path, w.sample_rate, scaled.astype(np.int16))
    else:
        raise AudioError(f"unsupported encoding {encoding!r}")


def power(w: Waveform) -> float:
    """Mean squared amplitude."""
    if len(w) == 0:
        raise AudioError("power of an empty waveform is undefined")
    return float(np.mean(np.square(w.samples)))


def measure_snr(speech: Waveform, noise: Waveform) -> float:
    """10*log10 of the speech-to-noise power ratio, both signals aligned."""
    if speech.sample_rate != noise.sample_rate:
        raise AudioError("sample-rate mismatch")
    if len(speech) != len(noise):
        raise AudioError("length mismatch")
    p_s, p_n = power(speech), power(noise)
    if p_s == 0.0 or p_n == 0.0:
        raise AudioError("zero power: SNR undefined")
    return 10.0 * np.log10(p_s / p_n)


@dataclass(frozen=True)
class MixResult:
    """A noisy mixture plus the bookkeeping needed to reproduce it."""

    waveform: Waveform
    noise_scale: float
    noise_offset: int
    post_gain: float  # peak-normalization applied to the mixture; 1.0 if none


def mix_at_snr(speech: Waveform, noise: Waveform, snr, noise_offset: int = 0) -> MixResult:
    """Add a cyclic noise segment to speech, scaled so components sit at the target SNR.

    The segment starts at ``noise_offset`` and wraps around the noise
    recording if it is shorter than the speech.  If the mixture exceeds
    [-1, 1] the whole mixture is peak-normalized instead of clipped and the
    applied gain is reported in the result.
    """
    snr_db = _snr_db(snr)
    if speech.sample_rate != noise.sample_rate:
        raise AudioError("sample-rate mismatch between speech and noise")
    if len(noise) == 0:
        raise AudioError("empty noise")
    p_speech = power(speech)
    if p_speech == 0.0:
        raise AudioError("silent speech: SNR mixing undefined")
    idx = (noise_offset + np.arange(len(speech))) % len(noise)
    segment = noise.samples[idx]
    p_seg = float(np.mean(np.square(segment)))
    if p_seg == 0.0:
        raise AudioError("silent noise segment: SNR mixing undefined")
    scale = float(np.sqrt(p_speech / (p_seg * 10.0 ** (snr_db / 10.0))))
    mixture = speech.samples + scale * segment
    peak = float(np.max(np.abs(mixture))) if len(mixture) else 0.0
    post_gain = 1.0 / peak if peak > 1.0 else 1.0
    return MixResult(
        waveform=Waveform(mixture * post_gain, speech.sample_rate),
        noise_scale=scale,
        noise_offset=int(noise_offset),
        post_gain=post_gain,
    )


def random_noise_offset(noise_len: int, rng: np.random.Generator) -> int:
    """Seeded segment start for the optional random-offset mixing mode."""
    if noise_len <= 0:
        raise AudioError("empty noise")
    return int(rng.integers(0, noise_len))
