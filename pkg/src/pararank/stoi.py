"""Short-time intelligibility scoring of a degraded signal against its clean reference.

The score is the mean short-time correlation between one-third-octave band
envelopes of the clean and degraded signals, computed over 384 ms analysis
segments after silent frames have been removed.  All analysis constants are
frozen in :class:`StoiConfig`; the packaged defaults are the contract that
the committed reference vectors in ``tests/stoi_reference.csv`` pin down.

Pipeline: resample both signals to 10 kHz, drop frames more than 40 dB below
the loudest clean frame, decompose into 15 one-third-octave band envelopes
via a 512-point STFT, then for every band and every 30-frame segment
normalize and clip the degraded envelope against the clean one and average
the Pearson correlations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np
from scipy.signal import resample_poly

from .audio import Waveform
from .errors import AudioError

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class StoiConfig:
    """Frozen analysis constants for the intelligibility measure."""

    target_rate: int = 10000
    frame_len: int = 256
    frame_hop: int = 128
    fft_len: int = 512
    num_bands: int = 15
    lowest_center_freq: float = 150.0
    segment_frames: int = 30
    clip_bound_db: float = -15.0
    silence_range_db: float = 40.0

    def __post_init__(self):
        positive = {
            "target_rate": self.target_rate,
            "frame_len": self.frame_len,
            "frame_hop": self.frame_hop,
            "fft_len": self.fft_len,
            "num_bands": self.num_bands,
            "lowest_center_freq": self.lowest_center_freq,
            "segment_frames": self.segment_frames,
            "silence_range_db": self.silence_range_db,
        }
        for name, value in positive.items():
            if value <= 0:
                raise AudioError(f"{name} must be positive, got {value}")
        if self.frame_hop != self.frame_len // 2:
            raise AudioError("frame_hop must be half the frame length")


DEFAULT_CONFIG = StoiConfig()


def _periodic_hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _frame_starts(n_samples: int, cfg: StoiConfig) -> range:
    if n_samples < cfg.frame_len:
        raise AudioError("signal shorter than one analysis frame")
    return range(0, n_samples - cfg.frame_len + 1, cfg.frame_hop)


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited rate conversion with a Kaiser windowed-sinc filter.

    The anti-alias cutoff sits at the Nyquist frequency of the lower rate,
    with the Kaiser transition band providing the stopband margin.  A signal
    already at the target rate passes through untouched.
    """
    if target_rate <= 0:
        raise AudioError("target rate must be positive")
    if w.sample_rate == target_rate:
        return w
    g = gcd(int(target_rate), int(w.sample_rate))
    up, down = target_rate // g, w.sample_rate // g
    m = max(up, down)
    cutoff = 1.0 / (2.0 * m)  # cycles per sample at the internal high rate
    half = int(np.ceil(40.0 * m))
    t = np.arange(-half, half + 1)
    taps = 2.0 * cutoff * np.sinc(2.0 * cutoff * t) * np.kaiser(2 * half + 1, 5.653)
    taps *= up / taps.sum()
    out = resample_poly(w.samples, up, down, window=taps)
    return Waveform(out, target_rate)


def remove_silent_frames(clean: Waveform, degraded: Waveform, cfg: StoiConfig = DEFAULT_CONFIG) -> tuple[Waveform, Waveform]:
    """Drop frames whose clean-signal energy trails the loudest frame by more
    than the configured range, from both signals at the clean signal's indices.

    Kept frames are Hann-windowed and overlap-added back, so the interior of
    an uncut signal is reconstructed exactly; the first and last half-frame
    taper.
    """
    if len(clean) != len(degraded):
        raise AudioError("length mismatch between clean and degraded signals")
    starts = list(_frame_starts(len(clean), cfg))
    window = _periodic_hann(cfg.frame_len)
    x_frames = np.stack([window * clean.samples[s : s + cfg.frame_len] for s in starts])
    y_frames = np.stack([window * degraded.samples[s : s + cfg.frame_len] for s in starts])
    energies = 20.0 * np.log10(np.linalg.norm(x_frames, axis=1) + _EPS)
    mask = energies > energies.max() - cfg.silence_range_db
    if not mask.any():
        raise AudioError("no speech content: every frame is silent")
    x_kept = x_frames[mask]
    y_kept = y_frames[mask]
    n_out = (len(x_kept) - 1) * cfg.frame_hop + cfg.frame_len
    x_out = np.zeros(n_out)
    y_out = np.zeros(n_out)
    for k in range(len(x_kept)):
        sl = slice(k * cfg.frame_hop, k * cfg.frame_hop + cfg.frame_len)
        x_out[sl] += x_kept[k]
        y_out[sl] += y_kept[k]
    return Waveform(x_out, clean.sample_rate), Waveform(y_out, degraded.sample_rate)


@lru_cache(maxsize=None)
def _band_matrix(cfg: StoiConfig) -> np.ndarray:
    """0/1 matrix [bands x fft bins] assigning bin centers to third-octave bands.

    Band k spans center/2^(1/6) .. center*2^(1/6) around 150*2^(k/3) Hz; a
    bin belongs to the band whose [low, high) interval contains its center
    frequency, and bins above the top band are ignored.
    """
    freqs = np.arange(cfg.fft_len // 2 + 1) * cfg.target_rate / cfg.fft_len
    k = np.arange(cfg.num_bands)
    centers = cfg.lowest_center_freq * 2.0 ** (k / 3.0)
    low = centers / 2.0 ** (1.0 / 6.0)
    high = centers * 2.0 ** (1.0 / 6.0)
    matrix = (freqs[None, :] >= low[:, None]) & (freqs[None, :] < high[:, None])
    return matrix.astype(np.float64)


def third_octave_envelope(w: Waveform, cfg: StoiConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Band magnitude matrix [num_bands x num_frames] from a 10 kHz signal."""
    if w.sample_rate != cfg.target_rate:
        raise AudioError(f"expected a {cfg.target_rate} Hz signal, got {w.sample_rate} Hz")
    starts = list(_frame_starts(len(w), cfg))
    window = _periodic_hann(cfg.frame_len)
    frames = np.stack([window * w.samples[s : s + cfg.frame_len] for s in starts])
    spec = np.fft.rfft(frames, n=cfg.fft_len, axis=1)
    energy = np.abs(spec) ** 2
    return np.sqrt(_band_matrix(cfg) @ energy.T)


def stoi(clean: Waveform, degraded: Waveform, cfg: StoiConfig = DEFAULT_CONFIG) -> float:
    """Intelligibility score in [-1, 1]; higher means more audible speech.

    The degraded band envelope is normalized to the clean one per analysis
    segment and clipped so local distortions cannot dominate, then band/segment
    Pearson correlations are averaged.  Degenerate zero-variance cells
    contribute zero.
    """
    if clean.sample_rate != degraded.sample_rate:
        raise AudioError("sample-rate mismatch between clean and degraded signals")
    if len(clean) != len(degraded):
        raise AudioError("length mismatch between clean and degraded signals")
    clean = resample(clean, cfg.target_rate)
    degraded = resample(degraded, cfg.target_rate)
    clean, degraded = remove_silent_frames(clean, degraded, cfg)
    x = third_octave_envelope(clean, cfg)
    y = third_octave_envelope(degraded, cfg)
    n_frames = x.shape[1]
    n_seg = cfg.segment_frames
    if n_frames < n_seg:
        raise AudioError(
            f"not enough frames after silence removal ({n_frames}) for one {n_seg}-frame segment"
        )
    # [bands, segments, segment_frames]
    x_seg = np.lib.stride_tricks.sliding_window_view(x, n_seg, axis=1)
    y_seg = np.lib.stride_tricks.sliding_window_view(y, n_seg, axis=1)
    alpha = np.linalg.norm(x_seg, axis=2, keepdims=True) / (
        np.linalg.norm(y_seg, axis=2, keepdims=True) + _EPS
    )
    clip_factor = 1.0 + 10.0 ** (-cfg.clip_bound_db / 20.0)
    y_prime = np.minimum(y_seg * alpha, x_seg * clip_factor)
    xc = x_seg - x_seg.mean(axis=2, keepdims=True)
    yc = y_prime - y_prime.mean(axis=2, keepdims=True)
    xc /= np.linalg.norm(xc, axis=2, keepdims=True) + _EPS
    yc /= np.linalg.norm(yc, axis=2, keepdims=True) + _EPS
    return float(np.mean(np.sum(xc * yc, axis=2)))
