"""Generate the committed intelligibility reference vectors.

Synthesizes 20 deterministic (clean, degraded) pairs covering several sample
rates, noise types, SNRs and silence padding, writes them as float32 WAVs
under tests/data/stoi/, and freezes the scores of the loop-based reference
implementation into tests/stoi_reference.csv.

Run from the repository root:  python tools/gen_stoi_reference.py
"""

import csv
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import lfilter

from reference_stoi import stoi_reference

ROOT = Path(__file__).resolve().parent.parent
OUT_DIR = ROOT / "tests" / "data" / "stoi"
CSV_PATH = ROOT / "tests" / "stoi_reference.csv"


def speech_like(rng, n, fs, syllable_rate=3.7):
    """Spectrally tilted noise with a syllabic amplitude envelope."""
    x = lfilter([1.0], [1.0, -0.68], rng.standard_normal(n))
    t = np.arange(n) / fs
    phase = rng.uniform(0, 2 * np.pi)
    env = 0.15 + 0.85 * (0.5 * (1.0 + np.sin(2 * np.pi * syllable_rate * t + phase))) ** 2
    x = x * env
    return 0.3 * x / np.max(np.abs(x))


def babble_like(rng, n, fs):
    voices = [speech_like(rng, n, fs, rng.uniform(2.5, 5.0)) for _ in range(6)]
    x = np.sum(voices, axis=0)
    return 0.3 * x / np.max(np.abs(x))


def pink_noise(rng, n):
    x = lfilter([1.0], [1.0, -0.9], rng.standard_normal(n))
    return 0.3 * x / np.max(np.abs(x))


def white_noise(rng, n):
    return 0.3 * rng.standard_normal(n) / 3.0


def mix(clean, noise, snr_db):
    p_c = np.mean(clean**2)
    p_n = np.mean(noise**2)
    scale = np.sqrt(p_c / (p_n * 10.0 ** (snr_db / 10.0)))
    out = clean + scale * noise
    peak = np.max(np.abs(out))
    if peak > 0.99:
        out = out * (0.99 / peak)
    return out


def pad_silence(x, fs, seconds=0.25, floor=1e-5):
    pad = np.full(int(seconds * fs), floor)
    return np.concatenate([pad, x, pad])


def build_pairs():
    rng = np.random.default_rng(20240117)
    pairs = []

    def add(name, fs, clean, degraded):
        pairs.append((name, fs, clean.astype(np.float64), degraded.astype(np.float64)))

    # white noise ladder at 10 kHz
    for i, snr in enumerate((-10, -5, -2, 0, 2, 5, 10)):
        fs, n = 10000, 25000
        clean = speech_like(rng, n, fs)
        add(f"white_snr{snr:+d}", fs, clean, mix(clean, white_noise(rng, n), snr))
    # babble-like masker at 10 kHz
    for snr in (-5, 0, 5):
        fs, n = 10000, 25000
        clean = speech_like(rng, n, fs)
        add(f"babble_snr{snr:+d}", fs, clean, mix(clean, babble_like(rng, n, fs), snr))
    # pink masker, with leading/trailing silence to exercise frame removal
    for snr in (-3, 3):
        fs, n = 10000, 22000
        clean = pad_silence(speech_like(rng, n, fs), fs)
        add(f"pink_padded_snr{snr:+d}", fs, clean, mix(clean, pink_noise(rng, len(clean)), snr))
    # 16 kHz inputs (downsampling path)
    for snr in (-5, 0, 5):
        fs, n = 16000, 40000
        clean = speech_like(rng, n, fs)
        add(f"fs16k_white_snr{snr:+d}", fs, clean, mix(clean, white_noise(rng, n), snr))
    # 44.1 kHz inputs
    for snr in (0, 5):
        fs, n = 44100, 110250
        clean = speech_like(rng, n, fs)
        add(f"fs44k_babble_snr{snr:+d}", fs, clean, mix(clean, babble_like(rng, n, fs), snr))
    # 8 kHz input (upsampling path)
    fs, n = 8000, 20000
    clean = speech_like(rng, n, fs)
    add("fs8k_white_snr+0", fs, clean, mix(clean, white_noise(rng, n), 0))
    # identity and noise-only extremes
    fs, n = 10000, 25000
    clean = speech_like(rng, n, fs)
    add("identity", fs, clean, clean.copy())
    clean = speech_like(rng, n, fs)
    noise_only = white_noise(rng, n)
    add("noise_only", fs, clean, noise_only * np.sqrt(np.mean(clean**2) / np.mean(noise_only**2)))

    assert len(pairs) == 20, len(pairs)
    return pairs


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rows = []
    for name, fs, clean, degraded in build_pairs():
        clean_path = OUT_DIR / f"{name}_clean.wav"
        degraded_path = OUT_DIR / f"{name}_degraded.wav"
        wavfile.write(clean_path, fs, clean.astype(np.float32))
        wavfile.write(degraded_path, fs, degraded.astype(np.float32))
        # score exactly what the files hold
        _, c = wavfile.read(clean_path)
        _, d = wavfile.read(degraded_path)
        score = stoi_reference(c.astype(np.float64), d.astype(np.float64), fs)
        rows.append(
            (
                str(clean_path.relative_to(ROOT / "tests")),
                str(degraded_path.relative_to(ROOT / "tests")),
                f"{score:.6f}",
            )
        )
        print(f"{name:24s} fs={fs:5d}  reference={score:.6f}")
    with open(CSV_PATH, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["clean_path", "degraded_path", "expected_score"])
        writer.writerows(rows)
    print(f"wrote {CSV_PATH}")


if __name__ == "__main__":
    main()
