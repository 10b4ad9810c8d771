import csv
from pathlib import Path

import numpy as np
import pytest
from scipy.signal import lfilter

from pararank import default_g2p_rules_path, default_lexicon_path, phonetics
from pararank.audio import Waveform, mix_at_snr, write_wav

TESTS_DIR = Path(__file__).resolve().parent

# words the packaged lexicon covers, used to synthesize dataset text
WORDS = (
    "you never hear about it really in the big ones they seem to give more "
    "facts than opinions the game was very close and hard fought people talk "
    "with friends every day work takes time money comes later kids play "
    "outside school starts early weather looks good today"
).split()


@pytest.fixture(scope="session")
def lexicon():
    return phonetics.Lexicon.load(default_lexicon_path(), default_g2p_rules_path())


def speech_like(rng, n, fs):
    x = lfilter([1.0], [1.0, -0.68], rng.standard_normal(n))
    t = np.arange(n) / fs
    env = 0.15 + 0.85 * (0.5 * (1.0 + np.sin(2 * np.pi * rng.uniform(3, 5) * t + rng.uniform(0, 6.28)))) ** 2
    x = x * env
    return Waveform(0.3 * x / np.max(np.abs(x)), fs)


def _corrupt_transcript(words, keep_prob, rng):
    """Listener simulation: keep, blank out '(...)', or drop each word."""
    out = []
    for word in words:
        u = rng.random()
        if u < keep_prob:
            out.append(word)
        elif u < keep_prob + 0.6 * (1 - keep_prob):
            out.append("(...)")
        # else: dropped entirely
    return " ".join(out)


def build_synth_dataset(root: Path, n_triplets_per_snr: int = 8, seed: int = 1234, with_audio: bool = True):
    """Small synthetic corpus in the canonical layout.

    Intelligibility degrades with noise level and with sentence length, so
    regressions and rankers have real (if weak) signal to find.
    """
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    records_rows = []
    annotation_rows = []
    fs = 10000
    if with_audio:
        (root / "audio" / "clean").mkdir(parents=True, exist_ok=True)
        (root / "audio" / "noisy").mkdir(parents=True, exist_ok=True)
        noise = Waveform(0.1 * rng.standard_normal(fs * 4), fs)
    t_index = 0
    for snr in (5.0, 0.0, -5.0):
        base_keep = {5.0: 0.96, 0.0: 0.88, -5.0: 0.62}[snr]
        for _ in range(n_triplets_per_snr):
            triplet_id = f"t{t_index:03d}"
            t_index += 1
            for position in ("s1", "s2", "s3"):
                n_words = int(rng.integers(5, 10))
                words = [WORDS[int(rng.integers(0, len(WORDS)))] for _ in range(n_words)]
                uid = f"{triplet_id}_{position}"
                keep = min(0.99, max(0.2, base_keep - 0.015 * (n_words - 7) + rng.normal(0, 0.03)))
                transcripts = [_corrupt_transcript(words, keep, rng) for _ in range(6)]
                records_rows.append([uid, triplet_id, position, f"{snr:g}", " ".join(words)] + transcripts)
                if with_audio:
                    clean = speech_like(rng, int(0.9 * fs), fs)
                    mixed = mix_at_snr(clean, noise, snr, int(rng.integers(0, len(noise)))).waveform
                    write_wav(root / "audio" / "clean" / f"{uid}.wav", clean)
                    write_wav(root / "audio" / "noisy" / f"{uid}.wav", mixed)
            for left, right in (("s1", "s2"), ("s2", "s3"), ("s1", "s3")):
                a = int(rng.random() < 0.7)
                b = int(rng.random() < 0.7)
                annotation_rows.append([f"{triplet_id}:{left}-{right}", str(a), str(b)])
    with open(root / "records.tsv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter="\t")
        writer.writerow(
            ["utterance_id", "triplet_id", "position", "snr_db", "text"]
            + [f"transcript_{i}" for i in range(1, 7)]
        )
        writer.writerows(records_rows)
    with open(root / "annotations.tsv", "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter="\t")
        writer.writerow(["pair_id", "annotator_a", "annotator_b"])
        writer.writerows(annotation_rows)
    return root


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    return build_synth_dataset(tmp_path_factory.mktemp("pin_synth"))


@pytest.fixture(scope="session")
def synth_dataset_no_audio(tmp_path_factory):
    return build_synth_dataset(tmp_path_factory.mktemp("pin_synth_na"), with_audio=False, seed=77)
