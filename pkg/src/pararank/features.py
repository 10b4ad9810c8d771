"""Per-utterance feature vectors (phLen, ppl, STOI), z-scoring, and pair differences."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import lm as lm_mod
from . import phonetics
from . import stoi as stoi_mod
from .audio import SnrCondition, Waveform
from .errors import PararankError

# Canonical model-facing feature names (CSV columns use utterance_id,snr,phLen,ppl,stoi).
FEATURE_NAMES = ("phLen", "ppl", "STOI")


class TiedPairError(PararankError):
    """Raised for pairs with no gold preference; such pairs carry no gain signal."""


@dataclass(frozen=True)
class FeatureVector:
    utterance_id: str
    phlen: int
    ppl: float
    stoi: float
    snr_db: float

    def __post_init__(self):
        if not np.isfinite(self.ppl) or not np.isfinite(self.stoi) or not np.isfinite(self.snr_db):
            raise PararankError(f"non-finite feature for {self.utterance_id!r}")

    def value(self, name: str) -> float:
        try:
            return float({"phLen": self.phlen, "ppl": self.ppl, "STOI": self.stoi}[name])
        except KeyError:
            raise PararankError(f"unknown feature {name!r}") from None


def extract(
    utterance_id: str,
    text: str,
    clean: Waveform,
    noisy: Waveform,
    lm_source,
    lexicon: phonetics.Lexicon,
    snr,
) -> FeatureVector:
    """Assemble one feature vector: phoneme count, perplexity, and the
    clean-vs-noisy intelligibility score.

    ``lm_source`` is either a language model (perplexity is computed from the
    text) or a mapping of utterance id to an externally computed value.
    """
    phlen = len(phonetics.g2p(text, lexicon))
    if isinstance(lm_source, Mapping):
        if utterance_id not in lm_source:
            raise PararankError(f"missing external ppl record for {utterance_id!r}")
        ppl = float(lm_source[utterance_id])
    else:
        ppl = lm_mod.perplexity(lm_source, lm_mod.tokenize(text))
    score = stoi_mod.stoi(clean, noisy)
    snr_db = snr.snr_db if isinstance(snr, SnrCondition) else float(snr)
    return FeatureVector(utterance_id, phlen, ppl, score, snr_db)


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature mean and population standard deviation."""

    names: tuple[str, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=np.float64)
        return (matrix - np.asarray(self.means)) / np.asarray(self.stds)

    def to_dict(self) -> dict:
        return {"names": list(self.names), "means": list(self.means), "stds": list(self.stds)}

    @classmethod
    def from_dict(cls, payload: dict) -> "ScalerParams":
        return cls(tuple(payload["names"]), tuple(payload["means"]), tuple(payload["stds"]))


def feature_matrix(vectors: Sequence[FeatureVector], names: Sequence[str] = FEATURE_NAMES) -> np.ndarray:
    return np.array([[v.value(name) for name in names] for v in vectors], dtype=np.float64)


def fit_scaler(vectors: Sequence[FeatureVector], names: Sequence[str] = FEATURE_NAMES) -> ScalerParams:
    """Estimate z-score parameters on the fitting split only (population std)."""
    if len(vectors) < 2:
        raise PararankError("scaler needs at least two vectors")
    matrix = feature_matrix(vectors, names)
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)  # population convention: divide by n
    for name, std in zip(names, stds):
        if std == 0.0:
            raise PararankError(f"zero variance feature: {name}")
    return ScalerParams(tuple(names), tuple(map(float, means)), tuple(map(float, stds)))


def apply_scaler(params: ScalerParams, vectors: Sequence[FeatureVector]) -> np.ndarray:
    """Z-scored feature matrix, columns ordered as params.names."""
    return params.transform(feature_matrix(vectors, params.names))


@dataclass(frozen=True)
class DiffFeatures:
    """Feature differences taken with respect to the more intelligible utterance."""

    pair_id: str
    diff_phlen: float
    diff_ppl: float
    diff_stoi: float
    sent_int_gain: float

    def value(self, name: str) -> float:
        return {"phLen": self.diff_phlen, "ppl": self.diff_ppl, "STOI": self.diff_stoi}[name]


def diff_features(
    pair: tuple[FeatureVector, FeatureVector],
    gold: str,
    gains: tuple[float, float],
    pair_id: str = "",
) -> DiffFeatures:
    """Differences (more intelligible minus less) plus the intelligibility gain.

    ``gold`` says which side of the pair is more intelligible ("left" or
    "right"); tie pairs are rejected since their gain direction is undefined.
    """
    if gold == "tie":
        raise TiedPairError(f"pair {pair_id or pair[0].utterance_id!r} is tied")
    if gold not in ("left", "right"):
        raise PararankError(f"unknown gold label {gold!r}")
    more, less = (pair[0], pair[1]) if gold == "left" else (pair[1], pair[0])
    gain_more, gain_less = (gains[0], gains[1]) if gold == "left" else (gains[1], gains[0])
    gain = gain_more - gain_less
    if gain < 0:
        raise PararankError(f"gold label contradicts intelligibility values for pair {pair_id!r}")
    return DiffFeatures(
        pair_id=pair_id,
        diff_phlen=float(more.phlen - less.phlen),
        diff_ppl=more.ppl - less.ppl,
        diff_stoi=more.stoi - less.stoi,
        sent_int_gain=gain,
    )


def write_feature_table(path: str | Path, vectors: Sequence[FeatureVector]) -> None:
    """Raw (unscaled) feature table: utterance_id,snr,phLen,ppl,stoi."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["utterance_id", "snr", "phLen", "ppl", "stoi"])
        for v in vectors:
            writer.writerow([v.utterance_id, f"{v.snr_db:g}", v.phlen, f"{v.ppl:.6f}", f"{v.stoi:.6f}"])


def read_feature_table(path: str | Path) -> list[FeatureVector]:
    vectors: list[FeatureVector] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"utterance_id", "snr", "phLen", "ppl", "stoi"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise PararankError(f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}")
        for row in reader:
            vectors.append(
                FeatureVector(
                    utterance_id=row["utterance_id"],
                    phlen=int(row["phLen"]),
                    ppl=float(row["ppl"]),
                    stoi=float(row["stoi"]),
                    snr_db=float(row["snr"]),
                )
            )
    return vectors
