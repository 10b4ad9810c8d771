"""Ingestion and analysis of the paraphrases-in-noise listening corpus.

Canonical on-disk layout (one directory):

* ``records.tsv`` - utterance_id, triplet_id, position (s1/s2/s3), snr_db,
  text, transcript_1..transcript_6 (one listener transcript per column).
* ``annotations.tsv`` - pair_id, annotator_a, annotator_b (0/1 paraphrase
  validity judgements).
* ``audio/clean/<utterance_id>.wav`` and ``audio/noisy/<utterance_id>.wav``
  (only needed for acoustic features).

Pairs are built per triplet as (s1,s2), (s2,s3), (s1,s3) with
``pair_id = <triplet_id>:<left>-<right>``.  Intelligibility is computed as
exact rationals so that gold ties are exact equalities, never epsilon calls.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import phonetics, stats
from .errors import DatasetError

# Pair counts of the released corpus, per subset and SNR (dB).
RELEASED_COUNTS = {
    "PiN": {"total": 900, 5.0: 300, 0.0: 300, -5.0: 300},
    "PiN_both": {"total": 332, 5.0: 104, 0.0: 123, -5.0: 105},
    "PiN_either": {"total": 596, 5.0: 195, 0.0: 205, -5.0: 196},
}

_PAIR_ORDER = (("s1", "s2"), ("s2", "s3"), ("s1", "s3"))


@dataclass(frozen=True)
class PinRecord:
    utterance_id: str
    triplet_id: str
    position: str
    snr_db: float
    text: str
    transcripts: tuple[str, ...]
    sent_int: float | None = None
    sent_int_exact: Fraction | None = None


@dataclass(frozen=True)
class PinPair:
    pair_id: str
    snr_db: float
    left_id: str
    right_id: str
    in_both: bool
    in_either: bool
    gold: str | None = None  # "left" | "right" | "tie" once records are scored


@dataclass(frozen=True)
class PinData:
    records: tuple[PinRecord, ...]
    pairs: tuple[PinPair, ...]

    def records_by_id(self) -> dict[str, PinRecord]:
        return {r.utterance_id: r for r in self.records}


def load_pin(directory: str | Path) -> PinData:
    """Parse the canonical TSVs and build annotated paraphrase pairs."""
    directory = Path(directory)
    records_path = directory / "records.tsv"
    annotations_path = directory / "annotations.tsv"
    if not records_path.exists():
        raise DatasetError(f"missing {records_path}")
    if not annotations_path.exists():
        raise DatasetError(f"missing {annotations_path}")

    records: list[PinRecord] = []
    with open(records_path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle, delimiter="\t")
        fixed = ["utterance_id", "triplet_id", "position", "snr_db", "text"]
        fields = reader.fieldnames or []
        missing = [c for c in fixed if c not in fields]
        if missing:
            raise DatasetError(f"{records_path}: missing columns {missing}")
        transcript_cols = sorted(
            (c for c in fields if c.startswith("transcript_")),
            key=lambda c: int(c.split("_")[1]),
        )
        if not transcript_cols:
            raise DatasetError(f"{records_path}: no transcript_* columns")
        for row_num, row in enumerate(reader, 2):
            position = row["position"].strip()
            if position not in ("s1", "s2", "s3"):
                raise DatasetError(f"{records_path}: row {row_num}: bad position {position!r}")
            try:
                snr_db = float(row["snr_db"])
            except ValueError:
                raise DatasetError(f"{records_path}: row {row_num}: bad snr_db {row['snr_db']!r}") from None
            transcripts = tuple(row[c] if row[c] is not None else "" for c in transcript_cols)
            records.append(
                PinRecord(
                    utterance_id=row["utterance_id"],
                    triplet_id=row["triplet_id"],
                    position=position,
                    snr_db=snr_db,
                    text=row["text"],
                    transcripts=transcripts,
                )
            )
    if not records:
        raise DatasetError(f"{records_path}: no records")
    ids = [r.utterance_id for r in records]
    if len(set(ids)) != len(ids):
        raise DatasetError(f"{records_path}: duplicate utterance ids")

    annotations: dict[str, tuple[bool, bool]] = {}
    with open(annotations_path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle, delimiter="\t")
        required = {"pair_id", "annotator_a", "annotator_b"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DatasetError(f"{annotations_path}: expected columns {sorted(required)}")
        for row_num, row in enumerate(reader, 2):
            for col in ("annotator_a", "annotator_b"):
                if row[col] not in ("0", "1"):
                    raise DatasetError(f"{annotations_path}: row {row_num}: {col} must be 0 or 1")
            annotations[row["pair_id"]] = (row["annotator_a"] == "1", row["annotator_b"] == "1")

    triplets: dict[str, dict[str, PinRecord]] = {}
    for record in records:
        slot = triplets.setdefault(record.triplet_id, {})
        if record.position in slot:
            raise DatasetError(f"triplet {record.triplet_id}: duplicate position {record.position}")
        slot[record.position] = record

    pairs: list[PinPair] = []
    for triplet_id in sorted(triplets):
        slot = triplets[triplet_id]
        if set(slot) != {"s1", "s2", "s3"}:
            raise DatasetError(f"triplet {triplet_id}: expected positions s1,s2,s3, found {sorted(slot)}")
        snrs = {r.snr_db for r in slot.values()}
        if len(snrs) != 1:
            raise DatasetError(f"triplet {triplet_id}: mixed SNR conditions {sorted(snrs)}")
        for left, right in _PAIR_ORDER:
            pair_id = f"{triplet_id}:{left}-{right}"
            if pair_id not in annotations:
                raise DatasetError(f"{annotations_path}: missing annotation for {pair_id}")
            a, b = annotations[pair_id]
            pairs.append(
                PinPair(
                    pair_id=pair_id,
                    snr_db=slot[left].snr_db,
                    left_id=slot[left].utterance_id,
                    right_id=slot[right].utterance_id,
                    in_both=a and b,
                    in_either=a or b,
                )
            )
    return PinData(tuple(records), tuple(pairs))


def subset_counts(pairs: Sequence[PinPair]) -> dict[str, dict]:
    """Pair counts per subset and SNR, shaped like RELEASED_COUNTS."""
    out: dict[str, dict] = {}
    for name, keep in (
        ("PiN", lambda p: True),
        ("PiN_both", lambda p: p.in_both),
        ("PiN_either", lambda p: p.in_either),
    ):
        selected = [p for p in pairs if keep(p)]
        table: dict = {"total": len(selected)}
        for p in selected:
            table[p.snr_db] = table.get(p.snr_db, 0) + 1
        out[name] = table
    return out


def validate_released_counts(counts: dict[str, dict]) -> None:
    """Check counts against the released corpus; report expected vs found."""
    problems = []
    for name, expected in RELEASED_COUNTS.items():
        found = counts.get(name, {})
        for key, value in expected.items():
            if found.get(key, 0) != value:
                problems.append(f"{name}[{key}]: expected {value}, found {found.get(key, 0)}")
    if problems:
        raise DatasetError("pair counts do not match the released corpus: " + "; ".join(problems))


def score_records(records: Iterable[PinRecord], lexicon: phonetics.Lexicon) -> list[PinRecord]:
    """Attach sentence intelligibility (exact and float) to every record."""
    scored: list[PinRecord] = []
    for record in records:
        target = phonetics.g2p(record.text, lexicon)
        if len(target) == 0:
            raise DatasetError(f"{record.utterance_id}: text yields an empty phoneme sequence")
        perceived = [phonetics.g2p(t, lexicon) for t in record.transcripts]
        exact = phonetics.sent_int_exact(target, perceived)
        scored.append(replace(record, sent_int=float(exact), sent_int_exact=exact))
    return scored


def resolve_gold(pairs: Iterable[PinPair], records: Sequence[PinRecord]) -> list[PinPair]:
    """Fill the gold ordering from exact intelligibility values (exact ties)."""
    by_id = {r.utterance_id: r for r in records}
    out: list[PinPair] = []
    for pair in pairs:
        left = by_id[pair.left_id]
        right = by_id[pair.right_id]
        if left.sent_int_exact is None or right.sent_int_exact is None:
            raise DatasetError(f"pair {pair.pair_id}: records are not scored")
        if left.sent_int_exact > right.sent_int_exact:
            gold = "left"
        elif left.sent_int_exact < right.sent_int_exact:
            gold = "right"
        else:
            gold = "tie"
        out.append(replace(pair, gold=gold))
    return out


def mean_sent_int(records: Sequence[PinRecord]) -> dict[float, float]:
    """Overall intelligibility per SNR condition."""
    by_snr: dict[float, list[float]] = {}
    for r in records:
        if r.sent_int is None:
            raise DatasetError(f"{r.utterance_id}: record not scored")
        by_snr.setdefault(r.snr_db, []).append(r.sent_int)
    return {snr: float(np.mean(vals)) for snr, vals in sorted(by_snr.items(), reverse=True)}


@dataclass(frozen=True)
class SnrPairStats:
    snr_db: float
    n_pairs: int
    mean_abs_diff: float
    abs_diffs: tuple[float, ...]
    hist_edges: tuple[float, ...]
    hist_counts: tuple[int, ...]
    ttest_vs_zero: stats.TTestResult | None


@dataclass(frozen=True)
class PairStatsReport:
    per_snr: dict[float, SnrPairStats]
    welch_adjacent: dict[tuple[float, float], stats.TTestResult]


def pair_stats(pairs: Sequence[PinPair], records: Sequence[PinRecord], n_bins: int = 20) -> PairStatsReport:
    """Mean absolute intelligibility differences per SNR, histogram export,
    a one-sample t-test of each condition against zero, and Welch tests
    between adjacent noise levels."""
    by_id = {r.utterance_id: r for r in records}
    diffs_by_snr: dict[float, list[float]] = {}
    for pair in pairs:
        left = by_id[pair.left_id]
        right = by_id[pair.right_id]
        if left.sent_int is None or right.sent_int is None:
            raise DatasetError(f"pair {pair.pair_id}: records are not scored")
        diffs_by_snr.setdefault(pair.snr_db, []).append(abs(left.sent_int - right.sent_int))
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    per_snr: dict[float, SnrPairStats] = {}
    for snr in sorted(diffs_by_snr, reverse=True):
        diffs = np.array(diffs_by_snr[snr])
        counts, _ = np.histogram(diffs, bins=edges)
        try:
            ttest = stats.one_sample_ttest(diffs, 0.0)
        except Exception:
            ttest = None  # degenerate synthetic data (e.g. all ties)
        per_snr[snr] = SnrPairStats(
            snr_db=snr,
            n_pairs=len(diffs),
            mean_abs_diff=float(diffs.mean()),
            abs_diffs=tuple(map(float, diffs)),
            hist_edges=tuple(map(float, edges)),
            hist_counts=tuple(map(int, counts)),
            ttest_vs_zero=ttest,
        )
    welch: dict[tuple[float, float], stats.TTestResult] = {}
    levels = sorted(per_snr, reverse=True)
    for high, low in zip(levels, levels[1:]):
        try:
            welch[(high, low)] = stats.welch_ttest(per_snr[low].abs_diffs, per_snr[high].abs_diffs)
        except Exception:
            pass
    return PairStatsReport(per_snr=per_snr, welch_adjacent=welch)


def oracle_gain(pairs: Sequence[PinPair], records: Sequence[PinRecord]) -> dict[float, float]:
    """Relative gain (percent) from always picking the more intelligible side."""
    by_id = {r.utterance_id: r for r in records}
    more: dict[float, list[float]] = {}
    less: dict[float, list[float]] = {}
    for pair in pairs:
        left = by_id[pair.left_id].sent_int
        right = by_id[pair.right_id].sent_int
        if left is None or right is None:
            raise DatasetError(f"pair {pair.pair_id}: records are not scored")
        more.setdefault(pair.snr_db, []).append(max(left, right))
        less.setdefault(pair.snr_db, []).append(min(left, right))
    gains: dict[float, float] = {}
    for snr in sorted(more, reverse=True):
        mean_more = float(np.mean(more[snr]))
        mean_less = float(np.mean(less[snr]))
        if mean_less == 0.0:
            raise DatasetError(f"SNR {snr}: zero mean intelligibility, relative gain undefined")
        gains[snr] = 100.0 * (mean_more - mean_less) / mean_less
    return gains


def filter_pairs(pairs: Sequence[PinPair], subset: str = "all", snr_db: float | None = None) -> list[PinPair]:
    """Select pairs by annotator subset ("all", "both", "either") and SNR."""
    if subset == "all":
        keep = lambda p: True
    elif subset == "both":
        keep = lambda p: p.in_both
    elif subset == "either":
        keep = lambda p: p.in_either
    else:
        raise DatasetError(f"unknown subset {subset!r}")
    return [p for p in pairs if keep(p) and (snr_db is None or p.snr_db == snr_db)]
