"""Reference evaluation targets for the released paraphrase-listening corpus.

The reproduce pipeline compares freshly computed numbers against these
expected values (with their tolerances) and reports pass/fail per line.
Accuracy targets assume perplexities ingested from the original external
model; rows that depend on a locally trained n-gram model are reported but
not gated, because a different language model legitimately shifts them.
"""

from __future__ import annotations

from dataclasses import dataclass

SNR_LEVELS = (5.0, 0.0, -5.0)

# Overall sentence intelligibility per SNR, tolerance +/-0.02.
MEAN_SENT_INT = {5.0: 0.97, 0.0: 0.94, -5.0: 0.71}
MEAN_SENT_INT_TOL = 0.02

# Mean absolute intelligibility difference between paired paraphrases, +/-0.02.
MEAN_ABS_DIFF = {5.0: 0.039, 0.0: 0.059, -5.0: 0.198}
MEAN_ABS_DIFF_TOL = 0.02

# Relative gain (percent) of always choosing the more intelligible side, +/-3 points.
ORACLE_GAIN_PCT = {5.0: 2.0, 0.0: 5.0, -5.0: 33.0}
ORACLE_GAIN_TOL = 3.0

# Mean pairwise ranking accuracy per feature row and SNR, +/-5 points.
TABLE_ACCURACY = {
    "STOI": {5.0: 46.0, 0.0: 49.0, -5.0: 53.0},
    "ppl": {5.0: 39.0, 0.0: 52.0, -5.0: 55.0},
    "phLen": {5.0: 53.0, 0.0: 59.0, -5.0: 56.0},
    "phLen+ppl": {5.0: 53.0, 0.0: 64.0, -5.0: 61.0},
    "phLen+ppl+STOI": {5.0: 54.0, 0.0: 60.0, -5.0: 67.0},
    "majority": {5.0: 43.0, 0.0: 48.0, -5.0: 46.0},
    "uniform": {5.0: 33.0, 0.0: 32.0, -5.0: 51.0},
}
TABLE_ACCURACY_TOL = 5.0
# Rows that only depend on locally computable features.
PPL_FREE_ROWS = ("STOI", "phLen", "majority", "uniform")

# Hard floors for the full-feature model in the noisiest condition.
FULL_MODEL_SNR_M5_MIN = 62.0
FULL_MODEL_VS_UNIFORM_MIN_GAP = 10.0


@dataclass(frozen=True)
class TargetCheck:
    name: str
    expected: float
    tolerance: float
    computed: float
    gated: bool = True

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.expected) <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        gate = "" if self.gated else " (reported, not gated)"
        return (
            f"{status}\t{self.name}\texpected {self.expected:g} +/- {self.tolerance:g}"
            f"\tcomputed {self.computed:.4f}{gate}"
        )


def check_mean_sent_int(means: dict[float, float]) -> list[TargetCheck]:
    return [
        TargetCheck(f"mean_sent_int@snr{snr:+g}", MEAN_SENT_INT[snr], MEAN_SENT_INT_TOL, means.get(snr, float("nan")))
        for snr in SNR_LEVELS
    ]


def check_mean_abs_diff(diffs: dict[float, float]) -> list[TargetCheck]:
    return [
        TargetCheck(f"mean_abs_diff@snr{snr:+g}", MEAN_ABS_DIFF[snr], MEAN_ABS_DIFF_TOL, diffs.get(snr, float("nan")))
        for snr in SNR_LEVELS
    ]


def check_oracle_gain(gains: dict[float, float]) -> list[TargetCheck]:
    return [
        TargetCheck(f"oracle_gain_pct@snr{snr:+g}", ORACLE_GAIN_PCT[snr], ORACLE_GAIN_TOL, gains.get(snr, float("nan")))
        for snr in SNR_LEVELS
    ]


def check_table_accuracy(means: dict[str, dict[float, float]], external_ppl: bool) -> list[TargetCheck]:
    """Accuracy checks per row and SNR; ppl-dependent rows are gated only when
    the perplexities were ingested from the original external model."""
    checks: list[TargetCheck] = []
    for row, per_snr in TABLE_ACCURACY.items():
        gated = external_ppl or row in PPL_FREE_ROWS
        for snr in SNR_LEVELS:
            computed = means.get(row, {}).get(snr, float("nan"))
            checks.append(
                TargetCheck(f"accuracy[{row}]@snr{snr:+g}", per_snr[snr], TABLE_ACCURACY_TOL, computed, gated)
            )
    return checks
