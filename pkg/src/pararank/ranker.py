"""Pairwise intelligibility ranking: linear ranking SVM plus reference baselines.

A linear model scores the difference vector of a paraphrase pair; pairs whose
absolute score difference falls inside a tie threshold are predicted equal.
Models are trained on hinge loss over gold-ordered difference vectors with
deterministic full-batch subgradient descent, and evaluated over repeated
80/20 splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import stats
from .errors import PararankError
from .features import FEATURE_NAMES, FeatureVector, ScalerParams, fit_scaler

CLASSES = ("left", "right", "tie")

# Fixed split seeds used for reported evaluations.
DEFAULT_EVAL_SEEDS = tuple(range(10))

# Ablation rows in reporting order, then the two baselines.
TABLE_SUBSETS = (
    ("STOI",),
    ("ppl",),
    ("phLen",),
    ("phLen", "ppl"),
    ("phLen", "ppl", "STOI"),
)
TABLE_ROW_ORDER = ("STOI", "ppl", "phLen", "phLen+ppl", "phLen+ppl+STOI", "majority", "uniform")

_C_GRID = (0.01, 0.1, 1.0, 10.0)
_UNIFORM_SEED_OFFSET = 1_000_003


@dataclass(frozen=True)
class PairExample:
    """One paraphrase pair with raw per-utterance features and its gold order."""

    pair_id: str
    left: FeatureVector
    right: FeatureVector
    gold: str

    def __post_init__(self):
        if self.gold not in CLASSES:
            raise PararankError(f"unknown gold class {self.gold!r}")


@dataclass(frozen=True)
class RankPrediction:
    pair_id: str
    predicted: str
    score_diff: float


@dataclass(frozen=True)
class RankModel:
    feature_names: tuple[str, ...]
    weights: np.ndarray
    tie_threshold: float
    c: float
    scaler: ScalerParams

    def save(self, path: str | Path, seed: int | None = None) -> None:
        from . import __version__

        payload = {
            "format": "pararank-rank-model",
            "version": 1,
            "artifact_version": __version__,
            "features": list(self.feature_names),
            "weights": [float(w) for w in self.weights],
            "tie_threshold": self.tie_threshold,
            "c": self.c,
            "scaler": self.scaler.to_dict(),
            "seed": seed,
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RankModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "pararank-rank-model":
            raise PararankError(f"{path}: not a rank model file")
        return cls(
            feature_names=tuple(payload["features"]),
            weights=np.array(payload["weights"], dtype=np.float64),
            tie_threshold=float(payload["tie_threshold"]),
            c=float(payload["c"]),
            scaler=ScalerParams.from_dict(payload["scaler"]),
        )


def hinge_objective(w: np.ndarray, deltas: np.ndarray, c: float) -> float:
    """0.5*||w||^2 + C * sum of hinge losses over difference vectors."""
    margins = deltas @ w
    return 0.5 * float(w @ w) + c * float(np.sum(np.maximum(0.0, 1.0 - margins)))


def _minimize_hinge(deltas: np.ndarray, c: float, tol: float = 1e-9, max_iter: int = 50_000) -> np.ndarray:
    """Full-batch subgradient descent from w=0 with backtracking steps.

    The objective never increases: a step is only taken when it lowers the
    objective, halving the step size until it does.
    """
    w = np.zeros(deltas.shape[1])
    obj = hinge_objective(w, deltas, c)
    step = 1.0 / max(1.0, c * np.abs(deltas).sum())
    stall = 0
    for _ in range(max_iter):
        margins = deltas @ w
        active = margins < 1.0
        grad = w - c * deltas[active].sum(axis=0)
        improved = False
        trial_step = step
        for _ in range(60):
            w_new = w - trial_step * grad
            obj_new = hinge_objective(w_new, deltas, c)
            if obj_new < obj:
                improved = True
                break
            trial_step *= 0.5
        if improved:
            stall = 0 if obj - obj_new > tol * max(1.0, obj) else stall + 1
            w, obj, step = w_new, obj_new, trial_step * 1.5
        else:
            stall += 1
        if stall >= 20:
            break
    return w


def _scaled(model_scaler: ScalerParams, vector: FeatureVector) -> np.ndarray:
    row = np.array([vector.value(name) for name in model_scaler.names], dtype=np.float64)
    return model_scaler.transform(row)


def train(
    examples: Sequence[PairExample],
    feature_names: Sequence[str] = FEATURE_NAMES,
    c: float = 1.0,
    scaler: ScalerParams | None = None,
) -> RankModel:
    """Fit weights on gold-ordered difference vectors, then pick the tie threshold.

    Tie pairs carry no preference direction, so they are left out of the hinge
    objective; they do participate in the threshold search, which maximizes
    three-class accuracy on the training pairs over {0} plus the observed
    absolute score differences.
    """
    if c <= 0:
        raise PararankError(f"regularization constant must be positive, got {c}")
    feature_names = tuple(feature_names)
    if scaler is None:
        by_id = {}
        for ex in examples:
            by_id[ex.left.utterance_id] = ex.left
            by_id[ex.right.utterance_id] = ex.right
        scaler = fit_scaler(list(by_id.values()), feature_names)
    if tuple(scaler.names) != feature_names:
        raise PararankError("scaler features do not match the requested subset")

    deltas = []
    for ex in examples:
        if ex.gold == "tie":
            continue
        more, less = (ex.left, ex.right) if ex.gold == "left" else (ex.right, ex.left)
        deltas.append(_scaled(scaler, more) - _scaled(scaler, less))
    if not deltas:
        raise PararankError("all training pairs are tied; nothing to rank")
    weights = _minimize_hinge(np.array(deltas), c)

    score_diffs = np.array(
        [weights @ (_scaled(scaler, ex.left) - _scaled(scaler, ex.right)) for ex in examples]
    )
    gold = [ex.gold for ex in examples]
    candidates = np.concatenate([[0.0], np.abs(score_diffs)])
    best_tau, best_acc = 0.0, -1.0
    for tau in np.sort(candidates):
        predicted = np.where(
            np.abs(score_diffs) <= tau, "tie", np.where(score_diffs > 0, "left", "right")
        )
        acc = float(np.mean(predicted == gold))
        if acc > best_acc:
            best_tau, best_acc = float(tau), acc
    return RankModel(feature_names, weights, best_tau, c, scaler)


def predict(model: RankModel, examples: Sequence[PairExample]) -> list[RankPrediction]:
    """Three-way prediction: left-more / right-more / tie within the threshold."""
    out: list[RankPrediction] = []
    for ex in examples:
        d = float(model.weights @ (_scaled(model.scaler, ex.left) - _scaled(model.scaler, ex.right)))
        if d > model.tie_threshold:
            predicted = "left"
        elif d < -model.tie_threshold:
            predicted = "right"
        else:
            predicted = "tie"
        out.append(RankPrediction(ex.pair_id, predicted, d))
    return out


def accuracy(predictions: Sequence[RankPrediction], gold: Mapping[str, str]) -> float:
    """Percentage of pairs whose predicted class matches gold exactly."""
    if {p.pair_id for p in predictions} != set(gold):
        raise PararankError("prediction and gold pair ids do not match")
    if not predictions:
        raise PararankError("no predictions to score")
    hits = sum(1 for p in predictions if p.predicted == gold[p.pair_id])
    return 100.0 * hits / len(predictions)


def baseline_uniform(
    train_examples: Sequence[PairExample],
    test_examples: Sequence[PairExample],
    seed: int,
) -> list[RankPrediction]:
    """Sample each test prediction i.i.d. from the classes present in training."""
    if not train_examples:
        raise PararankError("empty training set")
    present = [c for c in CLASSES if any(ex.gold == c for ex in train_examples)]
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(present), size=len(test_examples))
    return [
        RankPrediction(ex.pair_id, present[k], float("nan"))
        for ex, k in zip(test_examples, picks)
    ]


def baseline_majority(
    train_examples: Sequence[PairExample],
    test_examples: Sequence[PairExample],
) -> list[RankPrediction]:
    """Always predict the modal training class (ties broken in CLASSES order)."""
    if not train_examples:
        raise PararankError("empty training set")
    counts = {c: 0 for c in CLASSES}
    for ex in train_examples:
        counts[ex.gold] += 1
    modal = max(CLASSES, key=lambda c: counts[c])  # max is stable: first wins ties
    return [RankPrediction(ex.pair_id, modal, float("nan")) for ex in test_examples]


@dataclass(frozen=True)
class EvalReport:
    name: str
    run_accuracies: tuple[float, ...]
    mean: float
    ci95_halfwidth: float
    p_vs_uniform: float | None = None
    p_vs_majority: float | None = None
    significant: bool = False


def _beats(model_runs: Sequence[float], base_runs: Sequence[float]) -> tuple[float | None, bool]:
    if float(np.mean(model_runs)) <= float(np.mean(base_runs)):
        return None, False
    if len(model_runs) < 2 or len(base_runs) < 2:
        return None, False
    try:
        p = stats.welch_ttest(model_runs, base_runs).pvalue
        return p, p < 0.05
    except PararankError:
        return None, True  # both runs constant with a strictly higher mean


def select_c(
    examples: Sequence[PairExample],
    feature_names: Sequence[str],
    grid: Sequence[float] = _C_GRID,
    folds: int = 5,
    seed: int = 0,
) -> float:
    """Pick C by k-fold cross-validation on the training pairs (ties -> smaller C)."""
    if len(examples) < folds:
        raise PararankError("not enough pairs for cross-validation")
    order = np.random.default_rng(seed).permutation(len(examples))
    chunks = np.array_split(order, folds)
    best_c, best_acc = grid[0], -1.0
    for c in grid:
        accs = []
        for k in range(folds):
            held = set(chunks[k].tolist())
            fold_train = [examples[i] for i in range(len(examples)) if i not in held]
            fold_test = [examples[i] for i in sorted(held)]
            if not fold_test or all(ex.gold == "tie" for ex in fold_train):
                continue
            model = train(fold_train, feature_names, c)
            preds = predict(model, fold_test)
            accs.append(accuracy(preds, {ex.pair_id: ex.gold for ex in fold_test}))
        mean_acc = float(np.mean(accs)) if accs else -1.0
        if mean_acc > best_acc:
            best_c, best_acc = c, mean_acc
    return best_c


def evaluate(
    examples: Sequence[PairExample],
    feature_subsets: Sequence[Sequence[str]] = TABLE_SUBSETS,
    seeds: Sequence[int] = DEFAULT_EVAL_SEEDS,
    c: float = 1.0,
    choose_c: bool = False,
) -> dict[str, EvalReport]:
    """Repeated 80/20 evaluation of every feature subset plus both baselines.

    Per seed: shuffle, split, fit the scaler on the training side, train, and
    score the held-out pairs.  Subset rows are flagged significant when a
    Welch test over the per-run accuracies beats both baselines at alpha=0.05.
    """
    if len(examples) < 5:
        raise PararankError("insufficient pairs for an 80/20 split")
    subset_runs: dict[str, list[float]] = {"+".join(s): [] for s in feature_subsets}
    base_runs: dict[str, list[float]] = {"majority": [], "uniform": []}
    for seed in seeds:
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(examples))
        n_train = int(round(0.8 * len(examples)))
        if n_train == 0 or n_train == len(examples):
            raise PararankError("insufficient pairs for an 80/20 split")
        train_ex = [examples[i] for i in order[:n_train]]
        test_ex = [examples[i] for i in order[n_train:]]
        gold = {ex.pair_id: ex.gold for ex in test_ex}
        for subset in feature_subsets:
            chosen_c = select_c(train_ex, subset, seed=seed) if choose_c else c
            model = train(train_ex, subset, chosen_c)
            subset_runs["+".join(subset)].append(accuracy(predict(model, test_ex), gold))
        base_runs["majority"].append(accuracy(baseline_majority(train_ex, test_ex), gold))
        base_runs["uniform"].append(
            accuracy(baseline_uniform(train_ex, test_ex, seed + _UNIFORM_SEED_OFFSET), gold)
        )

    reports: dict[str, EvalReport] = {}
    for name, runs in subset_runs.items():
        mean, half = stats.mean_ci95(runs) if len(runs) > 1 else (float(runs[0]), 0.0)
        p_uni, beats_uni = _beats(runs, base_runs["uniform"])
        p_maj, beats_maj = _beats(runs, base_runs["majority"])
        reports[name] = EvalReport(
            name=name,
            run_accuracies=tuple(runs),
            mean=mean,
            ci95_halfwidth=half,
            p_vs_uniform=p_uni,
            p_vs_majority=p_maj,
            significant=beats_uni and beats_maj,
        )
    for name, runs in base_runs.items():
        mean, half = stats.mean_ci95(runs) if len(runs) > 1 else (float(runs[0]), 0.0)
        reports[name] = EvalReport(name=name, run_accuracies=tuple(runs), mean=mean, ci95_halfwidth=half)
    return reports
