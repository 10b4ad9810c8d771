"""Linguistic predictability: interpolated Kneser-Ney n-gram models and perplexity.

Perplexity of an utterance is the exponentiated mean negative log-probability
of its tokens, so less predictable utterances score higher.  Scores computed
by an external model can be ingested from CSV instead of being recomputed.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import PararankError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_TOKEN_RE = re.compile(r"[a-z0-9']+")

_FORMAT = "pararank-ngram"
_FORMAT_VERSION = 1


def tokenize(text: str) -> list[str]:
    """Lowercased tokens split on whitespace and punctuation."""
    return _TOKEN_RE.findall(text.lower())


class NGramModel:
    """Interpolated Kneser-Ney model over token sequences.

    Raw counts back the highest order, continuation counts the lower orders,
    and the recursion bottoms out in a uniform distribution over the event
    vocabulary plus one unknown type, which keeps every conditional
    distribution a proper simplex.
    """

    def __init__(self, order: int, tables, discounts: Sequence[float], vocab: frozenset[str]):
        self.order = order
        self._tables = tables  # tables[n][ctx][word] = count, n = 1..order
        self._totals = [None] + [
            {ctx: sum(bucket.values()) for ctx, bucket in tables[n].items()}
            for n in range(1, order + 1)
        ]
        self.discounts = tuple(discounts)
        self.vocab = vocab

    def event_vocab(self) -> frozenset[str]:
        """Every token the model can predict, including the unknown type."""
        return self.vocab | {UNK}

    def _map(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def prob(self, token: str, context: Sequence[str] = ()) -> float:
        token = self._map(token)
        ctx = tuple(t if t == BOS or t in self.vocab else UNK for t in context)
        ctx = ctx[-(self.order - 1):] if self.order > 1 else ()
        return self._prob_level(token, ctx, len(ctx) + 1)

    def _prob_level(self, token: str, ctx: tuple[str, ...], n: int) -> float:
        if n == 0:
            return 1.0 / (len(self.vocab) + 1)
        bucket = self._tables[n].get(ctx)
        lower = ctx[1:] if ctx else ()
        if not bucket:
            return self._prob_level(token, lower, n - 1)
        total = self._totals[n][ctx]
        d = self.discounts[n - 1]
        discounted = max(bucket.get(token, 0) - d, 0.0) / total
        backoff_weight = d * len(bucket) / total
        return discounted + backoff_weight * self._prob_level(token, lower, n - 1)

    def logprob(self, token: str, context: Sequence[str] = ()) -> float:
        return math.log(self.prob(token, context))


@dataclass(frozen=True)
class ExplicitUnigram:
    """Context-free model with a fixed token->probability table.

    Handy as a reference model (uniform, memorized) where exact closed-form
    perplexities are wanted; probabilities must sum to at most 1.
    """

    probs: Mapping[str, float]
    unk_prob: float = 0.0
    order: int = 1

    def logprob(self, token: str, context: Sequence[str] = ()) -> float:
        p = self.probs.get(token, self.unk_prob)
        if p <= 0.0:
            raise PararankError(f"token {token!r} has zero probability")
        return math.log(p)

    @classmethod
    def uniform(cls, vocab: Iterable[str]) -> "ExplicitUnigram":
        words = list(vocab)
        return cls({w: 1.0 / len(words) for w in words})


def _auto_discount(counts: Iterable[int]) -> float:
    n1 = n2 = 0
    for c in counts:
        if c == 1:
            n1 += 1
        elif c == 2:
            n2 += 1
    if n1 == 0:
        return 0.5
    return min(max(n1 / (n1 + 2.0 * n2), 0.05), 0.95)


def train(corpus: Iterable[Sequence[str]], order: int, discount: float | None = None) -> NGramModel:
    """Fit an interpolated Kneser-Ney model of the given order.

    ``corpus`` streams token sequences (one per sentence); sentence starts are
    padded with begin markers and every sentence contributes an end-of-sentence
    event.  ``discount`` overrides the per-order count-of-counts estimate.
    """
    if order < 1:
        raise PararankError(f"order must be >= 1, got {order}")
    if discount is not None and not 0.0 < discount < 1.0:
        raise PararankError("discount must lie strictly between 0 and 1")
    raw: list[dict] = [None] + [{} for _ in range(order)]
    vocab: set[str] = set()
    n_sentences = 0
    for sentence in corpus:
        tokens = [t for t in sentence if t]
        if not tokens:
            continue
        n_sentences += 1
        padded = [BOS] * (order - 1) + tokens + [EOS]
        vocab.update(tokens)
        vocab.add(EOS)
        for i in range(order - 1, len(padded)):
            for n in range(1, order + 1):
                ctx = tuple(padded[i - n + 1 : i])
                bucket = raw[n].setdefault(ctx, {})
                word = padded[i]
                bucket[word] = bucket.get(word, 0) + 1
    if n_sentences == 0:
        raise PararankError("empty corpus")

    tables: list[dict] = [None] + [{} for _ in range(order)]
    tables[order] = raw[order]
    # continuation counts: distinct one-token left extensions seen one level up
    for n in range(order - 1, 0, -1):
        cont: dict = {}
        for ctx, bucket in raw[n + 1].items():
            suffix_ctx = ctx[1:]
            target = cont.setdefault(suffix_ctx, {})
            for word in bucket:
                target[word] = target.get(word, 0) + 1
        tables[n] = cont

    discounts = []
    for n in range(1, order + 1):
        if discount is not None:
            discounts.append(discount)
        else:
            discounts.append(_auto_discount(c for bucket in tables[n].values() for c in bucket.values()))
    return NGramModel(order, tables, discounts, frozenset(vocab))


def logprob(model, token: str, context: Sequence[str] = ()) -> float:
    """Natural log-probability of a token given its (truncated) context."""
    return model.logprob(token, context)


def perplexity(model, tokens: Sequence[str]) -> float:
    """exp of the mean negative log-probability over the utterance tokens.

    Begin markers condition the first tokens but the end-of-sentence event is
    neither scored nor counted, so the average runs over exactly the given
    tokens.
    """
    if not tokens:
        raise PararankError("perplexity of an empty utterance is undefined")
    order = getattr(model, "order", 1)
    context: list[str] = [BOS] * (order - 1)
    total = 0.0
    for token in tokens:
        total += model.logprob(token, tuple(context))
        context.append(token)
    return math.exp(-total / len(tokens))


@dataclass(frozen=True)
class PplRecord:
    utterance_id: str
    ppl: float


def load_external_ppl(path: str | Path) -> list[PplRecord]:
    """Read per-utterance perplexities computed elsewhere (CSV: utterance_id,ppl)."""
    import csv

    records: list[PplRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"utterance_id", "ppl"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise PararankError(f"{path}: expected columns utterance_id,ppl, got {reader.fieldnames}")
        for row_num, row in enumerate(reader, 2):
            uid = row["utterance_id"]
            try:
                ppl = float(row["ppl"])
            except (TypeError, ValueError):
                raise PararankError(f"{path}: row {row_num}: non-numeric ppl {row['ppl']!r}") from None
            if ppl <= 0:
                raise PararankError(f"{path}: row {row_num}: ppl must be positive, got {ppl}")
            if uid in seen:
                raise PararankError(f"{path}: row {row_num}: duplicate id {uid!r}")
            seen.add(uid)
            records.append(PplRecord(uid, ppl))
    return records


def save_model(model: NGramModel, path: str | Path) -> None:
    """Serialize a trained model as order/discounts/count tables."""
    payload = {
        "format": _FORMAT,
        "version": _FORMAT_VERSION,
        "order": model.order,
        "discounts": list(model.discounts),
        "vocab": sorted(model.vocab),
        "tables": {
            str(n): {" ".join(ctx): bucket for ctx, bucket in model._tables[n].items()}
            for n in range(1, model.order + 1)
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> NGramModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != _FORMAT or payload.get("version") != _FORMAT_VERSION:
        raise PararankError(f"{path}: not a recognized model file")
    order = payload["order"]
    tables: list = [None] + [{} for _ in range(order)]
    for n_str, ctx_map in payload["tables"].items():
        n = int(n_str)
        for ctx_str, bucket in ctx_map.items():
            ctx = tuple(ctx_str.split(" ")) if ctx_str else ()
            tables[n][ctx] = {w: int(c) for w, c in bucket.items()}
    return NGramModel(order, tables, payload["discounts"], frozenset(payload["vocab"]))
