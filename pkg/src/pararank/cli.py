"""para-rank: one entry point tying scoring, features, statistics, and ranking together.

Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import (
    __version__,
    dataset as dataset_mod,
    default_g2p_rules_path,
    default_lexicon_path,
    features as features_mod,
    lm as lm_mod,
    phonetics,
    ranker,
    report,
    stats,
    stoi as stoi_mod,
    targets,
)
from .audio import Waveform, mix_at_snr, random_noise_offset, read_wav, write_wav
from .errors import PararankError
from .manifest import build_manifest, write_manifest


def _lexicon_path(args) -> Path:
    if getattr(args, "lexicon", None):
        return Path(args.lexicon)
    env = os.environ.get("PARARANK_LEXICON")
    return Path(env) if env else default_lexicon_path()


def _load_lexicon(args) -> phonetics.Lexicon:
    return phonetics.Lexicon.load(_lexicon_path(args), default_g2p_rules_path())


def _load_scored(args):
    """Load the dataset, score records, and resolve gold orderings."""
    lexicon = _load_lexicon(args)
    data = dataset_mod.load_pin(args.dataset)
    records = dataset_mod.score_records(data.records, lexicon)
    pairs = dataset_mod.resolve_gold(data.pairs, records)
    return data, records, pairs, lexicon


def _ppl_source(path: str):
    """External per-utterance CSV or a trained model file, by extension."""
    if str(path).endswith(".csv"):
        return {r.utterance_id: r.ppl for r in lm_mod.load_external_ppl(path)}, True
    return lm_mod.load_model(path), False


def _pair_examples(pairs, vectors) -> list[ranker.PairExample]:
    by_id = {v.utterance_id: v for v in vectors}
    examples = []
    for pair in pairs:
        if pair.left_id not in by_id or pair.right_id not in by_id:
            raise PararankError(f"pair {pair.pair_id}: missing feature vectors")
        examples.append(ranker.PairExample(pair.pair_id, by_id[pair.left_id], by_id[pair.right_id], pair.gold))
    return examples


def _parse_subset(text: str) -> tuple[str, ...]:
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    for name in names:
        if name not in features_mod.FEATURE_NAMES:
            raise PararankError(f"unknown feature {name!r}; choose from {features_mod.FEATURE_NAMES}")
    if not names:
        raise PararankError("empty feature subset")
    return names


# ---------------------------------------------------------------- subcommands


def cmd_g2p(args) -> int:
    lexicon = _load_lexicon(args)
    print(str(phonetics.g2p(args.text, lexicon)))
    return 0


def cmd_mix(args) -> int:
    speech = read_wav(args.speech)
    noise = read_wav(args.noise)
    if args.offset == "random":
        if args.seed is None:
            raise PararankError("--offset random requires --seed")
        offset = random_noise_offset(len(noise), np.random.default_rng(args.seed))
    else:
        offset = int(args.offset)
    result = mix_at_snr(speech, noise, args.snr, offset)
    write_wav(args.out, result.waveform)
    manifest = build_manifest(
        "mix",
        {
            "speech": args.speech,
            "noise": args.noise,
            "snr_db": args.snr,
            "noise_offset": result.noise_offset,
            "noise_scale": result.noise_scale,
            "post_gain": result.post_gain,
        },
        [args.speech, args.noise],
        seeds=[args.seed] if args.seed is not None else [],
    )
    write_manifest(manifest, args.out)
    print(f"wrote {args.out} (scale {result.noise_scale:.6f}, offset {result.noise_offset}, post-gain {result.post_gain:.6f})")
    return 0


def cmd_stoi(args) -> int:
    score = stoi_mod.stoi(read_wav(args.clean), read_wav(args.degraded))
    print(f"{score:.6f}")
    return 0


def cmd_lm_train(args) -> int:
    with open(args.corpus, encoding="utf-8") as handle:
        sentences = [lm_mod.tokenize(line) for line in handle if line.strip()]
    model = lm_mod.train(sentences, args.order, discount=args.discount)
    lm_mod.save_model(model, args.out)
    write_manifest(build_manifest("lm-train", {"corpus": args.corpus, "order": args.order}, [args.corpus]), args.out)
    print(f"wrote {args.out} (order {model.order}, vocab {len(model.vocab)})")
    return 0


def cmd_ppl(args) -> int:
    model = lm_mod.load_model(args.model)
    tokens = lm_mod.tokenize(args.text)
    if not tokens:
        raise PararankError("no tokens in --text")
    print(f"{lm_mod.perplexity(model, tokens):.6f}")
    return 0


def _extract_all(records, dataset_dir: Path, lm_source, lexicon, jobs: int):
    def one(record):
        clean = read_wav(dataset_dir / "audio" / "clean" / f"{record.utterance_id}.wav")
        noisy = read_wav(dataset_dir / "audio" / "noisy" / f"{record.utterance_id}.wav")
        return features_mod.extract(
            record.utterance_id, record.text, clean, noisy, lm_source, lexicon, record.snr_db
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, records))
    return [one(r) for r in records]


def cmd_features(args) -> int:
    lexicon = _load_lexicon(args)
    data = dataset_mod.load_pin(args.dataset)
    lm_source, _ = _ppl_source(args.lm)
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    vectors = _extract_all(data.records, Path(args.dataset), lm_source, lexicon, jobs)
    features_mod.write_feature_table(args.out, vectors)
    write_manifest(
        build_manifest(
            "features",
            {"dataset": args.dataset, "lm": args.lm, "lexicon": str(_lexicon_path(args))},
            [Path(args.dataset) / "records.tsv", args.lm, _lexicon_path(args)],
        ),
        args.out,
    )
    print(f"wrote {args.out} ({len(vectors)} vectors)")
    return 0


def _zscore_columns(matrix: np.ndarray, names: list[str]) -> np.ndarray:
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    for name, std in zip(names, stds):
        if std == 0.0:
            raise PararankError(f"zero variance feature: {name}")
    return (matrix - means) / stds


def _print_fit(fit: stats.OlsFit, out=sys.stdout) -> None:
    out.write("predictor\testimate\tse\tt\tp\n")
    for i, name in enumerate(fit.names):
        out.write(f"{name}\t{fit.coef[i]:.6f}\t{fit.se[i]:.6f}\t{fit.t_stats[i]:.4f}\t{fit.p_values[i]:.4e}\n")
    out.write(f"# n={fit.n_obs} df_resid={fit.df_resid} r_squared={fit.r_squared:.4f}\n")


def _fit_sent_int(records, vectors, snr: float) -> stats.OlsFit:
    by_id = {v.utterance_id: v for v in vectors}
    selected = [r for r in records if r.snr_db == snr]
    if not selected:
        raise PararankError(f"no records at SNR {snr:g}")
    missing = [r.utterance_id for r in selected if r.utterance_id not in by_id]
    if missing:
        raise PararankError(f"missing feature vectors for {missing[:3]}...")
    vecs = [by_id[r.utterance_id] for r in selected]
    scaler = features_mod.fit_scaler(vecs)
    x_mat = features_mod.apply_scaler(scaler, vecs)
    y = np.array([r.sent_int for r in selected])
    return stats.ols_fit(x_mat, y, names=list(features_mod.FEATURE_NAMES))


def _fit_gain(records, pairs, vectors, snr: float, subset: str, scale_diffs: bool):
    by_id = {v.utterance_id: v for v in vectors}
    rec_by_id = {r.utterance_id: r for r in records}
    selected = dataset_mod.filter_pairs(pairs, subset, snr)
    if not selected:
        raise PararankError(f"no pairs at SNR {snr:g} in subset {subset!r}")
    rows, gains = [], []
    n_ties = 0
    for pair in selected:
        if pair.gold == "tie":
            n_ties += 1
            continue
        diff = features_mod.diff_features(
            (by_id[pair.left_id], by_id[pair.right_id]),
            pair.gold,
            (rec_by_id[pair.left_id].sent_int, rec_by_id[pair.right_id].sent_int),
            pair.pair_id,
        )
        rows.append([diff.diff_phlen, diff.diff_ppl, diff.diff_stoi])
        gains.append(diff.sent_int_gain)
    if not rows:
        raise PararankError(f"all pairs at SNR {snr:g} are tied")
    names = ["diff.phLen", "diff.ppl", "diff.STOI"]
    matrix = np.array(rows)
    if scale_diffs:
        matrix = _zscore_columns(matrix, names)
    return stats.ols_fit(matrix, np.array(gains), names=names), n_ties


def cmd_regress(args) -> int:
    _, records, pairs, _ = _load_scored(args)
    vectors = features_mod.read_feature_table(args.features)
    if args.response == "sent_int":
        fit = _fit_sent_int(records, vectors, args.snr)
        _print_fit(fit)
    else:
        fit, n_ties = _fit_gain(records, pairs, vectors, args.snr, args.subset_pairs, not args.no_scale_diffs)
        _print_fit(fit)
        print(f"# excluded {n_ties} tied pairs; diffs {'z-scored' if not args.no_scale_diffs else 'raw'}")
    return 0


def cmd_analyze(args) -> int:
    data, records, pairs, _ = _load_scored(args)
    counts = dataset_mod.subset_counts(pairs)
    if args.expect_released_counts:
        dataset_mod.validate_released_counts(counts)
    means = dataset_mod.mean_sent_int(records)
    stats_report = dataset_mod.pair_stats(pairs, records)
    gains = dataset_mod.oracle_gain(pairs, records)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.write_counts_tsv(out / "counts.tsv", counts)
    report.write_summary_tsv(out / "summary.tsv", means, stats_report)
    report.write_histogram_csv(out / "histogram.csv", stats_report)
    report.save_diff_histogram_png(stats_report, out / "histogram.png")
    report.write_oracle_tsv(out / "oracle_gain.tsv", gains)
    write_manifest(
        build_manifest(
            "analyze",
            {"dataset": args.dataset, "lexicon": str(_lexicon_path(args))},
            [Path(args.dataset) / "records.tsv", Path(args.dataset) / "annotations.tsv", _lexicon_path(args)],
        ),
        out,
    )
    for snr, mean in means.items():
        print(f"SNR {snr:+g} dB: mean sent-int {mean:.3f}, mean |diff| {stats_report.per_snr[snr].mean_abs_diff:.3f}, oracle gain {gains[snr]:.1f}%")
    print(f"wrote {out}/")
    return 0


def cmd_train_rank(args) -> int:
    _, _, pairs, _ = _load_scored(args)
    vectors = features_mod.read_feature_table(args.features)
    subset = _parse_subset(args.subset)
    examples = _pair_examples(dataset_mod.filter_pairs(pairs, args.subset_pairs, args.snr), vectors)
    if not examples:
        raise PararankError(f"no pairs at SNR {args.snr:g}")
    c = ranker.select_c(examples, subset, seed=args.seed) if args.select_c else args.c
    model = ranker.train(examples, subset, c)
    model.save(args.out, seed=args.seed)
    write_manifest(
        build_manifest(
            "train-rank",
            {"features": args.features, "dataset": args.dataset, "snr": args.snr, "subset": args.subset, "c": c},
            [args.features, Path(args.dataset) / "records.tsv"],
            seeds=[args.seed],
        ),
        args.out,
    )
    print(f"wrote {args.out} (C={c:g}, tau={model.tie_threshold:.6f})")
    return 0


def _parse_seeds(text: str | None) -> tuple[int, ...]:
    if not text:
        return ranker.DEFAULT_EVAL_SEEDS
    return tuple(int(s) for s in text.split(","))


def _eval_tables(pairs, vectors, snrs, subsets, seeds, c, choose_c, subset_pairs="all"):
    tables = {}
    for snr in snrs:
        examples = _pair_examples(dataset_mod.filter_pairs(pairs, subset_pairs, snr), vectors)
        if not examples:
            raise PararankError(f"no pairs at SNR {snr:g}")
        tables[snr] = ranker.evaluate(examples, subsets, seeds=seeds, c=c, choose_c=choose_c)
    return tables


def cmd_eval_rank(args) -> int:
    _, _, pairs, _ = _load_scored(args)
    vectors = features_mod.read_feature_table(args.features)
    seeds = _parse_seeds(args.seeds)
    if args.table4:
        snrs = sorted({p.snr_db for p in pairs}, reverse=True)
        tables = _eval_tables(pairs, vectors, snrs, ranker.TABLE_SUBSETS, seeds, args.c, args.select_c, args.subset_pairs)
        report.write_eval_table_tsv(sys.stdout, tables)
    else:
        if args.snr is None:
            raise PararankError("need --snr or --table4")
        subsets = [_parse_subset(args.subset)]
        tables = _eval_tables(pairs, vectors, [args.snr], subsets, seeds, args.c, args.select_c, args.subset_pairs)
        print("feature(s)\tmean\tci95\tsignificant\tp_vs_uniform\tp_vs_majority")
        for name, rep in tables[args.snr].items():
            p_u = f"{rep.p_vs_uniform:.4f}" if rep.p_vs_uniform is not None else "NA"
            p_m = f"{rep.p_vs_majority:.4f}" if rep.p_vs_majority is not None else "NA"
            print(f"{name}\t{rep.mean:.1f}\t{rep.ci95_halfwidth:.1f}\t{rep.significant}\t{p_u}\t{p_m}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.write_eval_table_tsv(out / "eval_table.tsv", tables)
        report.save_accuracy_png(tables, out / "accuracy.png")
        write_manifest(
            build_manifest(
                "eval-rank",
                {"features": args.features, "dataset": args.dataset, "table4": args.table4, "c": args.c},
                [args.features, Path(args.dataset) / "records.tsv"],
                seeds=list(seeds),
            ),
            out,
        )
        print(f"wrote {out}/")
    return 0


def cmd_reproduce(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines: list[str] = []

    def stage(name):
        print(f"[reproduce] stage: {name}", file=sys.stderr)

    try:
        stage("analyze")
        data, records, pairs, lexicon = _load_scored(args)
        counts = dataset_mod.subset_counts(pairs)
        means = dataset_mod.mean_sent_int(records)
        stats_report = dataset_mod.pair_stats(pairs, records)
        gains = dataset_mod.oracle_gain(pairs, records)
        report.write_counts_tsv(out / "counts.tsv", counts)
        report.write_summary_tsv(out / "summary.tsv", means, stats_report)
        report.write_histogram_csv(out / "histogram.csv", stats_report)
        report.save_diff_histogram_png(stats_report, out / "histogram.png")
        report.write_oracle_tsv(out / "oracle_gain.tsv", gains)
    except PararankError as exc:
        raise PararankError(f"stage analyze failed: {exc}") from exc

    # counts vs the released corpus, exact
    for name, expected in dataset_mod.RELEASED_COUNTS.items():
        for key, value in expected.items():
            found = counts.get(name, {}).get(key, 0)
            status = "PASS" if found == value else "FAIL"
            lines.append(f"{status}\tcounts[{name}][{key}]\texpected {value}\tcomputed {found}")
    for check in targets.check_mean_sent_int(means):
        lines.append(check.line())
    for check in targets.check_mean_abs_diff({s: st.mean_abs_diff for s, st in stats_report.per_snr.items()}):
        lines.append(check.line())
    for check in targets.check_oracle_gain(gains):
        lines.append(check.line())

    try:
        stage("features")
        lm_source, external_ppl = _ppl_source(args.lm)
        jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
        vectors = _extract_all(records, Path(args.dataset), lm_source, lexicon, jobs)
        features_mod.write_feature_table(out / "features.csv", vectors)
    except (PararankError, OSError) as exc:
        raise PararankError(f"stage features failed: {exc}") from exc

    try:
        stage("regress")
        snrs = sorted({r.snr_db for r in records}, reverse=True)
        with open(out / "regression.tsv", "w", encoding="utf-8") as handle:
            for snr in snrs:
                fit = _fit_sent_int(records, vectors, snr)
                handle.write(f"# response sent_int @ SNR {snr:+g}\n")
                _print_fit(fit, handle)
                for feature in features_mod.FEATURE_NAMES:
                    beta, p = fit.coefficient(feature)
                    lines.append(f"INFO\tsent_int@snr{snr:+g} beta[{feature}]\t{beta:+.4f} (p={p:.3e})")
                gain_fit, _ = _fit_gain(records, pairs, vectors, snr, "all", True)
                handle.write(f"# response sent_int_gain @ SNR {snr:+g}\n")
                _print_fit(gain_fit, handle)
    except PararankError as exc:
        raise PararankError(f"stage regress failed: {exc}") from exc

    try:
        stage("eval-rank")
        seeds = _parse_seeds(args.seeds)
        tables = _eval_tables(pairs, vectors, snrs, ranker.TABLE_SUBSETS, seeds, args.c, False)
        report.write_eval_table_tsv(out / "eval_table.tsv", tables)
        report.save_accuracy_png(tables, out / "accuracy.png")
    except PararankError as exc:
        raise PararankError(f"stage eval-rank failed: {exc}") from exc

    table_means = {
        row: {snr: tables[snr][row].mean for snr in tables if row in tables[snr]}
        for row in ranker.TABLE_ROW_ORDER
    }
    for check in targets.check_table_accuracy(table_means, external_ppl):
        lines.append(check.line())
    full = table_means.get("phLen+ppl+STOI", {}).get(-5.0)
    uniform = table_means.get("uniform", {}).get(-5.0)
    if full is not None and uniform is not None:
        ok = full >= targets.FULL_MODEL_SNR_M5_MIN and full - uniform >= targets.FULL_MODEL_VS_UNIFORM_MIN_GAP
        status = ("PASS" if ok else "FAIL") if external_ppl else "INFO"
        lines.append(
            f"{status}\tfull model @ snr-5 floor\texpected >= {targets.FULL_MODEL_SNR_M5_MIN:g} and"
            f" uniform+{targets.FULL_MODEL_VS_UNIFORM_MIN_GAP:g}\tcomputed {full:.1f} vs uniform {uniform:.1f}"
        )

    report_path = out / "report.tsv"
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_manifest(
        build_manifest(
            "reproduce",
            {"dataset": args.dataset, "lm": args.lm, "lexicon": str(_lexicon_path(args))},
            [Path(args.dataset) / "records.tsv", Path(args.dataset) / "annotations.tsv", args.lm, _lexicon_path(args)],
            seeds=list(_parse_seeds(args.seeds)),
        ),
        out,
    )
    n_fail = sum(1 for line in lines if line.startswith("FAIL"))
    for line in lines:
        print(line)
    print(f"wrote {out}/ ({'all gated targets met' if n_fail == 0 else f'{n_fail} gated targets failed'})")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="para-rank",
        description="Sentence intelligibility in noise: scoring, features, and paraphrase ranking.",
    )
    parser.add_argument("--version", action="version", version=f"para-rank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_lexicon(p):
        p.add_argument("--lexicon", help="CMU-format dictionary (default: $PARARANK_LEXICON or the packaged one)")

    p = sub.add_parser("g2p", help="convert text to phonemes")
    add_lexicon(p)
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_g2p)

    p = sub.add_parser("mix", help="mix speech with noise at a target SNR")
    p.add_argument("--speech", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--snr", type=float, required=True, help="target SNR in dB")
    p.add_argument("--offset", default="0", help="noise segment start sample, or 'random'")
    p.add_argument("--seed", type=int, help="seed for --offset random")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("stoi", help="intelligibility score of a degraded signal")
    p.add_argument("--clean", required=True)
    p.add_argument("--degraded", required=True)
    p.set_defaults(func=cmd_stoi)

    p = sub.add_parser("lm-train", help="train an n-gram language model")
    p.add_argument("--corpus", required=True, help="text file, one sentence per line")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--discount", type=float, help="override the estimated discount")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("ppl", help="perplexity of a text under a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_ppl)

    p = sub.add_parser("features", help="extract phLen/ppl/STOI per utterance")
    add_lexicon(p)
    p.add_argument("--dataset", required=True, help="canonical dataset directory")
    p.add_argument("--lm", required=True, help="model file, or .csv with external perplexities")
    p.add_argument("--jobs", type=int, default=0, help="worker threads (default: all cores)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("regress", help="coefficient table for intelligibility models")
    add_lexicon(p)
    p.add_argument("--features", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--response", choices=("sent_int", "gain"), required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--subset-pairs", choices=("all", "both", "either"), default="all")
    p.add_argument("--no-scale-diffs", action="store_true", help="regress on raw difference features")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("analyze", help="summary statistics, histogram data and figure")
    add_lexicon(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--expect-released-counts", action="store_true", help="fail unless pair counts match the released corpus")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train-rank", help="train a pairwise ranking model")
    add_lexicon(p)
    p.add_argument("--features", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--subset", default="phLen,ppl,STOI")
    p.add_argument("--subset-pairs", choices=("all", "both", "either"), default="all")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--select-c", action="store_true", help="pick C by cross-validation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_rank)

    p = sub.add_parser("eval-rank", help="repeated-split ranking evaluation")
    add_lexicon(p)
    p.add_argument("--features", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--snr", type=float)
    p.add_argument("--table4", action="store_true", help="full ablation table over every SNR")
    p.add_argument("--subset", default="phLen,ppl,STOI")
    p.add_argument("--subset-pairs", choices=("all", "both", "either"), default="all")
    p.add_argument("--seeds", help="comma-separated split seeds (default 0..9)")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--select-c", action="store_true")
    p.add_argument("--out", help="also write eval_table.tsv and accuracy.png here")
    p.set_defaults(func=cmd_eval_rank)

    p = sub.add_parser("reproduce", help="one-shot pipeline with pass/fail report vs reference targets")
    add_lexicon(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--lm", required=True, help="model file, or .csv with external perplexities")
    p.add_argument("--seeds", help="comma-separated split seeds (default 0..9)")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PararankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
