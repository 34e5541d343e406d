"""Command-line pipeline.

Every subcommand reads its options from ``--config`` (an INI file with
one section per subcommand and an optional ``[common]`` section) and
from flags; flags win. Outputs go to ``<output_root>/<subcommand>-<hash>``
where the hash covers the resolved options, so equal configs land in
the same directory.

Exit codes: 0 success, 1 internal failure, 2 user or config error.
Log verbosity comes from the EMOMOD_LOG_LEVEL environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import corpus_io, evaluation, lexicons, lexmodel, linear, scope
from .corpus_io import CorpusError, EMOTION_NAMES
from .lexicons import KINDS, LexiconError, ModifierKind
from .linear import TrainingError

log = logging.getLogger("emomod")


class ConfigError(ValueError):
    pass


def _int_range(text: str) -> list[int]:
    """``1..12`` or ``1,2,5``."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _path(text):
    return Path(text)


def _str_list(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


# name: (type, default, help); a default of None means optional
COMMON = {
    "output_root": (_path, "runs", "directory under which run directories are created"),
}
COMMANDS = {
    "self-label": {
        "input": (_path, None, "raw JSON-lines corpus with id and text"),
        "hashtags": (_path, None, "hashtag<TAB>emotion map (default: shipped list)"),
    },
    "split": {
        "corpus": (_path, None, "labelled corpus (.jsonl or .conllu)"),
        "seed": (int, 42, "random seed"),
        "train_ratio": (float, 2 / 3, "fraction of documents in the train split"),
        "balanced_per_class": (int, 0, "documents per emotion in the balanced split"),
        "emotion_lexicon": (_path, None, "NRC-style emotion lexicon for balanced-split filtering"),
        "cues": (_path, None, "directory with negation/amplifier/downtoner.txt (default: shipped)"),
    },
    "filter-cues": {
        "negation": (_path, None, "negation candidate list"),
        "amplifier": (_path, None, "amplifier candidate list"),
        "downtoner": (_path, None, "downtoner candidate list"),
        "samples": (_path, None, "usage samples term<TAB>doc_id<TAB>0|1"),
        "threshold": (float, 0.5, "keep a candidate iff its modifier ratio exceeds this"),
    },
    "detect-scope": {
        "corpus": (_path, None, "corpus (.jsonl or .conllu)"),
        "method": (str, "next_n", "next_n, dep_tree or classifier"),
        "n": (int, 2, "scope width for next_n"),
        "cues": (_path, None, "cue lexicon directory (default: shipped)"),
        "emotion_lexicon": (_path, None, "emotion lexicon (classifier method)"),
        "models": (_path, None, "directory of scope models from train-scope-clf"),
        "sweep_n": (_int_range, None, "evaluate next_n for each n, e.g. 1..12 (needs gold)"),
        "gold": (_path, None, "gold scope pairs for --sweep-n"),
    },
    "eval-scope": {
        "gold": (_path, None, "gold scope pairs TSV"),
        "predictions": (_str_list, None, "predicted scope files, optionally name=path, comma separated"),
    },
    "train-scope-clf": {
        "corpus": (_path, None, "parsed corpus (.conllu)"),
        "gold": (_path, None, "gold scope pairs TSV"),
        "cues": (_path, None, "cue lexicon directory (default: shipped)"),
        "lambda": (float, 1e-4, "L2 regularization strength"),
        "epochs": (int, 20, "training epochs"),
        "seed": (int, 42, "shuffling seed"),
    },
    "train-bow": {
        "corpus": (_path, None, "labelled corpus (.jsonl or .conllu)"),
        "manifest": (_path, None, "split manifest; trains on train_repr when given"),
        "method": (str, "next_n", "scope method for the modifier-aware model"),
        "n": (int, 2, "scope width for next_n"),
        "cues": (_path, None, "cue lexicon directory (default: shipped)"),
        "emotion_lexicon": (_path, None, "emotion lexicon (classifier method)"),
        "models": (_path, None, "scope model directory (classifier method)"),
        "lambda": (float, 1e-4, "L2 regularization strength"),
        "epochs": (int, 20, "training epochs"),
        "seed": (int, 42, "shuffling seed"),
    },
    "eval-bow": {
        "corpus": (_path, None, "labelled test corpus (.jsonl or .conllu)"),
        "manifest": (_path, None, "split manifest; evaluates test_repr when given"),
        "bow_models": (_path, None, "run directory of train-bow"),
        "method": (str, "next_n", "scope method (must match training)"),
        "n": (int, 2, "scope width for next_n"),
        "cues": (_path, None, "cue lexicon directory (default: shipped)"),
        "emotion_lexicon": (_path, None, "emotion lexicon (classifier method)"),
        "models": (_path, None, "scope model directory (classifier method)"),
    },
    "train-lexmodel": {
        "corpus": (_path, None, "labelled corpus (.jsonl or .conllu)"),
        "manifest": (_path, None, "split manifest; trains on train_balanced when given"),
        "emotion_lexicon": (_path, None, "NRC-style emotion lexicon"),
        "method": (str, "next_n", "scope method"),
        "n": (int, 2, "scope width for next_n"),
        "cues": (_path, None, "cue lexicon directory (default: shipped)"),
        "models": (_path, None, "scope model directory (classifier method)"),
        "restarts": (int, 8, "random restarts per slice"),
        "patience": (int, 500, "stop a restart after this many rejected epochs in a row"),
        "max_epochs": (int, 5000, "epoch cap per restart"),
        "seed": (int, 42, "random seed"),
    },
    "inspect": {
        "tensor": (_path, None, "tensor JSON from train-lexmodel"),
    },
}
REQUIRED = {
    "self-label": ["input"],
    "split": ["corpus"],
    "filter-cues": ["negation", "amplifier", "downtoner", "samples"],
    "detect-scope": ["corpus"],
    "eval-scope": ["gold", "predictions"],
    "train-scope-clf": ["corpus", "gold"],
    "train-bow": ["corpus"],
    "eval-bow": ["corpus", "bow_models"],
    "train-lexmodel": ["corpus", "emotion_lexicon"],
    "inspect": ["tensor"],
}
METHODS = ("next_n", "dep_tree", "classifier")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emomod", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name, help=f"run {name}")
        p.add_argument("--config", type=Path, help="INI config file; flags override it")
        for key, (_, default, text) in {**COMMON, **opts}.items():
            flag = "--" + key.replace("_", "-")
            shown = "" if default is None else f" (default: {default})"
            # defaults are applied after the config file, so flags stay None here
            p.add_argument(flag, dest=key, default=None, help=text + shown)
    return parser


def resolve(args) -> dict:
    """Defaults < config file < flags, converted and validated."""
    opts = {**COMMON, **COMMANDS[args.command]}
    from_file = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file not found: {args.config}")
        cp = configparser.ConfigParser()
        cp.read(args.config, encoding="utf-8")
        for section in ("common", args.command):
            if cp.has_section(section):
                from_file.update({k.replace("-", "_"): v for k, v in cp.items(section)})
        unknown = set(from_file) - set(opts)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {', '.join(sorted(unknown))}")
    cfg = {}
    for key, (conv, default, _) in opts.items():
        raw = getattr(args, key, None)
        if raw is None:
            raw = from_file.get(key)
        if raw is None:
            cfg[key] = default if not isinstance(default, str) or conv is str else conv(default)
            continue
        try:
            cfg[key] = conv(raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    validate(args.command, cfg)
    return cfg


def validate(command, cfg):
    for key in REQUIRED[command]:
        if cfg.get(key) is None:
            raise ConfigError(f"{command}: missing required option --{key.replace('_', '-')}")
    for key, (conv, _, _) in COMMANDS[command].items():
        if conv is _path and cfg.get(key) is not None and not cfg[key].exists():
            raise ConfigError(f"{key}: path does not exist: {cfg[key]}")
    if "method" in cfg and cfg["method"] not in METHODS:
        raise ConfigError(f"method must be one of {', '.join(METHODS)}")
    if "n" in cfg and cfg["n"] < 1:
        raise ConfigError("n must be >= 1")
    if "threshold" in cfg and not 0.0 <= cfg["threshold"] <= 1.0:
        raise ConfigError(f"threshold must lie in [0, 1], got {cfg['threshold']}")
    if "train_ratio" in cfg and not 0.0 < cfg["train_ratio"] < 1.0:
        raise ConfigError("train_ratio must lie in (0, 1)")
    for key in ("restarts", "patience", "max_epochs", "epochs"):
        if key in cfg and cfg[key] < 1:
            raise ConfigError(f"{key} must be >= 1")
    if cfg.get("sweep_n") is not None:
        if cfg.get("gold") is None:
            raise ConfigError("--sweep-n needs --gold")
        if not cfg["sweep_n"] or min(cfg["sweep_n"]) < 1:
            raise ConfigError("--sweep-n values must be >= 1")


def run_dir(command, cfg) -> Path:
    blob = json.dumps({k: str(v) for k, v in sorted(cfg.items())}, sort_keys=True)
    digest = hashlib.sha256(f"{command}\n{blob}".encode()).hexdigest()[:12]
    out = Path(cfg["output_root"]) / f"{command}-{digest}"
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump({"command": command, **{k: str(v) for k, v in sorted(cfg.items())}}, f, indent=1)
    return out


# ----------------------------------------------------------------------
# helpers shared by subcommands

def _scope_resources(cfg):
    cues = lexicons.load_cue_lexicon(cfg.get("cues"))
    emo = lexicons.load_emotion_lexicon(cfg["emotion_lexicon"]) if cfg.get("emotion_lexicon") else {}
    models = None
    if cfg.get("method") == "classifier":
        if cfg.get("models") is None or not emo:
            raise ConfigError("classifier method needs --models and --emotion-lexicon")
        models = {}
        for kind in KINDS:
            path = cfg["models"] / f"{kind.value}.json"
            if not path.exists():
                raise ConfigError(f"missing scope model: {path}")
            models[kind] = linear.load_model(path)
    return cues, emo, models


def _detect_all(docs, cfg, cues, emo, models):
    return [scope.detect(d, cfg["method"], cues, cfg["n"], models, emo) for d in docs]


def _load_split(cfg, key):
    docs = corpus_io.load_corpus(cfg["corpus"])
    if cfg.get("manifest") is not None:
        ids = corpus_io.read_manifest(cfg["manifest"]).get(key) or []
        if ids:
            docs = corpus_io.select(docs, ids)
    return docs


def _require_labels(docs):
    unlabeled = [d.id for d in docs if d.label is None]
    if unlabeled:
        raise CorpusError(f"{len(unlabeled)} unlabelled documents, e.g. {unlabeled[0]!r}")
    if not docs:
        raise CorpusError("empty corpus")


# ----------------------------------------------------------------------
# subcommands

def cmd_self_label(cfg, out):
    hashtags = (corpus_io.load_hashtag_map(cfg["hashtags"]) if cfg.get("hashtags")
                else corpus_io.load_hashtag_map(_shipped("hashtags.tsv")))
    kept = dropped = 0
    records = []
    with open(cfg["input"], encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                res = corpus_io.self_label(rec["text"], hashtags)
            except (KeyError, ValueError) as exc:
                raise CorpusError(f"bad record: {exc}", cfg["input"], lineno) from None
            if res is None:
                dropped += 1
                continue
            kept += 1
            records.append({"id": str(rec["id"]), "text": res[0], "label": res[1].label})
    corpus_io.write_jsonl(records, out / "labeled.jsonl")
    print(f"kept {kept}, dropped {dropped}")


def _shipped(name):
    from importlib import resources
    return resources.files("emomod.data").joinpath(name)


def cmd_split(cfg, out):
    docs = corpus_io.load_corpus(cfg["corpus"])
    emo = lexicons.load_emotion_lexicon(cfg["emotion_lexicon"]) if cfg.get("emotion_lexicon") else None
    cues = lexicons.load_cue_lexicon(cfg.get("cues")) if emo is not None or cfg.get("cues") else None
    split = corpus_io.split_corpus(docs, cfg["seed"], (cfg["train_ratio"], 1 - cfg["train_ratio"]),
                                   cfg["balanced_per_class"], emo, cues)
    corpus_io.write_manifest(split, out / "manifest.json")
    print(f"train_repr {len(split.train_repr)}, test_repr {len(split.test_repr)}, "
          f"train_balanced {len(split.train_balanced)}")


def cmd_filter_cues(cfg, out):
    samples = lexicons.read_usage_samples(cfg["samples"])
    candidates, trusted = [], []
    for kind in KINDS:
        terms, tr = lexicons.read_term_list(cfg[kind.value])
        candidates.extend((t, kind) for t in terms)
        trusted.extend(tr)
    lex = lexicons.filter_cues(candidates, samples, cfg["threshold"], trusted)
    for kind in KINDS:
        terms = [t for t, k in lex.items() if k is kind]
        lexicons.write_term_list(terms, out / f"{kind.value}.txt")
        print(f"{kind.value}: {len(terms)} terms")


def cmd_detect_scope(cfg, out):
    docs = corpus_io.load_corpus(cfg["corpus"])
    cues, emo, models = _scope_resources(cfg)
    if cfg.get("sweep_n"):
        gold = scope.read_gold_pairs(cfg["gold"])
        results = scope.sweep_next_n(docs, cues, gold, cfg["sweep_n"])
        lines = ["n\tall\t" + "\t".join(k.value for k in KINDS)]
        for n, (pooled, rep) in results.items():
            lines.append(f"{n}\t{evaluation.pct(pooled)}\t"
                         + "\t".join(str(evaluation.pct(f)) for f in rep.f1))
        (out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print("\n".join(lines))
        return
    labels = _detect_all(docs, cfg, cues, emo, models)
    scope.write_scopes({d.id: s for d, s in zip(docs, labels)}, out / "scopes.jsonl")
    print(f"{sum(len(s) for s in labels)} scoped tokens in {len(docs)} documents")


def cmd_eval_scope(cfg, out):
    gold = scope.read_gold_pairs(cfg["gold"])
    reports = {}
    for item in cfg["predictions"]:
        name, _, path = item.rpartition("=")
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"predictions: path does not exist: {path}")
        reports[name or path.stem] = scope.evaluate_scope(scope.read_scopes(path), gold)
    evaluation.write_json({k: r.to_json() for k, r in reports.items()}, out / "report.json")
    table = evaluation.render_side_by_side(reports, "modifier scope detection")
    (out / "table.txt").write_text(table + "\n", encoding="utf-8")
    print(table)


def cmd_train_scope_clf(cfg, out):
    docs = corpus_io.load_corpus(cfg["corpus"])
    cues = lexicons.load_cue_lexicon(cfg.get("cues"))
    gold = scope.read_gold_pairs(cfg["gold"])
    hyper = {"lambda": cfg["lambda"], "epochs": cfg["epochs"], "seed": cfg["seed"]}
    for kind in KINDS:
        pairs = [p for p in gold if p.kind is kind]
        model = scope.train_scope_classifier(pairs, docs, cues, kind, hyper)
        linear.save_model(model, out / f"{kind.value}.json")
        print(f"{kind.value}: {len(pairs)} pairs, {len(model.vocabulary)} features")


def cmd_train_bow(cfg, out):
    docs = _load_split(cfg, "train_repr")
    _require_labels(docs)
    cues, emo, models = _scope_resources(cfg)
    labels = _detect_all(docs, cfg, cues, emo, models)
    hyper = {"lambda": cfg["lambda"], "epochs": cfg["epochs"], "seed": cfg["seed"]}
    plain = linear.train_multiclass_ovr([(linear.featurize_bow(d), d.label) for d in docs], hyper)
    scoped = linear.train_multiclass_ovr(
        [(linear.featurize_bow(d, s), d.label) for d, s in zip(docs, labels)], hyper)
    linear.save_model(plain, out / "model_plain.json")
    linear.save_model(scoped, out / "model_scoped.json")
    print(f"trained on {len(docs)} documents")


def cmd_eval_bow(cfg, out):
    docs = _load_split(cfg, "test_repr")
    _require_labels(docs)
    cues, emo, models = _scope_resources(cfg)
    plain = linear.load_model(cfg["bow_models"] / "model_plain.json")
    scoped = linear.load_model(cfg["bow_models"] / "model_scoped.json")
    labels = _detect_all(docs, cfg, cues, emo, models)
    golds = [int(d.label) for d in docs]
    p_plain = [int(linear.predict_emotion(plain, linear.featurize_bow(d))) for d in docs]
    p_scoped = [int(linear.predict_emotion(scoped, linear.featurize_bow(d, s)))
                for d, s in zip(docs, labels)]
    results = {"all": (evaluation.report(evaluation.confusion(golds, p_plain)),
                       evaluation.report(evaluation.confusion(golds, p_scoped)))}
    for kind in KINDS:
        # on a modifier subset only that modifier's scopes are applied
        only = [scope.restrict(s, kind) for s in labels]
        p_kind = [int(linear.predict_emotion(scoped, linear.featurize_bow(d, s)))
                  for d, s in zip(docs, only)]
        results[kind.value] = (evaluation.subset_eval(docs, labels, golds, p_plain, kind),
                               evaluation.subset_eval(docs, labels, golds, p_kind, kind))
    blob, text = {}, []
    for name, (a, b) in results.items():
        delta = evaluation.compare_reports(a, b)
        blob[name] = {"without": a.to_json(), "with": b.to_json(), "delta": delta.to_json()}
        text.append(evaluation.render_side_by_side(
            {"without scopes": a, "with scopes": b}, f"{name} (size {a.size})"))
        text.append(delta.render())
        text.append("")
    evaluation.write_json(blob, out / "report.json")
    (out / "table.txt").write_text("\n".join(text), encoding="utf-8")
    print("\n".join(text))


def cmd_train_lexmodel(cfg, out):
    docs = _load_split(cfg, "train_balanced")
    _require_labels(docs)
    cues, emo, models = _scope_resources(cfg)
    labels = _detect_all(docs, cfg, cues, emo, models)
    train = [(lexmodel.count_vectors(d, s, emo), d.label) for d, s in zip(docs, labels)]
    tensor, trace = lexmodel.hill_climb(train, cfg["restarts"], cfg["patience"],
                                        cfg["max_epochs"], cfg["seed"])
    tensor.save(out / "tensor.json")
    lexmodel.write_trace(trace, out / "trace.tsv")
    print(f"training macro-F1 {tensor.meta['objective']:.4f} after {len(trace)} epochs")


def cmd_inspect(cfg, out):
    try:
        tensor = lexmodel.WeightTensor.load(cfg["tensor"])
    except (KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"not a tensor file: {cfg['tensor']} ({exc})") from None
    lexmodel.export_matrices(tensor, out / "heatmap.tsv")
    rep = lexmodel.inspect(tensor)
    evaluation.write_json(rep, out / "inspection.json")
    print(lexmodel.render_inspection(rep))


HANDLERS = {
    "self-label": cmd_self_label,
    "split": cmd_split,
    "filter-cues": cmd_filter_cues,
    "detect-scope": cmd_detect_scope,
    "eval-scope": cmd_eval_scope,
    "train-scope-clf": cmd_train_scope_clf,
    "train-bow": cmd_train_bow,
    "eval-bow": cmd_eval_bow,
    "train-lexmodel": cmd_train_lexmodel,
    "inspect": cmd_inspect,
}
USER_ERRORS = (ConfigError, CorpusError, LexiconError, TrainingError, FileNotFoundError)


def main(argv=None) -> int:
    level = os.environ.get("EMOMOD_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    try:
        log.setLevel(level)
    except ValueError:
        log.setLevel(logging.WARNING)
        log.warning("ignoring unknown EMOMOD_LOG_LEVEL %r", level)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        out = run_dir(args.command, cfg)
        HANDLERS[args.command](cfg, out)
        print(f"outputs: {out}")
        return 0
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
