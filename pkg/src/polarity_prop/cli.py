"""Command-line pipeline: extract, build-dataset, train, evaluate, score, inspect.

Every subcommand is deterministic given its ``--seed`` and re-runnable:
outputs are written to a temporary path and renamed into place on success.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import asdict
from pathlib import Path

import yaml

from . import dataset as ds
from . import evaluate as ev
from . import events as evx
from . import model as mdl
from . import training as tr
from .errors import PolarityPropError
from .lexicon import load_lexicon

log = logging.getLogger("polarity_prop")


def _configure_logging(verbose: int) -> None:
    level_name = os.environ.get("POLARITY_PROP_LOG", "").upper()
    if level_name:
        level = getattr(logging, level_name, logging.INFO)
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _atomic_path(path: str | Path):
    """Context: yields a temp path, renames onto the target on success."""
    class _Atomic:
        def __init__(self, target: Path) -> None:
            self.target = Path(target)
            self.tmp = self.target.with_name(self.target.name + ".tmp")

        def __enter__(self) -> Path:
            return self.tmp

        def __exit__(self, exc_type, exc, tb) -> None:
            if exc_type is None:
                os.replace(self.tmp, self.target)
            else:
                self.tmp.unlink(missing_ok=True)

    return _Atomic(path)


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

def cmd_extract(args: argparse.Namespace) -> int:
    table = evx.load_connective_table(args.connectives)
    if args.last_clause:
        return _extract_last_clauses(args)
    stream = evx.stream_corpus(args.corpus, table, args.predicate_position)
    counts: Counter[str] = Counter()

    def counted():
        for pair in stream:
            counts[pair.relation.value] += 1
            yield pair

    with _atomic_path(args.out) as tmp:
        n = evx.write_pairs(counted(), tmp)
    print(f"lines read: {stream.total_lines} (skipped {stream.skipped_lines} undecodable)")
    for relation in ("cause", "concession"):
        print(f"{relation} pairs: {counts[relation]}")
    print(f"wrote {n} pairs to {args.out}")
    return 0


def _extract_last_clauses(args: argparse.Namespace) -> int:
    """Labeled-event mode: corpus lines are ``score<TAB>sentence``; the last
    clause of each sentence becomes one labeled event."""
    written = skipped = 0
    with open(args.corpus, encoding="utf-8") as fh, _atomic_path(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as out:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t", 1)
                if len(parts) != 2 or parts[0].strip() not in ("+1", "-1"):
                    raise ds.MalformedRecordError(
                        f"{args.corpus}:{lineno}: expected (+1|-1)<TAB>sentence"
                    )
                score = 1 if parts[0].strip() == "+1" else -1
                event = evx.last_clause(parts[1].split(), args.predicate_position)
                if event is None:
                    skipped += 1
                    continue
                record = ds.labeled_event_to_record(ds.LabeledEvent(event, score))
                out.write(json.dumps(record, ensure_ascii=False) + "\n")
                written += 1
    print(f"wrote {written} labeled events to {args.out} (skipped {skipped} empty)")
    return 0


# ---------------------------------------------------------------------------
# build-dataset
# ---------------------------------------------------------------------------

def cmd_build(args: argparse.Namespace) -> int:
    lexicon = load_lexicon(args.lexicon, args.negations)
    balance = ds.BalanceConfig(max_al=args.max_al, multiplier=args.multiplier)
    bundle = ds.build_bundle(evx.read_pairs(args.pairs), lexicon, balance, args.seed)
    if args.labeled:
        labeled = ds.load_labeled_events(args.labeled)
        if args.sup_subset is not None:
            labeled = _subset_per_class(labeled, args.sup_subset, args.seed)
        bundle = bundle.with_supervised(labeled)
    with _atomic_path(args.out) as tmp:
        ds.save_bundle(bundle, tmp)
    pos, neg = bundle.al_sign_counts()
    print(f"AL pairs: {len(bundle.al)} (positive latter {pos}, negative latter {neg})")
    print(f"CA pairs: {len(bundle.ca)}")
    print(f"CO pairs: {len(bundle.co)}")
    print(f"supervised events: {len(bundle.supervised)}")
    print(f"wrote bundle to {args.out}")
    return 0


def _subset_per_class(labeled: list[ds.LabeledEvent], n: int, seed: int) -> list[ds.LabeledEvent]:
    """Uniform per-class subsample totalling ``n`` (n//2 per sign)."""
    import numpy as np

    rng = np.random.default_rng(seed)
    out: list[ds.LabeledEvent] = []
    for sign in (1, -1):
        group = [e for e in labeled if e.score == sign]
        k = min(n // 2, len(group))
        keep = np.sort(rng.choice(len(group), size=k, replace=False))
        out.extend(group[i] for i in keep)
    return out


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

_CONFIG_FLAGS = {
    "lambda_al": "lambda_al", "lambda_ca": "lambda_ca", "lambda_co": "lambda_co",
    "mu": "mu", "lr": "learning_rate", "momentum": "momentum",
    "batch_size": "batch_size", "epochs": "epochs", "seed": "rng_seed",
    "objective": "objective",
}


def _merge_train_config(args: argparse.Namespace) -> tr.TrainConfig:
    values = asdict(tr.TrainConfig())
    values["objective"] = tr.TrainConfig().objective.value
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise PolarityPropError(f"{args.config}: config must be a key-value mapping")
        unknown = set(loaded) - set(tr.TrainConfig.field_names())
        if unknown:
            raise PolarityPropError(f"{args.config}: unknown config keys {sorted(unknown)}")
        values.update(loaded)
    for flag, field_name in _CONFIG_FLAGS.items():
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            values[field_name] = flag_value
    return tr.TrainConfig(**values)


def _bundle_events(bundle: ds.DatasetBundle):
    for pair, _, _ in bundle.al:
        yield pair.former
        yield pair.latter
    for pair in bundle.ca + bundle.co:
        yield pair.former
        yield pair.latter
    for labeled in bundle.supervised:
        yield labeled.event


def cmd_train(args: argparse.Namespace) -> int:
    config = _merge_train_config(args)
    bundle = ds.load_bundle(args.bundle)
    dev = ds.load_labeled_events(args.dev)
    vocab = mdl.build_vocabulary(_bundle_events(bundle), args.min_freq, args.vocab_size)
    model = mdl.init_model(vocab, dim=args.dim, encoder_kind=args.encoder,
                           rng_seed=config.rng_seed, init_scale=args.init_scale)
    if args.embeddings:
        n = mdl.apply_pretrained_embeddings(model, mdl.load_text_embeddings(args.embeddings))
        log.info("initialized %d embedding rows from %s", n, args.embeddings)
    best, history = tr.train(model, bundle, dev, config)
    with _atomic_path(args.out) as tmp:
        mdl.save_checkpoint(best, tmp)
    if args.log:
        with _atomic_path(args.log) as tmp:
            with open(tmp, "w", encoding="utf-8") as fh:
                for record in history:
                    fh.write(json.dumps(record) + "\n")
    best_epoch = max(history, key=lambda r: (r["dev_accuracy"], -r["epoch"]))
    print(f"trained {config.epochs} epochs, objective {config.objective.value}")
    print(f"best dev accuracy {best_epoch['dev_accuracy']:.4f} at epoch {best_epoch['epoch']}")
    print(f"wrote checkpoint to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# evaluate / score / inspect
# ---------------------------------------------------------------------------

def cmd_eval(args: argparse.Namespace) -> int:
    test = ds.load_labeled_events(args.test)
    if args.baseline == "random":
        result = ev.baseline_random(test, args.seed)
        print("baseline: random")
    elif args.baseline == "random+seed":
        if not args.lexicon:
            raise PolarityPropError("--baseline random+seed requires --lexicon")
        lexicon = load_lexicon(args.lexicon, args.negations)
        result = ev.baseline_random_seed(test, lexicon, args.seed)
        print("baseline: random+seed")
    else:
        if not args.checkpoint:
            raise PolarityPropError("--checkpoint is required unless --baseline is set")
        model = mdl.load_checkpoint(args.checkpoint)
        result = ev.evaluate(model, test)
        if args.dump:
            with _atomic_path(args.dump) as tmp:
                ev.dump_scores(model, test, tmp)
    print(result.format())
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    model = mdl.load_checkpoint(args.checkpoint)
    for raw in sys.stdin:
        line = raw.rstrip("\n")
        tokens = line.split() or [mdl.UNK_TOKEN]
        idx = len(tokens) - 1 if args.predicate_position == "last" else 0
        score = mdl.polarity(model, evx.Event(tuple(tokens), idx))
        sys.stdout.write(f"{score:.6f}\t{line}\n")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    if args.kind == "checkpoint":
        model = mdl.load_checkpoint(args.path)
        n_params = sum(a.size for a in model.params().values())
        print(f"encoder: {model.encoder_kind}")
        print(f"vocabulary size: {len(model.vocab)} (min_frequency {model.vocab.min_frequency})")
        print(f"embedding dim: {model.dim}, encoded dim: {model.encoded_dim}")
        print(f"parameters: {n_params}")
        print(f"bias: {model.linear_b[0]!r}")
        if args.export_text:
            with _atomic_path(args.export_text) as tmp:
                mdl.export_text(model, tmp)
            print(f"exported text dump to {args.export_text}")
    elif args.kind == "bundle":
        bundle = ds.load_bundle(args.path)
        pos, neg = bundle.al_sign_counts()
        print(f"AL pairs: {len(bundle.al)} (positive latter {pos}, negative latter {neg})")
        print(f"CA pairs: {len(bundle.ca)}")
        print(f"CO pairs: {len(bundle.co)}")
        print(f"supervised events: {len(bundle.supervised)}")
    elif args.kind == "pairs":
        counts = Counter(pair.relation.value for pair in evx.read_pairs(args.path))
        for relation in ("cause", "concession"):
            print(f"{relation} pairs: {counts[relation]}")
    else:  # log
        records = []
        with open(args.path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        if not records:
            print("empty log")
            return 0
        best = max(records, key=lambda r: (r["dev_accuracy"], -r["epoch"]))
        last = records[-1]
        print(f"epochs: {len(records)}")
        print(f"final total loss: {last['total']:.6f}")
        print(f"best dev accuracy: {best['dev_accuracy']:.4f} at epoch {best['epoch']}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarity-prop",
        description="Learn event polarity scores by propagating a seed lexicon "
                    "through cause/concession clause pairs.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase log verbosity (or set POLARITY_PROP_LOG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract discourse-tagged event pairs from raw text")
    p.add_argument("--corpus", required=True, help="one sentence per line, UTF-8")
    p.add_argument("--connectives", required=True, help="tab-separated connective table")
    p.add_argument("--out", required=True, help="output pairs (JSON Lines)")
    p.add_argument("--predicate-position", choices=("last", "first"), default="last")
    p.add_argument("--last-clause", action="store_true",
                   help="labeled-event mode: lines are (+1|-1)<TAB>sentence; "
                        "emit the last clause of each as a labeled event")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build-dataset", help="classify pairs into AL/CA/CO and balance them")
    p.add_argument("--pairs", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--negations", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--max-al", type=int, default=None, dest="max_al")
    p.add_argument("--multiplier", type=int, default=5)
    p.add_argument("--labeled", default=None, help="labeled events to include as 'sup'")
    p.add_argument("--sup-subset", type=int, default=None, dest="sup_subset",
                   help="keep only N labeled events (N/2 per sign, seeded)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="train the polarity model on a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--dev", required=True, help="labeled events for snapshot selection")
    p.add_argument("--out", required=True, help="output checkpoint")
    p.add_argument("--log", default=None, help="per-epoch JSON Lines log")
    p.add_argument("--config", default=None, help="YAML file with train-config keys")
    p.add_argument("--objective", choices=[o.value for o in tr.Objective], default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--lambda-al", type=float, default=None, dest="lambda_al")
    p.add_argument("--lambda-ca", type=float, default=None, dest="lambda_ca")
    p.add_argument("--lambda-co", type=float, default=None, dest="lambda_co")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--encoder", choices=(mdl.MEAN, mdl.RECURRENT), default=mdl.MEAN)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--init-scale", type=float, default=0.1, dest="init_scale",
                   help="half-width of the uniform parameter init")
    p.add_argument("--min-freq", type=int, default=1, dest="min_freq")
    p.add_argument("--vocab-size", type=int, default=100_000, dest="vocab_size")
    p.add_argument("--embeddings", default=None,
                   help="pretrained embeddings, text format: token v1 ... vD")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="accuracy of a checkpoint or baseline on a test set")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--test", required=True)
    p.add_argument("--baseline", choices=("none", "random", "random+seed"), default="none")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--negations", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", default=None, help="per-event score dump (JSON Lines)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("score", help="score whitespace-tokenized events from stdin")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--predicate-position", choices=("last", "first"), default="last")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("inspect", help="summarize an artifact file")
    p.add_argument("kind", choices=("checkpoint", "bundle", "pairs", "log"))
    p.add_argument("path")
    p.add_argument("--export-text", default=None, dest="export_text",
                   help="checkpoint only: dump one parameter per line")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except (PolarityPropError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
