"""Command-line entry point.

Subcommands: build-vocab, train, evaluate, predict, stats. Flags can be
preloaded from a flat key=value config file (--config); command-line
flags override it. Exit codes: 0 success, 1 usage error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import checkpoint as ckpt
from . import corpus_stats, datasets, embeddings, text_pipeline, trainer
from .errors import BotlstmError, DataError, InternalError, UsageError
from .metrics import BOT, HUMAN, LABEL_NAMES, report_json
from .nn_core import ModelConfig, init_params

log = logging.getLogger(__name__)

_CONFIG_TYPES = {
    "learning_rate": float,
    "momentum": float,
    "batch_size": int,
    "epochs": int,
    "dropout_start": float,
    "dropout_end": float,
    "seed": int,
    "max_seq_len": int,
    "hidden": int,
    "layers": int,
    "embed_dim": int,
    "granularity": str,
    "stopwords": bool,
    "rt_token": bool,
    "top_k": int,
    "synthetic": int,
    "glove": str,
    "accounts": str,
    "tweets": str,
    "corpus": str,
    "vocab": str,
    "checkpoint": str,
    "history": str,
    "output": str,
    "output_dir": str,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_model_flags(p):
    p.add_argument("--hidden", type=int, default=200,
                   help="recurrent units per direction (default 200)")
    p.add_argument("--layers", type=int, default=3,
                   help="stacked bidirectional layers (default 3)")
    p.add_argument("--embed-dim", dest="embed_dim", type=int, default=200,
                   help="word-vector width (default 200)")


def _add_training_flags(p):
    p.add_argument("--lr", dest="learning_rate", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--dropout-start", dest="dropout_start", type=float, default=0.5)
    p.add_argument("--dropout-end", dest="dropout_end", type=float, default=0.1)


def _add_common_flags(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-seq-len", dest="max_seq_len", type=int, default=64)
    p.add_argument("--granularity", choices=["per_tweet", "per_account"],
                   default="per_tweet",
                   help="sequence granularity for training/scoring")
    p.add_argument("--no-rt-token", dest="rt_token", action="store_false",
                   help="keep RT as a plain word instead of <RT>")
    p.add_argument("--output-dir", dest="output_dir", default=".")


def _add_data_flags(p, with_synthetic=True):
    p.add_argument("--accounts", help="accounts CSV (account_id,label)")
    p.add_argument("--tweets", help="tweets CSV (account_id,tweet_text)")
    if with_synthetic:
        p.add_argument("--synthetic", type=int, metavar="N",
                       help="use the built-in generator with N accounts per class")


def build_parser() -> _Parser:
    parser = _Parser(prog="botlstm",
                     description="Bidirectional-LSTM bot/human tweet classifier")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser)
    parser.subcommand_parsers = {}

    def add_parser(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        parser.subcommand_parsers[name] = p
        return p

    p = add_parser("build-vocab", help="build a vocabulary file")
    p.add_argument("--corpus", help="plain-text corpus, one tweet per line")
    p.add_argument("--glove", help="pretrained embedding text file")
    p.add_argument("--output", help="vocabulary file to write (default vocab.tsv)")
    _add_model_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_build_vocab)

    p = add_parser("train", help="train a model and write a checkpoint")
    _add_data_flags(p)
    p.add_argument("--glove", help="pretrained embedding text file")
    p.add_argument("--vocab", help="prebuilt vocabulary file (optional)")
    p.add_argument("--checkpoint", help="checkpoint to write (default model.ckpt)")
    p.add_argument("--history", help="history CSV to write (default history.csv)")
    _add_model_flags(p)
    _add_training_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=cmd_train)

    p = add_parser("evaluate", help="score a labeled test set")
    _add_data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--output", help="metrics JSON to write (default metrics.json)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = add_parser("predict", help="write per-account bot probabilities")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tweets", required=True)
    p.add_argument("--output", help="predictions CSV (default predictions.csv)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_predict)

    p = add_parser("stats", help="word-frequency tables per class")
    _add_data_flags(p, with_synthetic=False)
    p.add_argument("--top-k", dest="top_k", type=int, default=50)
    p.add_argument("--stopwords", action="store_true",
                   help="drop common English stopwords")
    _add_common_flags(p)
    p.set_defaults(func=cmd_stats)
    return parser


def _load_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {n} is not key=value")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_TYPES:
            raise UsageError(f"{path}: unknown config key {key!r} on line {n}")
        typ = _CONFIG_TYPES[key]
        try:
            if typ is bool:
                if raw.lower() not in ("true", "false"):
                    raise ValueError(raw)
                values[key] = raw.lower() == "true"
            else:
                values[key] = typ(raw)
        except ValueError as exc:
            raise UsageError(
                f"{path}: bad value for {key!r} on line {n}: {raw!r}"
            ) from exc
    return values


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    scan = _Parser(add_help=False)
    scan.add_argument("--config")
    pre, _ = scan.parse_known_args(argv)
    if pre.config:
        # subcommands parse into a fresh namespace, so defaults loaded from
        # the config file must be installed on every subparser as well
        defaults = _load_config_file(pre.config)
        parser.set_defaults(**defaults)
        for sub in parser.subcommand_parsers.values():
            sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required (see --help)")
    return args


@dataclass
class RunConfig:
    """One command's resolved settings (defaults mirror the trainer's)."""

    command: str
    seed: int = 0
    max_seq_len: int = 64
    granularity: str = "per_tweet"
    rt_token: bool = True
    output_dir: str = "."
    hidden: int = 200
    layers: int = 3
    embed_dim: int = 200
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 30
    dropout_start: float = 0.5
    dropout_end: float = 0.1
    accounts: str | None = None
    tweets: str | None = None
    synthetic: int | None = None
    glove: str | None = None
    vocab: str | None = None
    corpus: str | None = None
    checkpoint: str | None = None
    history: str | None = None
    output: str | None = None
    top_k: int = 50
    stopwords: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        fields = {k: v for k, v in vars(args).items() if k in cls.__dataclass_fields__}
        return cls(**fields)

    def training(self) -> trainer.TrainingConfig:
        try:
            return trainer.TrainingConfig(
                learning_rate=self.learning_rate,
                momentum=self.momentum,
                batch_size=self.batch_size,
                epochs=self.epochs,
                dropout_start=self.dropout_start,
                dropout_end=self.dropout_end,
                seed=self.seed,
                max_seq_len=self.max_seq_len,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def out_path(self, explicit: str | None, default_name: str) -> Path:
        if explicit:
            return Path(explicit)
        out = Path(self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out / default_name


def _read_corpus_lines(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}", module="cli") from exc


def cmd_build_vocab(cfg: RunConfig) -> int:
    if not cfg.corpus or not cfg.glove:
        raise UsageError("build-vocab requires --corpus and --glove")
    tweets = _read_corpus_lines(cfg.corpus)
    tokenized = [text_pipeline.tokenize(t, map_rt=cfg.rt_token) for t in tweets]
    words, _ = embeddings.load_glove(cfg.glove, cfg.embed_dim)
    vocab = text_pipeline.build_vocabulary(tokenized, set(words))
    if len(vocab) == len(text_pipeline.RESERVED_TOKENS):
        print("warning: corpus/embedding intersection is empty; "
              "vocabulary holds only the reserved tokens", file=sys.stderr)
    out = cfg.out_path(cfg.output, "vocab.tsv")
    vocab.save(out)
    total = 0
    oov = 0
    for tokens in tokenized:
        for token_id in text_pipeline.encode(tokens, vocab):
            total += 1
            oov += token_id == text_pipeline.OOV_ID
    rate = oov / total if total else 0.0
    print(f"corpus tokens: {total}")
    print(f"vocabulary size: {len(vocab)}")
    print(f"oov rate: {rate:.6f}")
    print(f"wrote {out}")
    return 0


def _load_labeled_accounts(cfg: RunConfig):
    """Accounts plus (vocab, table) when the synthetic generator is used."""
    if cfg.synthetic is not None:
        accounts, vocab, table = datasets.synthetic(
            seed=cfg.seed, n_per_class=cfg.synthetic, embed_dim=cfg.embed_dim
        )
        return accounts, vocab, table
    if not cfg.accounts or not cfg.tweets:
        raise UsageError(
            "need either --synthetic N or both --accounts and --tweets"
        )
    return datasets.load_dataset(cfg.accounts, cfg.tweets), None, None


def cmd_train(cfg: RunConfig) -> int:
    accounts, vocab, table = _load_labeled_accounts(cfg)
    if table is None:
        if not cfg.glove:
            raise UsageError("train requires --glove when using CSV inputs")
        words, matrix = embeddings.load_glove(cfg.glove, cfg.embed_dim)
        if cfg.vocab:
            vocab = text_pipeline.Vocabulary.load(cfg.vocab)
        else:
            corpus = (
                text_pipeline.tokenize(tw, map_rt=cfg.rt_token)
                for acct in accounts
                for tw in acct.tweets
            )
            vocab = text_pipeline.build_vocabulary(corpus, set(words))
        table = embeddings.build_table(vocab, words, matrix, rng_seed=cfg.seed)

    examples, dropped = datasets.make_examples(
        accounts, vocab, mode=cfg.granularity,
        max_seq_len=cfg.max_seq_len, map_rt=cfg.rt_token,
    )
    if dropped:
        log.info("dropped %d empty sequence(s)", dropped)
    try:
        model_config = ModelConfig(
            vocab_size=len(vocab), embed_dim=table.dim,
            hidden=cfg.hidden, layers=cfg.layers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    model = init_params(model_config, rng_seed=cfg.seed, embedding=table)
    model, history = trainer.train(model, examples, cfg.training())

    ckpt_path = cfg.out_path(cfg.checkpoint, "model.ckpt")
    ckpt.save_checkpoint(ckpt_path, model, vocab)
    history_path = cfg.out_path(cfg.history, "history.csv")
    history.to_csv(history_path)
    last = history.epochs[-1]
    print(f"trained {len(examples)} sequences for {len(history.epochs)} epochs")
    print(f"final train loss {last.loss:.6f}, accuracy {last.accuracy:.4f}")
    print(f"wrote {ckpt_path} and {history_path}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    model, vocab = ckpt.load_checkpoint(cfg.checkpoint)
    accounts, _, _ = _load_labeled_accounts(cfg)
    examples, dropped = datasets.make_examples(
        accounts, vocab, mode=cfg.granularity,
        max_seq_len=cfg.max_seq_len, map_rt=cfg.rt_token,
    )
    if dropped:
        log.info("dropped %d empty sequence(s)", dropped)
    counts, report = trainer.evaluate(model, examples)
    payload = report_json(counts, report)
    out = cfg.out_path(cfg.output, "metrics.json")
    out.write_text(payload, encoding="utf-8")
    print(payload, end="")
    print(f"wrote {out}")
    return 0


def _group_tweets(path: str) -> dict[str, list[str]]:
    groups: dict[str, list[str]] = {}
    for _, (account_id, text) in datasets._read_rows(
        path, datasets.TWEETS_HEADER, module="cli"
    ):
        groups.setdefault(account_id, []).append(text)
    return groups


def cmd_predict(cfg: RunConfig) -> int:
    model, vocab = ckpt.load_checkpoint(cfg.checkpoint)
    groups = _group_tweets(cfg.tweets)
    out = cfg.out_path(cfg.output, "predictions.csv")
    rows = []
    for account_id, tweets in groups.items():
        acct = datasets.Account(account_id=account_id, label=HUMAN, tweets=tweets)
        examples, _ = datasets.make_examples(
            [acct], vocab, mode=cfg.granularity,
            max_seq_len=cfg.max_seq_len, map_rt=cfg.rt_token,
        )
        if not examples:
            rows.append((account_id, 0.5, "empty_account"))
            continue
        scored = trainer.account_probabilities(model, examples)
        rows.append((account_id, scored[account_id][1], ""))
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("account_id,p_bot,predicted_label,flag\n")
        for account_id, p_bot, flag in rows:
            label = LABEL_NAMES[BOT if p_bot >= 0.5 else HUMAN]
            fh.write(f"{account_id},{p_bot:.6f},{label},{flag}\n")
    print(f"wrote {out} ({len(rows)} accounts)")
    return 0


def cmd_stats(cfg: RunConfig) -> int:
    if not cfg.accounts or not cfg.tweets:
        raise UsageError("stats requires --accounts and --tweets")
    accounts = datasets.load_dataset(cfg.accounts, cfg.tweets)
    humans = [a for a in accounts if a.label == HUMAN]
    bots = [a for a in accounts if a.label == BOT]
    if not humans or not bots:
        raise DataError("stats needs at least one account of each class",
                        module="cli")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = {}
    for name, group in (("human", humans), ("bot", bots)):
        table = corpus_stats.token_frequencies(
            group, top_k=cfg.top_k,
            drop_stopwords=cfg.stopwords, map_rt=cfg.rt_token,
        )
        path = out_dir / f"{name}_frequencies.csv"
        table.to_csv(path)
        tables[name] = table
        print(f"wrote {path} ({table.total_retained} retained tokens)")
    report = corpus_stats.compare_tables(tables["human"], tables["bot"], cfg.top_k)
    payload = {"a": "human", "b": "bot", **report.as_dict()}
    report_path = out_dir / "divergence.json"
    report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {report_path}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv if argv is not None else sys.argv[1:])
        cfg = RunConfig.from_args(args)
        return args.func(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except InternalError as exc:
        print(f"{exc.module}: {exc}", file=sys.stderr)
        return 3
    except BotlstmError as exc:
        print(f"{exc.module}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
