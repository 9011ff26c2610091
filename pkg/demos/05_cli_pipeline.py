#!/usr/bin/env python3
"""Drive the command-line interface end to end in a scratch directory.

Writes a synthetic corpus to the CSV interchange format, then runs:
build-vocab -> train -> evaluate -> predict -> stats, the same commands a
batch job would use on real data.
"""

import tempfile
from pathlib import Path

from botlstm import save_dataset, synthetic, write_glove
from botlstm.cli import main

with tempfile.TemporaryDirectory() as tmp:
    work = Path(tmp)
    accounts, vocab, table = synthetic(seed=11, n_per_class=8)
    save_dataset(accounts, work / "accounts.csv", work / "tweets.csv")

    # word vectors in the plain-text format (only non-reserved rows have them)
    words = [vocab.surface_of(i) for i in range(6, len(vocab))]
    write_glove(work / "vectors.txt", words, table.vectors[6:])

    # one tweet per line, for vocabulary building
    corpus = work / "corpus.txt"
    corpus.write_text(
        "\n".join(t for a in accounts for t in a.tweets) + "\n", encoding="utf-8"
    )

    steps = [
        ["build-vocab", "--corpus", str(corpus), "--glove", str(work / "vectors.txt"),
         "--embed-dim", "16", "--output", str(work / "vocab.tsv")],
        ["train", "--accounts", str(work / "accounts.csv"),
         "--tweets", str(work / "tweets.csv"), "--glove", str(work / "vectors.txt"),
         "--vocab", str(work / "vocab.tsv"), "--embed-dim", "16",
         "--hidden", "8", "--layers", "1", "--epochs", "10", "--seed", "11",
         "--checkpoint", str(work / "model.ckpt"),
         "--history", str(work / "history.csv")],
        ["evaluate", "--checkpoint", str(work / "model.ckpt"),
         "--accounts", str(work / "accounts.csv"),
         "--tweets", str(work / "tweets.csv"),
         "--output", str(work / "metrics.json")],
        ["predict", "--checkpoint", str(work / "model.ckpt"),
         "--tweets", str(work / "tweets.csv"),
         "--output", str(work / "predictions.csv")],
        ["stats", "--accounts", str(work / "accounts.csv"),
         "--tweets", str(work / "tweets.csv"), "--top-k", "12", "--stopwords",
         "--output-dir", str(work / "stats")],
    ]
    for argv in steps:
        print(f"\n$ botlstm {' '.join(argv)}")
        rc = main(argv)
        assert rc == 0, f"exit code {rc}"

    print("\nfirst prediction rows:")
    for line in (work / "predictions.csv").read_text().splitlines()[:4]:
        print(" ", line)
