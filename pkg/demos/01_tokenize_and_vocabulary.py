#!/usr/bin/env python3
"""Walk through the text pipeline: normalization, tokenization, vocabulary.

Twitter memes collapse onto reserved tokens, everything else is
lower-cased, and boundary punctuation becomes standalone tokens. The
vocabulary is the intersection of the corpus with a pretrained word list,
with six reserved ids up front.
"""

from botlstm import build_vocabulary, encode, normalize_token, tokenize

print("== chunk normalization ==")
for raw in ["#usopen2019", "@jack", "http://t.co/abc", "RT", "Hello", "rt"]:
    print(f"  {raw!r:22} -> {normalize_token(raw)!r}")

print("\n== tokenizing whole tweets ==")
tweets = [
    "RT @jack: great! #news http://t.co/x",
    "lol, thanks",
    "Check out this AWESOME deal!!! http://t.co/promo",
]
for tweet in tweets:
    print(f"  {tweet!r}")
    print(f"    -> {tokenize(tweet)}")

print("\n== vocabulary = corpus words that have pretrained vectors ==")
corpus = [tokenize(t) for t in tweets]
pretrained_words = {"great", "lol", "thanks", "check", "out", "this", "deal"}
vocab = build_vocabulary(corpus, pretrained_words)
print(f"  size {len(vocab)} (6 reserved + {len(vocab) - 6} corpus words)")
for i, surface in enumerate(vocab.surfaces):
    print(f"  {i:3d}  {surface}")

print("\n== encoding: unknown words share the OOV id ==")
tokens = tokenize("awesome deal lol zzqx")
print(f"  tokens {tokens}")
print(f"  ids    {encode(tokens, vocab)}   (note: 'awesome'/'zzqx' -> 1)")
