"""Binary model checkpoints.

Layout (all integers little-endian uint32, floats little-endian float32):

    magic   6 bytes  b"BLSTM1"
    version u32      currently 1
    dims    5 x u32  vocab_size, embed_dim, hidden, layers, classes
    payload:
      vocabulary block: vocab_size entries, each u32 byte length +
        UTF-8 surface, in id order
      tensor block: raw C-order float32 tensors in the canonical order
        of ModelParams.named_tensors():
          embedding.vectors [vocab_size, embed_dim]
          for each layer 0..L-1, for direction fwd then bwd:
            U_i U_f U_c U_o  [hidden, d_in]   (d_in = embed_dim on layer 0,
            W_i W_f W_c W_o  [hidden, hidden]  2*hidden above)
            V_i V_f V_o      [hidden]
            b_i b_f b_c b_o  [hidden]
          softmax.W [classes, 2*hidden]
          softmax.b [classes]
    checksum u32  CRC-32 of the payload bytes

The embedding trainable-row mask is not stored: rows 1..5 (OOV and the
meme tokens) are always the trainable ones. Parameters are saved at
float32 precision, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .embeddings import EmbeddingTable, TRAINABLE_ROW_IDS
from .errors import CheckpointError
from .nn_core import BiLstmLayer, LstmCellParams, ModelParams, N_CLASSES
from .text_pipeline import Vocabulary

MAGIC = b"BLSTM1"
VERSION = 1
_HEADER = struct.Struct("<6s6I")


def _tensor_shapes(vocab_size: int, embed_dim: int, hidden: int, layers: int):
    """Expected (name, shape) pairs in canonical order."""
    shapes = [("embedding.vectors", (vocab_size, embed_dim))]
    for li in range(layers):
        d_in = embed_dim if li == 0 else 2 * hidden
        for dname in ("fwd", "bwd"):
            prefix = f"layers.{li}.{dname}"
            for gate in ("i", "f", "c", "o"):
                shapes.append((f"{prefix}.U_{gate}", (hidden, d_in)))
            for gate in ("i", "f", "c", "o"):
                shapes.append((f"{prefix}.W_{gate}", (hidden, hidden)))
            for gate in ("i", "f", "o"):
                shapes.append((f"{prefix}.V_{gate}", (hidden,)))
            for gate in ("i", "f", "c", "o"):
                shapes.append((f"{prefix}.b_{gate}", (hidden,)))
    shapes.append(("softmax.W", (N_CLASSES, 2 * hidden)))
    shapes.append(("softmax.b", (N_CLASSES,)))
    return shapes


def save_checkpoint(path, model: ModelParams, vocab: Vocabulary) -> None:
    if len(vocab) != model.embedding.vocab_size:
        raise ValueError("vocabulary size does not match the embedding table")
    parts: list[bytes] = []
    for surface in vocab.surfaces:
        raw = surface.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    tensors = dict(model.named_tensors())
    cfg = model.config()
    for name, shape in _tensor_shapes(
        cfg.vocab_size, cfg.embed_dim, cfg.hidden, cfg.layers
    ):
        arr = tensors[name]
        if arr.shape != shape:
            raise ValueError(f"tensor {name} has shape {arr.shape}, expected {shape}")
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    payload = b"".join(parts)
    header = _HEADER.pack(
        MAGIC, VERSION, cfg.vocab_size, cfg.embed_dim, cfg.hidden, cfg.layers, N_CLASSES
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_checkpoint(path) -> tuple[ModelParams, Vocabulary]:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if len(blob) < _HEADER.size + 4:
        raise CheckpointError("corrupt checkpoint: truncated header")
    magic, version, vocab_size, embed_dim, hidden, layers, classes = _HEADER.unpack(
        blob[: _HEADER.size]
    )
    if magic != MAGIC:
        raise CheckpointError("corrupt checkpoint: bad magic")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if classes != N_CLASSES:
        raise CheckpointError(f"unsupported class count {classes}")

    payload = blob[_HEADER.size : -4]
    (stored_crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != stored_crc:
        raise CheckpointError("corrupt checkpoint: checksum mismatch")

    offset = 0

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(payload):
            raise CheckpointError("corrupt checkpoint: truncated payload")
        piece = payload[offset : offset + n]
        offset += n
        return piece

    surfaces = []
    for _ in range(vocab_size):
        (length,) = struct.unpack("<I", take(4))
        surfaces.append(take(length).decode("utf-8"))
    try:
        vocab = Vocabulary(surfaces)
    except ValueError as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc

    tensors: dict[str, np.ndarray] = {}
    for name, shape in _tensor_shapes(vocab_size, embed_dim, hidden, layers):
        count = int(np.prod(shape))
        raw = take(4 * count)
        tensors[name] = (
            np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
        )
    if offset != len(payload):
        raise CheckpointError("corrupt checkpoint: trailing bytes in payload")

    mask = np.zeros(vocab_size, dtype=bool)
    mask[list(TRAINABLE_ROW_IDS)] = True
    embedding = EmbeddingTable(
        vectors=tensors["embedding.vectors"], trainable_mask=mask
    )
    model_layers = []
    for li in range(layers):
        cells = {}
        for dname in ("fwd", "bwd"):
            prefix = f"layers.{li}.{dname}"
            cells[dname] = LstmCellParams(
                **{
                    tname: tensors[f"{prefix}.{tname}"]
                    for tname in (
                        "U_i", "U_f", "U_c", "U_o",
                        "W_i", "W_f", "W_c", "W_o",
                        "V_i", "V_f", "V_o",
                        "b_i", "b_f", "b_c", "b_o",
                    )
                }
            )
        model_layers.append(BiLstmLayer(fwd=cells["fwd"], bwd=cells["bwd"]))
    model = ModelParams(
        embedding=embedding,
        layers=model_layers,
        softmax_W=tensors["softmax.W"],
        softmax_b=tensors["softmax.b"],
    )
    return model, vocab
