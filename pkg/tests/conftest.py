"""Shared fixtures and oracle helpers for the test suite."""

import math

import numpy as np
import pytest

from botlstm.datasets import Account, save_dataset
from botlstm.embeddings import EmbeddingTable
from botlstm.nn_core import (
    BiLstmLayer,
    LstmCellParams,
    ModelParams,
    bilstm_forward,
)
from botlstm.trainer import nll_loss


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    monkeypatch.delenv("BOTLSTM_THREADS", raising=False)


def random_cell(rng, hidden, d_in, scale=0.5):
    u = lambda shape: rng.uniform(-scale, scale, shape)
    return LstmCellParams(
        U_i=u((hidden, d_in)), U_f=u((hidden, d_in)),
        U_c=u((hidden, d_in)), U_o=u((hidden, d_in)),
        W_i=u((hidden, hidden)), W_f=u((hidden, hidden)),
        W_c=u((hidden, hidden)), W_o=u((hidden, hidden)),
        V_i=u(hidden), V_f=u(hidden), V_o=u(hidden),
        b_i=u(hidden), b_f=u(hidden), b_c=u(hidden), b_o=u(hidden),
    )


def random_model(rng, vocab_size, dim, hidden, layers, scale=0.5):
    """Model with every tensor (peepholes and biases included) randomized."""
    vectors = rng.uniform(-0.8, 0.8, (vocab_size, dim))
    vectors[0] = 0.0
    mask = np.zeros(vocab_size, dtype=bool)
    mask[1:6] = True
    cells = []
    for li in range(layers):
        d_in = dim if li == 0 else 2 * hidden
        cells.append(
            BiLstmLayer(
                fwd=random_cell(rng, hidden, d_in, scale),
                bwd=random_cell(rng, hidden, d_in, scale),
            )
        )
    return ModelParams(
        embedding=EmbeddingTable(vectors=vectors, trainable_mask=mask),
        layers=cells,
        softmax_W=rng.uniform(-scale, scale, (2, 2 * hidden)),
        softmax_b=rng.uniform(-scale, scale, 2),
    )


def model_loss(model, ids, label, rate=0.0, masks=None):
    trace = bilstm_forward(
        model, ids, dropout_rate=rate,
        train_mode=(masks is not None or rate == 0.0), dropout_masks=masks,
    )
    return nll_loss(trace.probabilities, label)


def fd_tensor_gradient(model, tensor, ids, label, eps=1e-4, rate=0.0, masks=None,
                       row_filter=None):
    """Central-difference gradient of the loss w.r.t. one tensor (in place)."""
    grad = np.zeros_like(tensor)
    it = np.nditer(tensor, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        if row_filter is not None and not row_filter[idx[0]]:
            continue
        orig = tensor[idx]
        tensor[idx] = orig + eps
        lp = model_loss(model, ids, label, rate, masks)
        tensor[idx] = orig - eps
        lm = model_loss(model, ids, label, rate, masks)
        tensor[idx] = orig
        grad[idx] = (lp - lm) / (2.0 * eps)
    return grad


def max_rel_err(numeric, analytic, floor=1e-4):
    """Elementwise relative error with a scale floor against 0/0."""
    numeric = np.asarray(numeric)
    analytic = np.asarray(analytic)
    denom = np.maximum(floor, np.maximum(np.abs(numeric), np.abs(analytic)))
    return float(np.max(np.abs(numeric - analytic) / denom)) if numeric.size else 0.0


def scalar_cell_oracle(params, x, h_prev, c_prev):
    """Straight-line scalar transcription of the peephole cell (H=1).

    Written against the gate equations directly, with no numpy, as an
    independent check of the vectorized implementation.
    """
    (u_i, u_f, u_c, u_o, w_i, w_f, w_c, w_o,
     v_i, v_f, v_o, b_i, b_f, b_c, b_o) = params

    def sig(z):
        if z >= 0.0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)

    i = sig(u_i * x + w_i * h_prev + v_i * c_prev + b_i)
    f = sig(u_f * x + w_f * h_prev + v_f * c_prev + b_f)
    c = f * c_prev + i * math.tanh(u_c * x + w_c * h_prev + b_c)
    o = sig(u_o * x + w_o * h_prev + v_o * c + b_o)
    h = o * math.tanh(c)
    return h, c


def write_dataset_files(accounts, tmp_path, prefix=""):
    accounts_path = tmp_path / f"{prefix}accounts.csv"
    tweets_path = tmp_path / f"{prefix}tweets.csv"
    save_dataset(accounts, accounts_path, tweets_path)
    return accounts_path, tweets_path


def small_accounts():
    return [
        Account("h1", 0, ["love you haha", "thank friend lol"]),
        Account("h2", 0, ["happy birthday miss you"]),
        Account("b1", 1, ["check awesome sale http://t.co/a"]),
        Account("b2", 1, ["click deal offer http://t.co/b", "read this http://t.co/c"]),
    ]
