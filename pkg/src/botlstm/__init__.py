"""botlstm: a from-scratch bidirectional peephole-LSTM tweet classifier.

Pipeline: rule-based tweet tokenization -> corpus/embedding-intersection
vocabulary -> frozen pretrained vectors with a trainable shared OOV row ->
three stacked bidirectional peephole-LSTM layers -> softmax over
{human, bot} -> SGD-with-momentum training and six-metric evaluation.
"""

from .corpus_stats import (
    DivergenceReport,
    FrequencyTable,
    STOPWORDS,
    compare_tables,
    token_frequencies,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import (
    Account,
    LabeledSequence,
    MixedTestSet,
    compose_test_set,
    load_dataset,
    make_examples,
    save_dataset,
    split_accounts,
    synthetic,
)
from .embeddings import (
    EmbeddingTable,
    build_table,
    embed_sequence,
    load_glove,
    write_glove,
)
from .errors import BotlstmError, CheckpointError, DataError, InternalError, UsageError
from .metrics import (
    BOT,
    HUMAN,
    ConfusionCounts,
    MetricsReport,
    compute_metrics,
    report_json,
    tally,
)
from .nn_core import (
    BiLstmLayer,
    ForwardTrace,
    LstmCellParams,
    ModelConfig,
    ModelParams,
    backward,
    bilstm_forward,
    init_params,
    lstm_cell_forward,
    run_direction,
)
from .text_pipeline import (
    OOV_ID,
    PAD_ID,
    RESERVED_TOKENS,
    Vocabulary,
    build_vocabulary,
    encode,
    normalize_token,
    tokenize,
)
from .trainer import (
    TrainHistory,
    TrainingConfig,
    dropout_schedule,
    evaluate,
    nll_loss,
    sgd_momentum_step,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Account",
    "BOT",
    "BiLstmLayer",
    "BotlstmError",
    "CheckpointError",
    "ConfusionCounts",
    "DataError",
    "DivergenceReport",
    "EmbeddingTable",
    "ForwardTrace",
    "FrequencyTable",
    "HUMAN",
    "InternalError",
    "LabeledSequence",
    "LstmCellParams",
    "MetricsReport",
    "MixedTestSet",
    "ModelConfig",
    "ModelParams",
    "OOV_ID",
    "PAD_ID",
    "RESERVED_TOKENS",
    "STOPWORDS",
    "TrainHistory",
    "TrainingConfig",
    "UsageError",
    "Vocabulary",
    "backward",
    "bilstm_forward",
    "build_table",
    "build_vocabulary",
    "compare_tables",
    "compose_test_set",
    "compute_metrics",
    "dropout_schedule",
    "embed_sequence",
    "encode",
    "evaluate",
    "init_params",
    "load_checkpoint",
    "load_dataset",
    "load_glove",
    "lstm_cell_forward",
    "make_examples",
    "nll_loss",
    "normalize_token",
    "report_json",
    "run_direction",
    "save_checkpoint",
    "save_dataset",
    "sgd_momentum_step",
    "split_accounts",
    "synthetic",
    "tally",
    "token_frequencies",
    "tokenize",
    "train",
    "write_glove",
]
