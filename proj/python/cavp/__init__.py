"""Context-aware visual policy captioning (C++ core)."""

from ._cavp import (
    Captioner,
    ContractError,
    Error,
    DataError,
    Dataset,
    NumericalError,
    ShapeError,
    bleu,
    cider_d,
    evaluate_corpus,
    generate_dataset,
    gradcheck,
    meteor_lite,
    rouge_l,
    train,
)

__all__ = [
    "Captioner",
    "ContractError",
    "DataError",
    "Error",
    "Dataset",
    "NumericalError",
    "ShapeError",
    "bleu",
    "cider_d",
    "evaluate_corpus",
    "generate_dataset",
    "gradcheck",
    "meteor_lite",
    "rouge_l",
    "train",
]
