"""Discriminative text space: noun selection, textual analogs, attributes.

The noun bank holds prompt embeddings of "a photo of {noun}"; the
attribute bank holds embeddings of "The photo is {attribute}".  Both are
loaded from embedding files and are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BankTooSmallError,
    DimensionMismatchError,
    EmptyClassNameError,
    InvalidCountError,
    InvalidValueError,
)
from .numerics import cosine_sim_many, l2_normalize, softmax_temp


@dataclass(frozen=True)
class TextBank:
    """Parallel lists of texts and unit-norm embeddings."""

    texts: tuple
    vectors: np.ndarray  # (size, dim)

    def __post_init__(self):
        if len(self.texts) == 0:
            raise BankTooSmallError("bank is empty")
        if len(self.texts) != len(set(self.texts)):
            raise InvalidValueError("texts", "bank texts are not unique")
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.texts):
            raise DimensionMismatchError(
                f"{len(self.texts)} texts vs vector block of shape {self.vectors.shape}"
            )

    @property
    def size(self) -> int:
        return len(self.texts)

    @classmethod
    def from_rows(cls, texts, vectors) -> "TextBank":
        rows = np.asarray(vectors, dtype=np.float64)
        return cls(texts=tuple(texts), vectors=rows)


# Role aliases; file manifests carry kind "nouns" or "attributes".
NounBank = TextBank
AttributeBank = TextBank


@dataclass(frozen=True)
class TextSpace:
    """Top-k1 nouns per semantic center, flattened center-major.

    A noun may serve several centers, in which case it appears once per
    center it won (H = n_centers * k1 entries in total).
    """

    texts: tuple            # length H
    vectors: np.ndarray     # (H, dim)
    n_centers: int
    k1: int

    @property
    def size(self) -> int:
        return len(self.texts)


def assign_nouns(bank: TextBank, centers, k1: int) -> TextSpace:
    """Select the k1 nouns most associated with each semantic center.

    Each noun's affinity to center i is the softmax over centers of its
    cosine similarity to every center; per center the nouns are ranked
    by that probability, ties resolving to the lowest bank index.
    """
    c = np.asarray(centers, dtype=np.float64)
    n_centers = c.shape[0]
    if k1 < 1:
        raise InvalidCountError(f"k1 must be >= 1, got {k1}")
    if bank.size < n_centers * k1:
        raise BankTooSmallError(
            f"bank of {bank.size} nouns cannot fill {n_centers} centers x k1={k1}"
        )
    probs = np.empty((bank.size, n_centers), dtype=np.float64)
    for k in range(bank.size):
        sims = cosine_sim_many(c, bank.vectors[k])
        probs[k] = softmax_temp(sims, 1.0)

    texts: list[str] = []
    rows: list[np.ndarray] = []
    for i in range(n_centers):
        order = np.argsort(-probs[:, i], kind="stable")[:k1]
        for k in order:
            texts.append(bank.texts[k])
            rows.append(bank.vectors[k])
    return TextSpace(texts=tuple(texts), vectors=np.array(rows), n_centers=n_centers, k1=k1)


def analog_weights(f_v, space: TextSpace, tau_tilde: float) -> np.ndarray:
    """Softmax weights of each selected noun given an image embedding."""
    sims = cosine_sim_many(space.vectors, f_v)
    return softmax_temp(sims, tau_tilde)


def textual_analog(f_v, space: TextSpace, tau_tilde: float) -> np.ndarray:
    """Similarity-weighted aggregation of the selected noun embeddings.

    The aggregation is a convex combination of noun embeddings, then
    re-normalized to unit length so it can be concatenated with the
    image embedding.
    """
    weights = analog_weights(f_v, space, tau_tilde)
    return l2_normalize(weights @ space.vectors)


def select_attributes(f_v, bank: TextBank, n_attr: int) -> list:
    """The n_attr attribute texts most similar to the image, descending.

    Ties resolve to the lowest bank index; the result is always a prefix
    of the full similarity-sorted bank.
    """
    if not 1 <= n_attr <= bank.size:
        raise InvalidCountError(f"n_attr must be in [1, {bank.size}], got {n_attr}")
    sims = cosine_sim_many(bank.vectors, f_v)
    order = np.argsort(-sims, kind="stable")[:n_attr]
    return [bank.texts[i] for i in order]


def compose_prompt(class_name: str, attributes) -> str:
    """Substitute attributes and class into "a {attributes} photo of a {class}"."""
    if not class_name or not class_name.strip():
        raise EmptyClassNameError("class name is empty")
    attrs = [a for a in attributes]
    if not attrs:
        return f"a photo of a {class_name}"
    return f"a {' '.join(attrs)} photo of a {class_name}"
