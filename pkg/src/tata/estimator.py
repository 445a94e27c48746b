"""scikit-learn style front door for the adaptation pipeline.

`fit(X)` bootstraps the prototype store on a block of test image
embeddings; `predict` / `predict_proba` stream rows through the adaptive
pipeline.  Prediction deliberately mutates internal state (confident
samples are cached and prototypes drift): that is the algorithm, not a
side effect.  Re-run `fit` to reset.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .adaptation import StreamRecord, TataEngine
from .config import RunConfig
from .errors import DimensionMismatchError, NonFiniteError


def check_embedding_matrix(X, dim=None, name: str = "X") -> np.ndarray:
    """Validate a 2-D block of embeddings and return it as float64."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionMismatchError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatchError(f"{name} has dimension {arr.shape[1]}, expected {dim}")
    return arr


class TataClassifier(BaseEstimator, ClassifierMixin):
    """Training-free test-time adaptation over precomputed embeddings.

    Parameters mirror the run configuration; `class_names`,
    `class_text_embeddings`, the banks and the encoder are model assets
    rather than tunables but live in the constructor so `get_params` /
    `set_params` round-trips the whole setup.
    """

    def __init__(
        self,
        class_names=None,
        class_text_embeddings=None,
        noun_bank=None,
        attribute_bank=None,
        encoder=None,
        k1=5,
        k3=4,
        alpha=1.75,
        tau=0.01,
        tau_tilde=0.005,
        n_attr=3,
        theta=0.55,
        capacity=8,
        recluster_every=256,
        seed=0,
        use_aap=True,
        use_bdc=True,
        use_mac=True,
        use_sv=True,
    ):
        self.class_names = class_names
        self.class_text_embeddings = class_text_embeddings
        self.noun_bank = noun_bank
        self.attribute_bank = attribute_bank
        self.encoder = encoder
        self.k1 = k1
        self.k3 = k3
        self.alpha = alpha
        self.tau = tau
        self.tau_tilde = tau_tilde
        self.n_attr = n_attr
        self.theta = theta
        self.capacity = capacity
        self.recluster_every = recluster_every
        self.seed = seed
        self.use_aap = use_aap
        self.use_bdc = use_bdc
        self.use_mac = use_mac
        self.use_sv = use_sv

    def _config(self) -> RunConfig:
        return RunConfig(
            n_classes=len(self.class_names),
            k1=self.k1,
            k3=self.k3,
            alpha=self.alpha,
            tau=self.tau,
            tau_tilde=self.tau_tilde,
            n_attr=self.n_attr,
            theta=self.theta,
            capacity=self.capacity,
            recluster_every=self.recluster_every,
            seed=self.seed,
            use_aap=self.use_aap,
            use_bdc=self.use_bdc,
            use_mac=self.use_mac,
            use_sv=self.use_sv,
        ).validate()

    def fit(self, X, y=None):
        """Bootstrap prototypes on test embeddings X (labels are not used)."""
        if self.class_names is None or self.class_text_embeddings is None:
            raise NotFittedError("class_names and class_text_embeddings must be provided")
        texts = check_embedding_matrix(self.class_text_embeddings, name="class_text_embeddings")
        X = check_embedding_matrix(X, dim=texts.shape[1])
        engine = TataEngine(
            self.class_names,
            texts,
            self._config(),
            noun_bank=self.noun_bank,
            attribute_bank=self.attribute_bank,
            encoder=self.encoder,
        )
        if engine.needs_store:
            engine.bootstrap(X)
        self.engine_ = engine
        self.classes_ = np.arange(len(self.class_names))
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Adapted class distributions, one row per sample (stateful)."""
        if not hasattr(self, "engine_"):
            raise NotFittedError("call fit before predict")
        X = check_embedding_matrix(X, dim=self.n_features_in_)
        rows = []
        for i, f_v in enumerate(X):
            result = self.engine_.step(StreamRecord(sample_id=f"row-{i}", f_v=f_v))
            rows.append(result.probs)
        return np.array(rows)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)
