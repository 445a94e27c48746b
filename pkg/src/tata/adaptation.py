"""The adaptation state machine over a stream of test embeddings.

A bootstrap pass clusters test image embeddings, builds the text space,
re-clusters the multimodal concatenations, pseudo-labels the refined
centroids and freezes one prototype per class.  Each streamed sample is
then scored along two paths (distance-covariance against prototypes and
attribute-enhanced prompt similarity), fused, refined by neighbor soft
voting, and finally considered for admission into the per-class member
cache, which keeps the prototypes drifting toward the test distribution.

Multimodal features are concatenated image-first, [f_v, f_t], and the
same order is used for prototypes, cached members and test features so
their distance structures stay comparable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bdc import bdc_matrix, dcov2
from .clustering import kmeans, update_centroid
from .config import RunConfig
from .errors import (
    CountMismatchError,
    LengthMismatchError,
    NegativeAlphaError,
    TataError,
    TooFewSamplesError,
    UninitializedStateError,
)
from .numerics import as_float_vector, cosine_sim_many, l2_normalize, softmax_temp
from .textspace import (
    TextBank,
    TextSpace,
    assign_nouns,
    compose_prompt,
    select_attributes,
    textual_analog,
)

log = logging.getLogger(__name__)

# k-means++ restarts per clustering pass during bootstrap; the best run
# by inertia wins, tie broken by restart order
KMEANS_RESTARTS = 8


def _best_kmeans(points, n_clusters: int, seed: int):
    runs = [kmeans(points, n_clusters, seed=seed + 1000 * r) for r in range(KMEANS_RESTARTS)]
    return min(runs, key=lambda m: m.inertia)


@dataclass
class StreamRecord:
    """One test sample; the label travels along for evaluation only."""

    sample_id: str
    f_v: np.ndarray
    label: int | None = None


@dataclass
class CacheMember:
    f_m: np.ndarray
    probs: np.ndarray
    confidence: float


@dataclass
class ClassPrototype:
    class_index: int
    label_name: str
    base_centroid: np.ndarray   # bootstrap centroid; acts as a permanent member
    centroid: np.ndarray
    bdc: np.ndarray
    members: list = field(default_factory=list)


@dataclass
class AdaptState:
    prototypes: list                 # one ClassPrototype per class index
    text_space: TextSpace | None
    image_dim: int
    bootstrap_features: np.ndarray   # features the prototype clustering ran on
    admitted: int = 0
    reclusters: int = 0


@dataclass
class SampleResult:
    sample_id: str
    pred_index: int
    class_name: str
    probs: np.ndarray
    soft_vote_applied: bool
    true_label: int | None = None


@dataclass
class StreamSummary:
    count: int = 0
    labeled: int = 0
    correct: int = 0
    skipped: int = 0
    admitted: int = 0
    reclusters: int = 0

    @property
    def accuracy(self):
        if self.labeled == 0:
            return None
        return self.correct / self.labeled


def pseudo_label(centroids, class_text_embs, tau: float, one_to_one: bool = True) -> list:
    """Label each centroid by zero-shot similarity to the class texts.

    With `one_to_one` (the default) labels are assigned greedily: the
    globally most confident (centroid, class) pair is matched first,
    both are removed, and the scan repeats, so every class ends up with
    exactly one centroid.  The literal per-centroid argmax, which may
    collapse several centroids onto one class, stays available behind
    the flag.
    """
    c = np.asarray(centroids, dtype=np.float64)
    t = np.asarray(class_text_embs, dtype=np.float64)
    if c.shape[0] != t.shape[0]:
        raise CountMismatchError(f"{c.shape[0]} centroids vs {t.shape[0]} class texts")
    n = c.shape[0]
    probs = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        sims = cosine_sim_many(t, c[i])
        probs[i] = softmax_temp(sims, tau)

    if not one_to_one:
        return [int(np.argmax(probs[i])) for i in range(n)]

    labels = [-1] * n
    remaining = probs.copy()
    for _ in range(n):
        i, m = np.unravel_index(np.argmax(remaining), remaining.shape)
        labels[int(i)] = int(m)
        remaining[i, :] = -np.inf
        remaining[:, m] = -np.inf
    return labels


def vv_inference(f_m, state: AdaptState) -> np.ndarray:
    """Class distribution from distance covariance against the prototypes."""
    if state is None or not state.prototypes:
        raise UninitializedStateError("no prototypes; bootstrap the state first")
    fbdc = bdc_matrix(f_m)
    scores = np.array([dcov2(fbdc, proto.bdc) for proto in state.prototypes])
    return softmax_temp(scores, 1.0)


def vl_inference(f_v, composed_class_embs, tau: float) -> np.ndarray:
    """Class distribution from cosine similarity to the class prompt embeddings."""
    embs = np.asarray(composed_class_embs, dtype=np.float64)
    if embs.ndim != 2 or embs.shape[0] == 0:
        raise CountMismatchError(f"expected a nonempty stack of class embeddings, got shape {embs.shape}")
    sims = cosine_sim_many(embs, f_v)
    return softmax_temp(sims, tau)


def fuse(p_vv, p_vl, alpha: float) -> np.ndarray:
    """Combine the two paths as (alpha * p_vv + p_vl) / (1 + alpha).

    The division restores distribution semantics; the argmax equals the
    argmax of the unnormalized combination because the scale factor is
    positive and shared.
    """
    a = np.asarray(p_vv, dtype=np.float64)
    b = np.asarray(p_vl, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatchError(f"distribution lengths differ: {a.shape} vs {b.shape}")
    if alpha < 0:
        raise NegativeAlphaError(f"alpha must be >= 0, got {alpha}")
    return (alpha * a + b) / (1.0 + alpha)


def soft_vote(p, f_v, state: AdaptState, k3: int):
    """Average `p` with the stored distributions of the nearest cached members.

    Neighbors are retrieved across all classes by cosine similarity on
    the image part of the cached multimodal features.  Returns the
    refined distribution and the number of neighbors used; with k3 = 0
    or an empty cache the input distribution is returned unchanged.
    """
    if k3 == 0 or state is None:
        return p, 0
    members = [m for proto in state.prototypes for m in proto.members]
    if not members:
        return p, 0
    query = as_float_vector(f_v)
    keys = np.array([m.f_m[: state.image_dim] for m in members])
    sims = cosine_sim_many(keys, query)
    take = np.argsort(-sims, kind="stable")[: min(k3, len(members))]
    total = np.asarray(p, dtype=np.float64).copy()
    for j in take:
        total += members[j].probs
    return total / (len(take) + 1.0), len(take)


def admit(record: StreamRecord, f_m, p_hat, state: AdaptState, config: RunConfig) -> bool:
    """Cache a confident sample under its predicted class.

    Admission appends (f_m, p_hat, confidence) to the argmax class, evicts
    the lowest-confidence member once the cache exceeds capacity, and
    refreshes that prototype's centroid (mean of cached members plus the
    bootstrap centroid) and its BDC matrix.  No other prototype changes.
    """
    probs = np.asarray(p_hat, dtype=np.float64)
    confidence = float(probs.max())
    if confidence < config.theta:
        return False
    proto = state.prototypes[int(np.argmax(probs))]
    proto.members.append(CacheMember(f_m=np.array(f_m, dtype=np.float64), probs=probs.copy(), confidence=confidence))
    while len(proto.members) > config.capacity:
        weakest = int(np.argmin([m.confidence for m in proto.members]))
        proto.members.pop(weakest)
    stack = [m.f_m for m in proto.members] + [proto.base_centroid]
    proto.centroid = update_centroid(stack)
    proto.bdc = bdc_matrix(proto.centroid)
    state.admitted += 1
    return True


def _multimodal_class_reprs(class_text_embs: np.ndarray) -> np.ndarray:
    """Lift class text embeddings into the concatenated multimodal space.

    The class text stands in for both halves, so the lifted vector is the
    re-normalized self-concatenation; its cosine against a prototype is
    the mean of the image-half and text-half similarities.
    """
    return np.array([l2_normalize(np.concatenate([e, e])) for e in class_text_embs])


def multimodal_feature(f_v, text_space: TextSpace, tau_tilde: float) -> np.ndarray:
    """Image-first concatenation of an image embedding and its textual analog."""
    f_t = textual_analog(f_v, text_space, tau_tilde)
    return l2_normalize(np.concatenate([np.asarray(f_v, dtype=np.float64), f_t]))


def bootstrap(
    f_v_rows,
    class_names,
    class_text_embs,
    config: RunConfig,
    noun_bank: TextBank | None = None,
) -> AdaptState:
    """Cluster the given image embeddings into pseudo-labeled prototypes.

    Visual k-means seeds the semantic centers for noun selection; the
    refined clustering runs on the multimodal concatenations (or on the
    raw visual features when multimodal assistance is disabled).
    """
    f_v = np.asarray(f_v_rows, dtype=np.float64)
    n_classes = len(class_names)
    if f_v.ndim != 2 or f_v.shape[0] < n_classes:
        raise TooFewSamplesError(
            f"need at least {n_classes} samples to bootstrap, got {f_v.shape[0] if f_v.ndim == 2 else 0}"
        )
    texts = np.asarray(class_text_embs, dtype=np.float64)
    if texts.shape[0] != n_classes:
        raise CountMismatchError(f"{texts.shape[0]} class embeddings vs {n_classes} class names")

    visual = _best_kmeans(f_v, n_classes, seed=config.seed)
    if config.use_mac:
        if noun_bank is None:
            raise UninitializedStateError("multimodal clustering requires a noun bank")
        space = assign_nouns(noun_bank, visual.centroids, config.k1)
        features = np.array([multimodal_feature(row, space, config.tau_tilde) for row in f_v])
        model = _best_kmeans(features, n_classes, seed=config.seed + 1)
        reprs = _multimodal_class_reprs(texts)
    else:
        space = None
        features = f_v
        model = visual
        reprs = texts

    assignments = model.assignments
    centroids = model.centroids
    labels = pseudo_label(centroids, reprs, config.tau)
    prototypes: list = [None] * n_classes
    for cluster, (centroid, label) in enumerate(zip(centroids, labels)):
        unit = l2_normalize(centroid)
        proto = ClassPrototype(
            class_index=label,
            label_name=class_names[label],
            base_centroid=unit,
            centroid=unit.copy(),
            bdc=bdc_matrix(unit),
            members=[],
        )
        # the dictionary starts out holding the pseudo-labeled cluster
        # itself: its points become cached members voting their cluster's
        # class, closest to the centroid first, up to capacity
        cluster_rows = features[assignments == cluster]
        if len(cluster_rows) and config.capacity > 0:
            sims = cosine_sim_many(cluster_rows, unit)
            one_hot = np.zeros(n_classes)
            one_hot[label] = 1.0
            for idx in np.argsort(-sims, kind="stable")[: config.capacity]:
                proto.members.append(
                    CacheMember(
                        f_m=cluster_rows[idx].copy(),
                        probs=one_hot.copy(),
                        confidence=float(max(sims[idx], 0.0)),
                    )
                )
        prototypes[label] = proto
    return AdaptState(
        prototypes=prototypes,
        text_space=space,
        image_dim=f_v.shape[1],
        bootstrap_features=features,
    )


class TataEngine:
    """Drives the per-sample pipeline and owns the mutable state.

    The engine is sequential by contract: admission order changes the
    state, so no two samples may be processed concurrently.
    """

    def __init__(
        self,
        class_names,
        class_text_embs,
        config: RunConfig,
        noun_bank: TextBank | None = None,
        attribute_bank: TextBank | None = None,
        encoder=None,
    ):
        self.class_names = list(class_names)
        self.class_text_embs = np.asarray(class_text_embs, dtype=np.float64)
        if self.class_text_embs.shape[0] != len(self.class_names):
            raise CountMismatchError(
                f"{self.class_text_embs.shape[0]} class embeddings vs {len(self.class_names)} names"
            )
        if config.n_classes is None:
            config = config.replace(n_classes=len(self.class_names))
        elif config.n_classes != len(self.class_names):
            raise CountMismatchError(
                f"config expects {config.n_classes} classes, inputs carry {len(self.class_names)}"
            )
        self.config = config
        self.noun_bank = noun_bank
        self.attribute_bank = attribute_bank
        self.encoder = encoder
        if config.use_aap and config.n_attr > 0:
            if attribute_bank is None:
                raise UninitializedStateError("attribute prompting requires an attribute bank")
            if encoder is None:
                raise UninitializedStateError("attribute prompting requires a text encoder")
        if config.use_mac and self.needs_store and noun_bank is None:
            raise UninitializedStateError("multimodal clustering requires a noun bank")
        self.state: AdaptState | None = None
        self._prompt_memo: dict = {}

    @property
    def needs_store(self) -> bool:
        return self.config.use_bdc or self.config.use_sv

    def bootstrap(self, f_v_rows) -> AdaptState:
        self.state = bootstrap(
            f_v_rows,
            self.class_names,
            self.class_text_embs,
            self.config,
            noun_bank=self.noun_bank if self.config.use_mac else None,
        )
        return self.state

    def _composed_class_embeddings(self, f_v) -> np.ndarray:
        cfg = self.config
        if not (cfg.use_aap and cfg.n_attr > 0):
            return self.class_text_embs
        attrs = select_attributes(f_v, self.attribute_bank, cfg.n_attr)
        rows = []
        missing = []
        prompts = [compose_prompt(name, attrs) for name in self.class_names]
        for prompt in prompts:
            if prompt not in self._prompt_memo:
                missing.append(prompt)
        if missing:
            encoded = self.encoder.encode_texts(missing)
            for prompt, vec in zip(missing, encoded):
                self._prompt_memo[prompt] = l2_normalize(vec)
        for prompt in prompts:
            rows.append(self._prompt_memo[prompt])
        return np.array(rows)

    def _multimodal(self, f_v) -> np.ndarray:
        if self.config.use_mac and self.state is not None and self.state.text_space is not None:
            return multimodal_feature(f_v, self.state.text_space, self.config.tau_tilde)
        return np.asarray(f_v, dtype=np.float64)

    def _recluster(self) -> None:
        state = self.state
        cfg = self.config
        pool = [state.bootstrap_features] + [
            m.f_m.reshape(1, -1) for proto in state.prototypes for m in proto.members
        ]
        points = np.vstack(pool)
        model = _best_kmeans(points, len(self.class_names), seed=cfg.seed + 2 + state.reclusters)
        reprs = (
            _multimodal_class_reprs(self.class_text_embs)
            if cfg.use_mac and state.text_space is not None
            else self.class_text_embs
        )
        labels = pseudo_label(model.centroids, reprs, cfg.tau)
        for centroid, label in zip(model.centroids, labels):
            proto = state.prototypes[label]
            proto.base_centroid = l2_normalize(centroid)
            stack = [m.f_m for m in proto.members] + [proto.base_centroid]
            proto.centroid = update_centroid(stack)
            proto.bdc = bdc_matrix(proto.centroid)
        state.reclusters += 1

    def step(self, record: StreamRecord) -> SampleResult:
        cfg = self.config
        f_v = record.f_v
        composed = self._composed_class_embeddings(f_v)
        p_vl = vl_inference(f_v, composed, cfg.tau)

        store_ready = self.state is not None and self.needs_store
        f_m = self._multimodal(f_v) if store_ready else None
        if store_ready and cfg.use_bdc:
            p = fuse(vv_inference(f_m, self.state), p_vl, cfg.alpha)
        else:
            p = p_vl
        if store_ready and cfg.use_sv:
            p_hat, neighbors = soft_vote(p, f_v, self.state, cfg.k3)
        else:
            p_hat, neighbors = p, 0

        pred = int(np.argmax(p_hat))
        result = SampleResult(
            sample_id=record.sample_id,
            pred_index=pred,
            class_name=self.class_names[pred],
            probs=np.asarray(p_hat, dtype=np.float64),
            soft_vote_applied=neighbors > 0,
            true_label=record.label,
        )
        if store_ready and admit(record, f_m, p_hat, self.state, cfg):
            if cfg.recluster_every > 0 and self.state.admitted % cfg.recluster_every == 0:
                self._recluster()
        return result


def _valid_record(record: StreamRecord, dim: int, seen_ids: set) -> bool:
    try:
        vec = as_float_vector(record.f_v)
    except TataError as exc:
        log.warning("skipping record %r: %s", record.sample_id, exc)
        return False
    if vec.shape[0] != dim:
        log.warning(
            "skipping record %r: dimension %d does not match class embeddings (%d)",
            record.sample_id, vec.shape[0], dim,
        )
        return False
    if record.sample_id in seen_ids:
        log.warning("skipping record %r: duplicate id", record.sample_id)
        return False
    seen_ids.add(record.sample_id)
    return True


def process_stream(
    records,
    class_names,
    class_text_embs,
    config: RunConfig,
    noun_bank: TextBank | None = None,
    attribute_bank: TextBank | None = None,
    encoder=None,
):
    """Run the full pipeline over a record stream.

    Transductive mode bootstraps on every valid record before any
    prediction; streaming mode answers the warmup prefix with the
    vision-language path only, bootstraps on that prefix, and continues
    adapted.  Malformed records are skipped, logged and counted.
    Returns (results, summary).
    """
    engine = TataEngine(
        class_names,
        class_text_embs,
        config,
        noun_bank=noun_bank,
        attribute_bank=attribute_bank,
        encoder=encoder,
    )
    cfg = engine.config
    dim = engine.class_text_embs.shape[1]
    summary = StreamSummary()
    seen: set = set()
    results: list[SampleResult] = []

    def run_step(record: StreamRecord) -> None:
        result = engine.step(record)
        results.append(result)
        summary.count += 1
        if record.label is not None:
            summary.labeled += 1
            if result.pred_index == record.label:
                summary.correct += 1

    if cfg.mode == "transductive":
        valid = []
        for record in records:
            if _valid_record(record, dim, seen):
                valid.append(record)
            else:
                summary.skipped += 1
        if engine.needs_store:
            if len(valid) < len(class_names):
                raise TooFewSamplesError(
                    f"transductive bootstrap needs >= {len(class_names)} valid records, got {len(valid)}"
                )
            engine.bootstrap(np.array([r.f_v for r in valid]))
        for record in valid:
            run_step(record)
    else:
        warmup_goal = max(cfg.warmup, len(class_names))
        buffered: list[np.ndarray] = []
        for record in records:
            if not _valid_record(record, dim, seen):
                summary.skipped += 1
                continue
            run_step(record)
            if engine.needs_store and engine.state is None:
                buffered.append(np.asarray(record.f_v, dtype=np.float64))
                if len(buffered) >= warmup_goal:
                    engine.bootstrap(np.array(buffered))

    if engine.state is not None:
        summary.admitted = engine.state.admitted
        summary.reclusters = engine.state.reclusters
    return results, summary
