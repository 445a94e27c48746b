"""Synthetic domain-shift benchmark and the programmatic encoder for it.

The world is a single joint embedding space: class anchors are unit
Gaussian vectors, each class owns a few attribute directions, nouns
scatter around the anchors, and images are noisy anchor copies carrying
one of their class's attribute kicks.  The shifted domain rotates every
anchor by a common angle and adds a shared bias before sampling, which
is what the adaptation pipeline is supposed to recover from.

WorldEncoder answers prompt-encoding requests from the world definition
alone (no model): the plain template returns the class anchor verbatim,
and an attributed template absorbs the listed attributes that plausibly
belong to the class, mirroring how a real text encoder lets attribute
words sharpen a class prompt.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embfile import write_embedding_file
from .errors import EncoderError, ParseError
from .numerics import l2_normalize

CLASS_WORDS = (
    "ape", "bear", "crane", "dingo", "eagle",
    "ferret", "gecko", "heron", "ibex", "jackal",
    "koala", "lemur", "marmot", "newt", "ocelot",
    "puffin", "quail", "raccoon", "stoat", "tapir",
)

ATTRIBUTE_WORDS = (
    "glossy", "matte", "striped", "spotted", "rusty",
    "faded", "neon", "pale", "dusky", "vivid",
    "smooth", "rough", "curly", "sleek", "fuzzy",
    "banded", "mottled", "speckled", "ashen", "amber",
    "bright", "dim", "frosty", "sandy", "muddy",
    "shiny", "soft", "crisp", "wiry", "plump",
    "slender", "stocky", "ragged", "tidy", "worn",
    "fresh", "aged", "misty", "sunlit", "shaded",
)

_PLAIN_RE = re.compile(r"^a photo of a (.+)$")
_ATTR_RE = re.compile(r"^a (.+) photo of a (.+)$")
_NOUN_RE = re.compile(r"^a photo of (.+)$")
_ATTR_TEXT_RE = re.compile(r"^The photo is (.+)$")


@dataclass
class SyntheticWorld:
    seed: int
    dim: int
    class_names: list
    class_anchors: np.ndarray        # (N, dim) unit rows
    shifted_anchors: np.ndarray      # (N, dim) unit rows
    attribute_texts: list
    attribute_vectors: np.ndarray    # (K, dim) unit rows
    class_attributes: list           # per class, indices into the attribute bank
    noun_texts: list
    noun_vectors: np.ndarray         # (M, dim) unit rows
    sigma: float                     # per-coordinate image noise (source domain)
    shift_sigma: float               # per-coordinate image noise (shifted domain)
    attr_strength: float             # attribute kick added to image embeddings
    prompt_gain: float               # attribute pull applied to composed prompts

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def make_world(
    seed: int = 0,
    dim: int = 64,
    n_classes: int = 10,
    n_attributes: int = 40,
    attrs_per_class: int = 3,
    nouns_per_class: int = 12,
    background_nouns: int = 10,
    sigma: float = 0.1,
    shift_sigma: float = 0.17,
    attr_strength: float = 0.35,
    attr_cone_spread: float = 0.4,
    prompt_gain: float = 0.5,
    noun_spread: float = 0.18,
    rotation_angle: float = 0.8,
    bias_scale: float = 0.25,
) -> SyntheticWorld:
    """Draw a world instance; everything downstream is deterministic in `seed`."""
    if n_classes > len(CLASS_WORDS):
        raise ParseError(f"at most {len(CLASS_WORDS)} synthetic classes are nameable")
    if n_attributes > len(ATTRIBUTE_WORDS):
        raise ParseError(f"at most {len(ATTRIBUTE_WORDS)} synthetic attributes are nameable")
    if attrs_per_class * n_classes > n_attributes:
        raise ParseError("not enough attribute words for disjoint per-class sets")
    rng = np.random.default_rng(seed)

    anchors = rng.standard_normal((n_classes, dim))
    anchors /= np.linalg.norm(anchors, axis=1, keepdims=True)

    # each class's attributes share a cone so the class stays one blob in
    # feature space rather than splitting into one sub-blob per attribute
    attr_vecs = np.empty((n_attributes, dim))
    class_attrs = [
        list(range(i * attrs_per_class, (i + 1) * attrs_per_class)) for i in range(n_classes)
    ]
    for i in range(n_classes):
        cone = rng.standard_normal(dim)
        cone /= np.linalg.norm(cone)
        for a in class_attrs[i]:
            attr_vecs[a] = l2_normalize(cone + attr_cone_spread * rng.standard_normal(dim))
    for a in range(n_classes * attrs_per_class, n_attributes):
        attr_vecs[a] = l2_normalize(rng.standard_normal(dim))

    noun_texts: list[str] = []
    noun_rows: list[np.ndarray] = []
    for i in range(n_classes):
        for j in range(nouns_per_class):
            noun_texts.append(f"{CLASS_WORDS[i]} kin {j}")
            noun_rows.append(l2_normalize(anchors[i] + noun_spread * rng.standard_normal(dim)))
    for j in range(background_nouns):
        noun_texts.append(f"drift thing {j}")
        noun_rows.append(l2_normalize(rng.standard_normal(dim)))

    bias = bias_scale * rng.standard_normal(dim) / np.sqrt(dim)
    shifted = np.empty_like(anchors)
    for i in range(n_classes):
        ortho = rng.standard_normal(dim)
        ortho -= (ortho @ anchors[i]) * anchors[i]
        ortho /= np.linalg.norm(ortho)
        rotated = np.cos(rotation_angle) * anchors[i] + np.sin(rotation_angle) * ortho
        shifted[i] = l2_normalize(rotated + bias)

    return SyntheticWorld(
        seed=seed,
        dim=dim,
        class_names=list(CLASS_WORDS[:n_classes]),
        class_anchors=anchors,
        shifted_anchors=shifted,
        attribute_texts=list(ATTRIBUTE_WORDS[:n_attributes]),
        attribute_vectors=attr_vecs,
        class_attributes=class_attrs,
        noun_texts=noun_texts,
        noun_vectors=np.array(noun_rows),
        sigma=sigma,
        shift_sigma=shift_sigma,
        attr_strength=attr_strength,
        prompt_gain=prompt_gain,
    )


def sample_domain(world: SyntheticWorld, n_per_class: int, shifted: bool, seed: int):
    """Sample a shuffled labeled stream from one domain.

    Every image is its class anchor (source or shifted) plus one of the
    class's attribute kicks plus isotropic noise, re-normalized.
    Returns (vectors, ids, labels).
    """
    rng = np.random.default_rng(seed)
    anchors = world.shifted_anchors if shifted else world.class_anchors
    sigma = world.shift_sigma if shifted else world.sigma
    tag = "shift" if shifted else "src"
    rows, ids, labels = [], [], []
    for i in range(world.n_classes):
        for s in range(n_per_class):
            kick_idx = int(rng.choice(world.class_attributes[i]))
            vec = (
                anchors[i]
                + world.attr_strength * world.attribute_vectors[kick_idx]
                + sigma * rng.standard_normal(world.dim)
            )
            rows.append(l2_normalize(vec))
            ids.append(f"{tag}-{i:02d}-{s:03d}")
            labels.append(i)
    order = rng.permutation(len(rows))
    vectors = np.array(rows)[order]
    ids = [ids[k] for k in order]
    labels = [labels[k] for k in order]
    return vectors, ids, labels


class WorldEncoder:
    """Answers text-encoding requests directly from a world definition."""

    def __init__(self, world: SyntheticWorld):
        self.world = world
        self._class_index = {name: i for i, name in enumerate(world.class_names)}
        self._attr_index = {text: i for i, text in enumerate(world.attribute_texts)}
        self._noun_index = {text: i for i, text in enumerate(world.noun_texts)}

    def encode_texts(self, texts) -> np.ndarray:
        return np.array([self._encode_one(t) for t in texts])

    def _encode_one(self, text: str) -> np.ndarray:
        world = self.world
        match = _ATTR_TEXT_RE.match(text)
        if match and match.group(1) in self._attr_index:
            return world.attribute_vectors[self._attr_index[match.group(1)]].copy()
        match = _PLAIN_RE.match(text)
        if match and match.group(1) in self._class_index:
            return world.class_anchors[self._class_index[match.group(1)]].copy()
        match = _NOUN_RE.match(text)
        if match and match.group(1) in self._noun_index:
            return world.noun_vectors[self._noun_index[match.group(1)]].copy()
        match = _ATTR_RE.match(text)
        if match:
            words = match.group(1).split(" ")
            name = match.group(2)
            if name in self._class_index and all(w in self._attr_index for w in words):
                i = self._class_index[name]
                pull = np.zeros(world.dim)
                for w in words:
                    a = self._attr_index[w]
                    # attribute words only sharpen prompts of classes they suit
                    if a in world.class_attributes[i]:
                        pull += world.attribute_vectors[a]
                return l2_normalize(world.class_anchors[i] + world.prompt_gain * pull)
        raise EncoderError(f"world encoder cannot embed {text!r}")


def world_to_dict(world: SyntheticWorld) -> dict:
    return {
        "seed": world.seed,
        "dim": world.dim,
        "class_names": world.class_names,
        "class_anchors": world.class_anchors.tolist(),
        "shifted_anchors": world.shifted_anchors.tolist(),
        "attribute_texts": world.attribute_texts,
        "attribute_vectors": world.attribute_vectors.tolist(),
        "class_attributes": world.class_attributes,
        "noun_texts": world.noun_texts,
        "noun_vectors": world.noun_vectors.tolist(),
        "sigma": world.sigma,
        "shift_sigma": world.shift_sigma,
        "attr_strength": world.attr_strength,
        "prompt_gain": world.prompt_gain,
    }


def world_from_dict(data: dict) -> SyntheticWorld:
    return SyntheticWorld(
        seed=data["seed"],
        dim=data["dim"],
        class_names=list(data["class_names"]),
        class_anchors=np.asarray(data["class_anchors"], dtype=np.float64),
        shifted_anchors=np.asarray(data["shifted_anchors"], dtype=np.float64),
        attribute_texts=list(data["attribute_texts"]),
        attribute_vectors=np.asarray(data["attribute_vectors"], dtype=np.float64),
        class_attributes=[list(x) for x in data["class_attributes"]],
        noun_texts=list(data["noun_texts"]),
        noun_vectors=np.asarray(data["noun_vectors"], dtype=np.float64),
        sigma=data["sigma"],
        shift_sigma=data["shift_sigma"],
        attr_strength=data["attr_strength"],
        prompt_gain=data["prompt_gain"],
    )


def save_world(world: SyntheticWorld, path) -> Path:
    target = Path(path)
    target.write_text(json.dumps(world_to_dict(world)))
    return target


def load_world(path) -> SyntheticWorld:
    try:
        return world_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ParseError(f"cannot load world file {path}: {exc}") from exc


# gate used by the shipped benchmark config: fused confidences cap out
# near (alpha/N + 1) / (1 + alpha), so the stock 0.55 gate would never
# admit anything at N=10
BENCHMARK_THETA = 0.4


def export_fixtures(outdir, seed: int = 0, n_per_class: int = 20, **world_kwargs) -> dict:
    """Write the benchmark inputs for one world seed into `outdir`.

    Produces class prompts, noun and attribute banks, labeled source and
    shifted streams, the world file for the programmatic encoder, and
    the run config the benchmark uses.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    world = make_world(seed=seed, **world_kwargs)

    paths = {
        "class_prompts": out / "class_prompts.emb",
        "nouns": out / "nouns.emb",
        "attributes": out / "attributes.emb",
        "stream_source": out / "stream_source.emb",
        "stream_shifted": out / "stream_shifted.emb",
        "world": out / "world.json",
        "config": out / "benchmark_config.json",
    }

    prompts = [f"a photo of a {name}" for name in world.class_names]
    write_embedding_file(
        paths["class_prompts"],
        world.class_anchors,
        {"ids": prompts, "class_names": world.class_names, "kind": "class_prompts"},
    )
    write_embedding_file(
        paths["nouns"],
        world.noun_vectors,
        {"ids": world.noun_texts, "kind": "nouns"},
    )
    write_embedding_file(
        paths["attributes"],
        world.attribute_vectors,
        {"ids": world.attribute_texts, "kind": "attributes"},
    )
    for key, shifted in (("stream_source", False), ("stream_shifted", True)):
        vectors, ids, labels = sample_domain(world, n_per_class, shifted, seed=seed + (1 if shifted else 2))
        write_embedding_file(
            paths[key],
            vectors,
            {
                "ids": ids,
                "labels": labels,
                "class_names": world.class_names,
                "kind": "stream",
                "notes": "synthetic benchmark stream",
            },
        )
    save_world(world, paths["world"])
    paths["config"].write_text(json.dumps({"theta": BENCHMARK_THETA}, indent=1) + "\n")
    return {k: str(v) for k, v in paths.items()}
