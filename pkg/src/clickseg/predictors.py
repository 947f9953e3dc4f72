"""Predictors: anything that maps (image, guidance channels, previous mask)
to a probability map.

All implementations obey one contract: spatial shapes match, the output is
a probability map of the same shape, and a call requires at least one
encoded positive click or a nonempty previous mask. Click coordinates are
never passed through; predictors that need seed pixels recover them from
saturated guidance values (exactly 1.0 at click pixels under both
encodings, whole disks under the disk encoding).

Implementations:

* OraclePredictor returns its configured ground truth. Used to verify the
  evaluation harness, never to score models.
* GeodesicPredictor is a classical seeded segmenter: multi-source shortest
  paths on the 8-connected pixel grid with color-sensitive edge weights.
* FeatherweightModel is an 8-feature per-pixel logistic model, small
  enough to train on a desk yet driven by the same interaction pipeline a
  real network would see.
* RemotePredictor forwards the call over HTTP to an external model
  process.
"""

from __future__ import annotations

import base64
import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.special import expit

from .core import ShapeError, as_mask
from .imageproc import distance_transform

# A guidance pixel at or above this level is a seed (click pixels encode
# to exactly 1.0; float noise margin only).
SEED_LEVEL = 1.0 - 1e-6

# Geodesic radius of influence for a click when only one polarity has
# seeds and the two-sided distance contrast is unavailable.
LONE_POLARITY_REACH = 20.0

FEATHERWEIGHT_VERSION = 1
FEATURE_NAMES = (
    "bias",
    "dt_pos",
    "dt_neg",
    "prev_mask",
    "color_pos",
    "color_neg",
    "disk_pos",
    "disk_neg",
)
FEATURE_DT_CAP = 64.0


@dataclass
class PredictorInput:
    """One prediction request. guidance is (2, h, w): positive channel
    first, negative second."""

    image: np.ndarray
    guidance: np.ndarray
    prev_mask: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ShapeError(f"image must be (h, w, 3), got {img.shape}")
        self.image = img
        g = np.asarray(self.guidance, dtype=np.float64)
        if g.shape != (2, img.shape[0], img.shape[1]):
            raise ShapeError(
                f"guidance must be (2, {img.shape[0]}, {img.shape[1]}), got {g.shape}"
            )
        self.guidance = g
        self.prev_mask = as_mask(self.prev_mask)
        if self.prev_mask.shape != img.shape[:2]:
            raise ShapeError(
                f"prev_mask {self.prev_mask.shape} vs image {img.shape[:2]}"
            )

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]


def check_predict_preconditions(inp: PredictorInput) -> None:
    """A prediction needs something to anchor the object: a positive click
    or a nonempty previous mask."""
    if not (inp.guidance[0] >= SEED_LEVEL).any() and not inp.prev_mask.any():
        raise ValueError("need at least one positive click or a nonempty prev_mask")


def guidance_seeds(guidance: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boolean seed masks (positive, negative) from saturated guidance."""
    return guidance[0] >= SEED_LEVEL, guidance[1] >= SEED_LEVEL


class OraclePredictor:
    """Always returns the ground truth it was built with."""

    def __init__(self, gt: np.ndarray):
        self.gt = as_mask(gt)

    def predict(self, inp: PredictorInput) -> np.ndarray:
        check_predict_preconditions(inp)
        if self.gt.shape != (inp.height, inp.width):
            raise ShapeError(f"oracle gt {self.gt.shape} vs input {inp.image.shape[:2]}")
        return self.gt.astype(np.float64)


@dataclass(frozen=True, slots=True)
class GeodesicConfig:
    beta: float = 50.0
    temperature: float = 5.0
    border_as_negative: bool = True
    mask_bias: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


class GeodesicPredictor:
    """Seeded shortest-path segmentation.

    Edge weight between 8-neighbors = spatial length * (1 + beta *
    ||color difference||) with colors scaled to [0, 1]. The probability
    compares the geodesic distances to the two seed sets:
    p = logistic((d_neg - d_pos) / temperature + mask_bias * prev_mask).

    Without negative clicks the image border ring stands in as the
    negative seed set (border_as_negative). When only one polarity has
    seeds at all, the missing side has no distance field; the logit then
    decays linearly from the existing seeds over LONE_POLARITY_REACH
    geodesic pixels instead, which keeps a mask-only or negative-only
    correction from collapsing the probability field to one value.

    The grid graph depends only on the image, so it is cached per image
    digest; repeated clicks on one image rebuild nothing. Cache updates
    are idempotent, so concurrent calls at worst rebuild the same graph.
    """

    _CACHE_MAX = 4

    def __init__(self, cfg: GeodesicConfig = GeodesicConfig()):
        self.cfg = cfg
        self._graph_cache: dict[bytes, sp.csr_matrix] = {}

    def _graph(self, image: np.ndarray) -> sp.csr_matrix:
        digest = hashlib.blake2b(image.tobytes(), digest_size=16).digest()
        cached = self._graph_cache.get(digest)
        if cached is not None:
            return cached
        h, w = image.shape[:2]
        colors = image.astype(np.float64) / 255.0
        idx = np.arange(h * w).reshape(h, w)
        rows, cols, data = [], [], []
        for dr, dc, length in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, np.sqrt(2.0)),
                               (1, -1, np.sqrt(2.0))):
            if dc >= 0:
                src = idx[: h - dr, : w - dc]
                dst = idx[dr:, dc:]
                diff = colors[: h - dr, : w - dc] - colors[dr:, dc:]
            else:
                src = idx[: h - dr, -dc:]
                dst = idx[dr:, : w + dc]
                diff = colors[: h - dr, -dc:] - colors[dr:, : w + dc]
            weight = length * (1.0 + self.cfg.beta * np.sqrt((diff * diff).sum(axis=2)))
            rows.append(src.ravel())
            cols.append(dst.ravel())
            data.append(weight.ravel())
        graph = sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(h * w, h * w),
        )
        if len(self._graph_cache) >= self._CACHE_MAX:
            self._graph_cache.pop(next(iter(self._graph_cache)))
        self._graph_cache[digest] = graph
        return graph

    @staticmethod
    def _distances(graph: sp.csr_matrix, seeds: np.ndarray) -> np.ndarray | None:
        flat = np.flatnonzero(seeds.ravel())
        if flat.size == 0:
            return None
        return dijkstra(graph, directed=False, indices=flat, min_only=True)

    def predict(self, inp: PredictorInput) -> np.ndarray:
        check_predict_preconditions(inp)
        h, w = inp.height, inp.width
        pos_seeds, neg_seeds = guidance_seeds(inp.guidance)
        if not neg_seeds.any() and self.cfg.border_as_negative:
            neg_seeds = np.zeros((h, w), dtype=bool)
            neg_seeds[0, :] = neg_seeds[-1, :] = True
            neg_seeds[:, 0] = neg_seeds[:, -1] = True
        graph = self._graph(inp.image)
        d_pos = self._distances(graph, pos_seeds)
        d_neg = self._distances(graph, neg_seeds)
        t = self.cfg.temperature
        reach = LONE_POLARITY_REACH
        if d_pos is not None and d_neg is not None:
            logit = (d_neg - d_pos) / t
        elif d_pos is not None:
            logit = (reach - np.minimum(d_pos, reach)) / t
        elif d_neg is not None:
            logit = -(reach - np.minimum(d_neg, reach)) / t
        else:
            logit = np.zeros(h * w)
        logit = logit + self.cfg.mask_bias * inp.prev_mask.ravel()
        return expit(logit).reshape(h, w)


@dataclass
class FeatherweightModel:
    """Per-pixel logistic regression over 8 hand-built features.

    Feature order is fixed (FEATURE_NAMES) and serialized with the
    weights, so saved models stay readable if the feature list ever
    grows.
    """

    weights: np.ndarray = field(
        default_factory=lambda: np.zeros(len(FEATURE_NAMES))
    )
    version: int = FEATHERWEIGHT_VERSION

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(FEATURE_NAMES),):
            raise ShapeError(f"weights must have shape ({len(FEATURE_NAMES)},), got {w.shape}")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        self.weights = w

    def predict(self, inp: PredictorInput) -> np.ndarray:
        check_predict_preconditions(inp)
        phi = featherweight_features(inp)
        logit = np.tensordot(self.weights, phi, axes=1)
        return expit(logit)


def featherweight_features(inp: PredictorInput) -> np.ndarray:
    """The fixed (8, h, w) feature stack.

    Distance features are click proximities: 1 at a seed pixel, falling
    linearly to 0 at FEATURE_DT_CAP pixels. Color features are distances
    to the mean color under the seeds of that polarity, scaled to [0, 1];
    with no seeds of a polarity the proximity is 0 everywhere and the
    color distance 1 (maximally unlike an unknown reference). The last
    two features are the raw guidance channels.
    """
    h, w = inp.height, inp.width
    pos_seeds, neg_seeds = guidance_seeds(inp.guidance)
    colors = inp.image.astype(np.float64) / 255.0
    phi = np.zeros((len(FEATURE_NAMES), h, w))
    phi[0] = 1.0
    for k, seeds in ((1, pos_seeds), (2, neg_seeds)):
        if seeds.any():
            d = distance_transform(seeds.astype(np.uint8))
            phi[k] = 1.0 - np.minimum(d, FEATURE_DT_CAP) / FEATURE_DT_CAP
    phi[3] = inp.prev_mask
    for k, seeds in ((4, pos_seeds), (5, neg_seeds)):
        if seeds.any():
            ref = colors[seeds].mean(axis=0)
            phi[k] = np.sqrt(((colors - ref) ** 2).sum(axis=2)) / np.sqrt(3.0)
        else:
            phi[k] = 1.0
    phi[6] = inp.guidance[0]
    phi[7] = inp.guidance[1]
    return phi


def featherweight_weight_grad(model: FeatherweightModel, inp: PredictorInput,
                              dloss_dp: np.ndarray) -> np.ndarray:
    """Chain a per-pixel loss gradient back to the 8 weights."""
    phi = featherweight_features(inp)
    p = model.predict(inp)
    dz = dloss_dp * p * (1.0 - p)
    return np.tensordot(phi, dz, axes=((1, 2), (0, 1)))


def save_featherweight(model: FeatherweightModel, path) -> None:
    payload = {
        "version": model.version,
        "feature_names": list(FEATURE_NAMES),
        "weights": [float(x) for x in model.weights],
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def load_featherweight(path) -> FeatherweightModel:
    with open(path) as f:
        payload = json.load(f)
    names = payload.get("feature_names")
    if tuple(names or ()) != FEATURE_NAMES:
        raise ValueError(f"unsupported feature layout in {path}: {names}")
    return FeatherweightModel(
        weights=np.asarray(payload["weights"], dtype=np.float64),
        version=int(payload.get("version", FEATHERWEIGHT_VERSION)),
    )


class RemotePredictorError(RuntimeError):
    pass


class RemotePredictor:
    """Forwards predictions to an HTTP endpoint.

    Request JSON: height, width, image (base64 of raw 8-bit RGB,
    row-major), pos/neg/prev (base64 of little-endian float32 planes).
    Response JSON: prob (base64 of little-endian float32, h*w values).
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, transport=None):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout, transport=transport)

    @staticmethod
    def _plane(a: np.ndarray) -> str:
        return base64.b64encode(np.ascontiguousarray(a, dtype="<f4").tobytes()).decode()

    def predict(self, inp: PredictorInput) -> np.ndarray:
        import httpx

        check_predict_preconditions(inp)
        h, w = inp.height, inp.width
        payload = {
            "height": h,
            "width": w,
            "image": base64.b64encode(
                np.ascontiguousarray(inp.image, dtype=np.uint8).tobytes()
            ).decode(),
            "pos": self._plane(inp.guidance[0]),
            "neg": self._plane(inp.guidance[1]),
            "prev": self._plane(inp.prev_mask),
        }
        started = time.monotonic()
        try:
            resp = self._client.post(f"{self.endpoint}/predict", json=payload)
            resp.raise_for_status()
            body = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            elapsed = time.monotonic() - started
            raise RemotePredictorError(
                f"predict failed against {self.endpoint} after {elapsed:.1f}s: {exc}"
            ) from exc
        try:
            raw = base64.b64decode(body["prob"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RemotePredictorError(
                f"malformed response from {self.endpoint}: {exc}"
            ) from exc
        prob = np.frombuffer(raw, dtype="<f4")
        if prob.size != h * w:
            raise ShapeError(
                f"response has {prob.size} values, expected {h * w}"
            )
        return np.clip(prob.astype(np.float64).reshape(h, w), 0.0, 1.0)


@dataclass(frozen=True, slots=True)
class TrainConfig:
    lr: float = 2.0
    epochs: int = 5
    binarize_threshold: float = 0.5

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


def train_featherweight(dataset, sampling_cfg, loss_cfg, train_cfg: TrainConfig,
                        encoder, rng: np.random.Generator):
    """SGD over instances through the full interaction pipeline.

    Each step resamples a training interaction with the current model
    (random clicks plus 0..n_iters_max correction rounds), encodes the
    clicks, predicts, and applies one gradient step of the configured
    loss. Returns (model, per-epoch mean loss list). A non-finite loss
    aborts immediately rather than averaging garbage into the log.
    """
    from .losses import compute_loss
    from .sampling import generate_training_interaction

    if not dataset:
        raise ValueError("training needs a nonempty dataset")
    model = FeatherweightModel()
    log: list[float] = []
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(len(dataset))
        losses = []
        for i in order:
            inst = dataset[int(i)]
            h, w = inst.mask.shape
            clicks, prev = generate_training_interaction(
                inst.mask, inst.image, model, encoder, sampling_cfg, rng,
                binarize_threshold=train_cfg.binarize_threshold,
            )
            inp = PredictorInput(
                image=inst.image, guidance=encoder(clicks, h, w), prev_mask=prev
            )
            result = compute_loss(model.predict(inp), inst.mask, loss_cfg)
            if not np.isfinite(result.value):
                raise RuntimeError(
                    f"training diverged: loss {result.value} at epoch {epoch}, "
                    f"instance {getattr(inst, 'instance_id', i)}, "
                    f"weights {model.weights.tolist()}"
                )
            grad = featherweight_weight_grad(model, inp, result.grad)
            model = FeatherweightModel(model.weights - train_cfg.lr * grad)
            losses.append(result.value)
        log.append(float(np.mean(losses)))
    return model, log
