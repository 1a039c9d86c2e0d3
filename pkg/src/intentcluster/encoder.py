"""Miniature trainable intent encoder and projection heads.

The encoder maps a sample to a feature vector: token mode looks up a trainable
embedding table and mean-pools it before a dense layer; feature mode feeds the
supplied vector straight into the dense layer. Projection heads are affine
maps applied after a tanh. Gradients of every training objective with respect
to all trainable parameters are computed by hand-written reverse passes in
:func:`grad_backprop`.
"""

from dataclasses import dataclass, field

import numpy as np

from . import objectives
from .data import Utterance
from .objectives import ContrastiveBatch


@dataclass
class EncoderParams:
    """Trainable encoder weights: token embeddings, dense head weight and bias."""

    embed: np.ndarray
    dense_w: np.ndarray
    dense_b: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.dense_w.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.dense_w.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.embed.shape[0]


@dataclass
class ProjectionHead:
    """Affine map after tanh: z = w . tanh(i) + b."""

    w: np.ndarray
    b: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class TokenView:
    """A token sequence with optional inverted-dropout scale masks.

    ``token_scale`` (L x H) rescales each token embedding; ``pooled_scale``
    (H,) rescales the mean-pooled vector. Both hold 0 or 1/(1-p) entries.
    """

    tokens: np.ndarray
    token_scale: np.ndarray | None = None
    pooled_scale: np.ndarray | None = None


@dataclass
class TrainBatch:
    """Views plus supervision for one gradient step.

    ``views`` are interleaved pairs (rows 2i, 2i+1 belong to sample i) for the
    pair losses, or a flat list for plain cross-entropy. ``labels`` are per
    pair for pair losses and per view for cross-entropy. ``labeled_mask``
    marks which pairs carry known-class labels in the semi-supervised losses.
    """

    views: object
    labels: np.ndarray | None = None
    labeled_mask: np.ndarray | None = None


def init_encoder_params(vocab_size: int, hidden_dim: int, feature_dim: int,
                        rng: np.random.Generator) -> EncoderParams:
    """Uniform init in +/- 0.5/sqrt(fan_in); biases start at zero."""
    bound = 0.5 / np.sqrt(hidden_dim)
    return EncoderParams(
        embed=rng.uniform(-bound, bound, size=(vocab_size, hidden_dim)),
        dense_w=rng.uniform(-bound, bound, size=(hidden_dim, feature_dim)),
        dense_b=np.zeros(feature_dim),
    )


def init_projection_head(feature_dim: int, out_dim: int, rng: np.random.Generator) -> ProjectionHead:
    bound = 0.5 / np.sqrt(feature_dim)
    return ProjectionHead(
        w=rng.uniform(-bound, bound, size=(feature_dim, out_dim)),
        b=np.zeros(out_dim),
    )


def encode(params: EncoderParams, view) -> np.ndarray:
    """Feature vector of a single sample (token sequence, TokenView, or raw features)."""
    vec, _ = encode_batch(params, [view])
    return vec[0]


def encode_batch(params: EncoderParams, views):
    """Encode a batch of views; returns (features n x D, cache for the backward pass)."""
    if isinstance(views, np.ndarray) and views.ndim == 2:
        if views.shape[1] != params.hidden_dim:
            raise ValueError(f"feature views of width {views.shape[1]} do not match hidden size {params.hidden_dim}")
        pooled = np.asarray(views, dtype=np.float64)
        cache = _ForwardCache(token_views=None, pooled=pooled)
    else:
        token_views = [_as_token_view(v) for v in views]
        pooled = np.empty((len(token_views), params.hidden_dim))
        for i, tv in enumerate(token_views):
            if tv.tokens.size == 0:
                raise ValueError("cannot encode an empty token sequence")
            if tv.tokens.max() >= params.vocab_size or tv.tokens.min() < 0:
                raise IndexError(f"token index outside vocabulary of size {params.vocab_size}")
            emb = params.embed[tv.tokens]
            if tv.token_scale is not None:
                emb = emb * tv.token_scale
            s = emb.mean(axis=0)
            if tv.pooled_scale is not None:
                s = s * tv.pooled_scale
            pooled[i] = s
        cache = _ForwardCache(token_views=token_views, pooled=pooled)
    return pooled @ params.dense_w + params.dense_b, cache


def project(head: ProjectionHead, vec) -> np.ndarray:
    """Head output for one feature vector: w . tanh(vec) + b."""
    return np.tanh(np.asarray(vec, dtype=np.float64)) @ head.w + head.b


def project_batch(head: ProjectionHead, feats: np.ndarray) -> np.ndarray:
    return np.tanh(feats) @ head.w + head.b


# Head roles consumed by each loss kind.
LOSS_HEADS = {
    "unsup_contrastive": ("contrastive",),
    "two_view_ce": ("classifier",),
    "sup_contrastive": ("instance",),
    "self_supervised": ("classifier", "instance"),
    "cross_entropy": ("classifier",),
    "semi_contrastive": ("contrastive",),
    "semi_pretrain": ("contrastive", "known_classifier"),
}


def batch_loss(params: EncoderParams, heads: dict, batch: TrainBatch,
               loss_kind: str, tau: float) -> float:
    """Forward-only loss evaluation (also the value path checked by finite differences)."""
    feats, _ = encode_batch(params, batch.views)
    if loss_kind == "unsup_contrastive":
        z = project_batch(heads["contrastive"], feats)
        return objectives.unsup_contrastive_loss(ContrastiveBatch(z, tau))
    if loss_kind == "cross_entropy":
        return objectives.cross_entropy(project_batch(heads["classifier"], feats), batch.labels)
    if loss_kind == "two_view_ce":
        z = project_batch(heads["classifier"], feats)
        return objectives.two_view_ce_loss(z[0::2], z[1::2], batch.labels)
    if loss_kind == "sup_contrastive":
        z = project_batch(heads["instance"], feats)
        return objectives.sup_contrastive_loss(ContrastiveBatch(z, tau, np.repeat(batch.labels, 2)))
    if loss_kind == "self_supervised":
        zc = project_batch(heads["classifier"], feats)
        zi = project_batch(heads["instance"], feats)
        inst = ContrastiveBatch(zi, tau, np.repeat(batch.labels, 2))
        return objectives.self_supervised_loss(zc[0::2], zc[1::2], inst, batch.labels)
    if loss_kind == "semi_contrastive":
        z = project_batch(heads["contrastive"], feats)
        return objectives.semi_contrastive_loss(
            ContrastiveBatch(z, tau, np.repeat(batch.labels, 2)), batch.labeled_mask)
    if loss_kind == "semi_pretrain":
        z = project_batch(heads["contrastive"], feats)
        semi = objectives.semi_contrastive_loss(
            ContrastiveBatch(z, tau, np.repeat(batch.labels, 2)), batch.labeled_mask)
        rows = np.flatnonzero(np.repeat(batch.labeled_mask, 2))
        zl = project_batch(heads["known_classifier"], feats[rows])
        return semi + objectives.cross_entropy(zl, np.repeat(batch.labels, 2)[rows])
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def grad_backprop(params: EncoderParams, heads: dict, batch: TrainBatch,
                  loss_kind: str, tau: float):
    """Loss and exact analytic gradients for every trainable parameter.

    Returns ``(loss, grads)`` where ``grads`` maps the same names as
    :func:`param_tree` restricted to the encoder and the heads the loss reads.
    """
    feats, cache = encode_batch(params, batch.views)
    d_feats = np.zeros_like(feats)
    grads: dict = {}

    def through_head(name: str, rows, d_z):
        head = heads[name]
        sub = feats[rows] if rows is not None else feats
        t = np.tanh(sub)
        grads[f"head.{name}.w"] = t.T @ d_z
        grads[f"head.{name}.b"] = d_z.sum(axis=0)
        d_sub = (d_z @ head.w.T) * (1.0 - t * t)
        if rows is None:
            d_feats[:] += d_sub
        else:
            np.add.at(d_feats, rows, d_sub)

    if loss_kind == "unsup_contrastive":
        z = project_batch(heads["contrastive"], feats)
        loss, dz = objectives.unsup_contrastive_grad(ContrastiveBatch(z, tau))
        through_head("contrastive", None, dz)
    elif loss_kind == "cross_entropy":
        z = project_batch(heads["classifier"], feats)
        loss, dz = objectives.cross_entropy_grad(z, batch.labels)
        through_head("classifier", None, dz)
    elif loss_kind == "two_view_ce":
        loss = _two_view_ce_backward(heads, feats, batch.labels, through_head)
    elif loss_kind == "sup_contrastive":
        z = project_batch(heads["instance"], feats)
        loss, dz = objectives.sup_contrastive_grad(
            ContrastiveBatch(z, tau, np.repeat(batch.labels, 2)))
        through_head("instance", None, dz)
    elif loss_kind == "self_supervised":
        ce_part = _two_view_ce_backward(heads, feats, batch.labels, through_head)
        zi = project_batch(heads["instance"], feats)
        scl_part, dzi = objectives.sup_contrastive_grad(
            ContrastiveBatch(zi, tau, np.repeat(batch.labels, 2)))
        through_head("instance", None, dzi)
        loss = ce_part + scl_part
    elif loss_kind == "semi_contrastive":
        z = project_batch(heads["contrastive"], feats)
        loss, dz = objectives.semi_contrastive_grad(
            ContrastiveBatch(z, tau, np.repeat(batch.labels, 2)), batch.labeled_mask)
        through_head("contrastive", None, dz)
    elif loss_kind == "semi_pretrain":
        z = project_batch(heads["contrastive"], feats)
        semi, dz = objectives.semi_contrastive_grad(
            ContrastiveBatch(z, tau, np.repeat(batch.labels, 2)), batch.labeled_mask)
        through_head("contrastive", None, dz)
        rows = np.flatnonzero(np.repeat(batch.labeled_mask, 2))
        zl = project_batch(heads["known_classifier"], feats[rows])
        ce_part, dzl = objectives.cross_entropy_grad(zl, np.repeat(batch.labels, 2)[rows])
        through_head("known_classifier", rows, dzl)
        loss = semi + ce_part
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")

    grads.update(_encode_backward(params, cache, d_feats))
    return loss, grads


def param_tree(params: EncoderParams, heads: dict | None = None) -> dict:
    """Flat name -> array view of all trainable parameters (live references)."""
    tree = {"embed": params.embed, "dense_w": params.dense_w, "dense_b": params.dense_b}
    for name, head in (heads or {}).items():
        tree[f"head.{name}.w"] = head.w
        tree[f"head.{name}.b"] = head.b
    return tree


def save_checkpoint(params: EncoderParams, path) -> None:
    """Write parameters as line-oriented text: a shape line then row-major float reprs."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("intentcluster-params 1\n")
        for name in ("embed", "dense_w", "dense_b"):
            arr = np.atleast_2d(getattr(params, name))
            fh.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_checkpoint(path) -> EncoderParams:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "intentcluster-params 1":
        raise ValueError(f"{path}: not an encoder checkpoint")
    cursor = 1
    arrays = {}
    for name in ("embed", "dense_w", "dense_b"):
        header = lines[cursor].split()
        if len(header) != 3 or header[0] != name:
            raise ValueError(f"{path}: expected '{name} <rows> <cols>' at line {cursor + 1}")
        rows, cols = int(header[1]), int(header[2])
        cursor += 1
        block = [np.array([float(x) for x in lines[cursor + r].split()]) for r in range(rows)]
        cursor += rows
        arrays[name] = np.array(block).reshape(rows, cols) if rows else np.zeros((0, cols))
    return EncoderParams(embed=arrays["embed"], dense_w=arrays["dense_w"],
                         dense_b=arrays["dense_b"][0])


@dataclass
class _ForwardCache:
    token_views: list | None
    pooled: np.ndarray


def _as_token_view(view) -> TokenView:
    if isinstance(view, TokenView):
        return view
    if isinstance(view, Utterance):
        return TokenView(tokens=np.asarray(view.tokens, dtype=np.int64))
    return TokenView(tokens=np.asarray(view, dtype=np.int64))


def _two_view_ce_backward(heads, feats, pair_labels, through_head) -> float:
    z = project_batch(heads["classifier"], feats)
    loss_a, grad_a = objectives.cross_entropy_grad(z[0::2], pair_labels)
    loss_b, grad_b = objectives.cross_entropy_grad(z[1::2], pair_labels)
    dz = np.zeros_like(z)
    dz[0::2] = grad_a / 2.0
    dz[1::2] = grad_b / 2.0
    through_head("classifier", None, dz)
    return 0.5 * (loss_a + loss_b)


def _encode_backward(params: EncoderParams, cache: _ForwardCache, d_feats: np.ndarray) -> dict:
    grads = {
        "dense_w": cache.pooled.T @ d_feats,
        "dense_b": d_feats.sum(axis=0),
        "embed": np.zeros_like(params.embed),
    }
    if cache.token_views is not None:
        d_pooled = d_feats @ params.dense_w.T
        for i, tv in enumerate(cache.token_views):
            g = d_pooled[i]
            if tv.pooled_scale is not None:
                g = g * tv.pooled_scale
            g = g / tv.tokens.size
            contrib = np.broadcast_to(g, (tv.tokens.size, g.size))
            if tv.token_scale is not None:
                contrib = contrib * tv.token_scale
            np.add.at(grads["embed"], tv.tokens, contrib)
    return grads
