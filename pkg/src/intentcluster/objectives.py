"""Loss functions for pre-training and self-supervised training, with analytic gradients.

All contrastive losses operate on L2-normalized projected views; similarities
are dot products of the normalized rows divided by the temperature. Views of
the same source pair sit on adjacent rows (2i, 2i+1). Gradient companions
return the loss along with the exact gradient with respect to the raw
(unnormalized) input rows.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContrastiveBatch:
    """Projected views with pairs adjacent, plus optional per-view class labels."""

    z: np.ndarray
    tau: float
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.z.ndim != 2 or self.z.shape[0] % 2 != 0 or self.z.shape[0] < 2:
            raise ValueError(f"batch needs an even number (>= 2) of view rows, got shape {self.z.shape}")
        if self.tau <= 0:
            raise ValueError(f"temperature must be positive, got {self.tau}")
        if self.labels is not None and len(self.labels) != self.z.shape[0]:
            raise ValueError("labels must cover every view row")

    @property
    def n_views(self) -> int:
        return self.z.shape[0]


def unsup_contrastive_loss(batch: ContrastiveBatch) -> float:
    """Instance-discrimination loss: each view attracts its augmented partner
    against all other views in the batch."""
    return _pairwise_terms(batch, _partner_positives(batch.n_views))[0]


def unsup_contrastive_grad(batch: ContrastiveBatch):
    return _pairwise_terms(batch, _partner_positives(batch.n_views), with_grad=True)


def sup_contrastive_loss(batch: ContrastiveBatch) -> float:
    """Label-driven contrastive loss: positives are all other views sharing the
    anchor's class. Anchors without any positive are skipped and the mean is
    taken over the remaining anchors."""
    pos, _ = _label_positives(batch)
    return _pairwise_terms(batch, pos, renormalize=True)[0]


def sup_contrastive_grad(batch: ContrastiveBatch):
    pos, _ = _label_positives(batch)
    return _pairwise_terms(batch, pos, renormalize=True, with_grad=True)


def semi_contrastive_loss(batch: ContrastiveBatch, labeled_mask) -> float:
    """Mixed batch: labeled anchors use same-class positives, unlabeled anchors
    use their augmented partner; the sum is normalized by the view count."""
    return _pairwise_terms(batch, _semi_positives(batch, labeled_mask))[0]


def semi_contrastive_grad(batch: ContrastiveBatch, labeled_mask):
    return _pairwise_terms(batch, _semi_positives(batch, labeled_mask), with_grad=True)


def cross_entropy(logits, targets) -> float:
    """Mean negative log-softmax of the target class; 0.0 on an empty batch."""
    return cross_entropy_grad(logits, targets)[0]


def cross_entropy_grad(logits, targets):
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n = logits.shape[0]
    if n == 0:
        return 0.0, np.zeros_like(logits)
    if targets.min() < 0 or targets.max() >= logits.shape[1]:
        raise IndexError(f"target outside [0, {logits.shape[1]})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1)) + logits.max(axis=1)
    loss = float(np.mean(logsumexp - logits[np.arange(n), targets]))
    softmax = np.exp(logits - logsumexp[:, None])
    softmax[np.arange(n), targets] -= 1.0
    return loss, softmax / n


def two_view_ce_loss(z, z_prime, targets) -> float:
    """Average cross-entropy of the two augmented views against shared targets."""
    return 0.5 * (cross_entropy(z, targets) + cross_entropy(z_prime, targets))


def self_supervised_loss(z_cls, z_cls_prime, inst_batch: ContrastiveBatch, pair_labels) -> float:
    """Cluster-level classification plus instance-level contrastive term, unweighted."""
    return two_view_ce_loss(z_cls, z_cls_prime, pair_labels) + sup_contrastive_loss(inst_batch)


def semi_pretrain_loss(batch: ContrastiveBatch, labeled_mask, labeled_logits, labeled_targets) -> float:
    """Semi-supervised contrastive term plus known-class cross-entropy on the labeled views."""
    return semi_contrastive_loss(batch, labeled_mask) + cross_entropy(labeled_logits, labeled_targets)


def _partner_positives(n_views: int) -> np.ndarray:
    pos = np.zeros((n_views, n_views))
    idx = np.arange(n_views)
    pos[idx, idx ^ 1] = 1.0
    return pos


def _label_positives(batch: ContrastiveBatch):
    if batch.labels is None:
        raise ValueError("supervised contrastive loss needs per-view labels")
    labels = np.asarray(batch.labels)
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    return same.astype(np.float64), same.sum(axis=1)


def _semi_positives(batch: ContrastiveBatch, labeled_mask) -> np.ndarray:
    mask = np.repeat(np.asarray(labeled_mask, dtype=bool), 2)
    if len(mask) != batch.n_views:
        raise ValueError("labeled_mask must have one flag per pair")
    pos = _partner_positives(batch.n_views)
    if mask.any():
        if batch.labels is None:
            raise ValueError("labeled pairs need labels")
        labels = np.asarray(batch.labels)
        same = (labels[:, None] == labels[None, :]) & mask[None, :] & mask[:, None]
        np.fill_diagonal(same, False)
        pos[mask] = same[mask].astype(np.float64)
    return pos


def _pairwise_terms(batch: ContrastiveBatch, positives: np.ndarray,
                    renormalize: bool = False, with_grad: bool = False):
    """Shared core: mean over anchors of log-denominator minus mean positive similarity.

    ``positives`` is a 0/1 matrix marking each anchor's positive set. Anchors
    with an empty positive set contribute nothing; with ``renormalize`` the
    mean is taken over contributing anchors only, otherwise over all views.
    """
    zhat, norms = _normalize_rows(batch.z)
    m = batch.n_views
    sims = (zhat @ zhat.T) / batch.tau

    off = sims.copy()
    np.fill_diagonal(off, -np.inf)
    row_max = off.max(axis=1)
    expd = np.exp(off - row_max[:, None])
    np.fill_diagonal(expd, 0.0)
    denom = expd.sum(axis=1)
    logdenom = row_max + np.log(denom)

    pos_counts = positives.sum(axis=1)
    valid = pos_counts > 0
    scale = float(valid.sum()) if renormalize else float(m)
    if scale == 0.0:
        return (0.0, np.zeros_like(batch.z)) if with_grad else (0.0,)

    weights = np.zeros(m)
    weights[valid] = 1.0 / pos_counts[valid]
    mean_pos_sim = (positives * sims).sum(axis=1) * weights
    loss = float(((logdenom - mean_pos_sim) * valid).sum() / scale)
    if not with_grad:
        return (loss,)

    softmax = expd / denom[:, None]
    grad_sims = (softmax - positives * weights[:, None]) * valid[:, None] / scale
    grad_zhat = ((grad_sims + grad_sims.T) @ zhat) / batch.tau
    proj = (zhat * grad_zhat).sum(axis=1, keepdims=True)
    grad_z = (grad_zhat - zhat * proj) / norms[:, None]
    return loss, grad_z


def _normalize_rows(z):
    z = np.asarray(z, dtype=np.float64)
    norms = np.sqrt((z * z).sum(axis=1))
    if np.any(norms == 0.0):
        raise ValueError("cannot L2-normalize a zero row")
    return z / norms[:, None], norms
