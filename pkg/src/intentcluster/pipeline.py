"""End-to-end unsupervised and semi-supervised training pipelines.

Both pipelines pre-train the encoder contrastively, then alternate clustering
and representation learning. Clustering is seeded once with K-Means++ and
warm-started from the previous centroids afterwards, so cluster indices stay
consistent across iterations and the assignments serve directly as
self-supervised targets. Training stops when the fraction of samples that
changed cluster drops below the configured threshold.
"""

import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .alignment import align_centroids, label_change_fraction
from .clustering import ClusterState, kmeans_run
from .data import Corpus, dropout_scale_mask, feature_dropout, random_erase
from .encoder import (EncoderParams, TokenView, TrainBatch, encode_batch,
                      grad_backprop, init_encoder_params, init_projection_head,
                      param_tree)
from .errors import ConfigError, TrainingError
from .estimation import ClusterEstimate, estimate_k_semi, estimate_k_unsup
from .metrics import ari, clustering_accuracy, nmi
from .optim import AdamWState, adamw_step


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a run; one of ``k`` (known cluster count) or ``k_prime``
    (over-clustering count for estimation) must be set."""

    tau: float = 0.07
    erase_frac: float = 0.5
    dropout_p: float = 0.1
    delta_threshold: float = 5e-4
    batch_pairs: int = 128
    pretrain_epochs: int = 10
    max_train_iterations: int = 100
    k: int | None = None
    k_prime: int | None = None
    hidden_dim: int = 64
    feature_dim: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    kmeans_tol: float = 1e-6
    kmeans_max_iter: int = 300
    kmeans_restarts: int = 10
    kmeans_seed_trials: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.erase_frac < 1.0:
            raise ConfigError(f"erase fraction must be in [0, 1), got {self.erase_frac}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout_p}")
        if self.delta_threshold <= 0:
            raise ConfigError("delta threshold must be positive")
        if self.batch_pairs < 1 or self.pretrain_epochs < 0 or self.max_train_iterations < 0:
            raise ConfigError("batch size and iteration counts must be non-negative (batch >= 1)")
        if (self.k is None) == (self.k_prime is None):
            raise ConfigError("exactly one of k and k_prime must be set")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.k_prime is not None and self.k_prime < 1:
            raise ConfigError(f"k_prime must be >= 1, got {self.k_prime}")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    delta: float
    objective: float
    align_identity: bool


@dataclass
class RunReport:
    """Everything a run produced; serialized by the CLI's report emitter."""

    mode: str
    seed: int
    config: dict
    n_train: int
    n_test: int
    k_used: int
    estimated_k: int | None
    iterations: int
    converged: bool
    records: tuple
    final_assignment: np.ndarray
    metrics: dict
    wall_clock_s: float

    @property
    def delta_trace(self) -> tuple:
        return tuple(r.delta for r in self.records)

    @property
    def align_identity_fraction(self) -> float | None:
        if not self.records:
            return None
        return float(np.mean([r.align_identity for r in self.records]))


def pretrain_unsup(corpus: Corpus, config: RunConfig, rng: np.random.Generator | None = None) -> EncoderParams:
    """Contrastive pre-training on augmented pairs; the projection head used
    here is dropped from the returned model."""
    rng = _rng_for(config, rng)
    out_dim = config.k if config.k is not None else config.k_prime
    params, heads = _init_model(corpus, config, rng, {"contrastive": out_dim})
    _pretrain_epochs(corpus, config, rng, params, heads, _all_pairs_stage(corpus, config))
    return params


def pretrain_semi(corpus: Corpus, config: RunConfig, rng: np.random.Generator | None = None) -> EncoderParams:
    """Pre-training on mixed labeled/unlabeled dropout pairs with a known-class
    classification term; both heads are dropped from the returned model.

    Without any labeled data this degenerates to unsupervised pre-training
    over dropout pairs.
    """
    rng = _rng_for(config, rng)
    labeled = np.asarray(corpus.labeled_indices, dtype=np.int64)
    if labeled.size == 0:
        out_dim = config.k if config.k is not None else config.k_prime
        params, heads = _init_model(corpus, config, rng, {"contrastive": out_dim})
        stage = lambda idx, r: _dropout_pair_views(corpus, idx, config.dropout_p, r, params)
        _pretrain_epochs(corpus, config, rng, params, heads, stage)
        return params

    params, heads = _init_model(corpus, config, rng, {
        "contrastive": corpus.k_known,
        "known_classifier": corpus.k_known,
    })
    known = corpus.known_label_array()
    unlabeled = np.setdiff1d(np.arange(corpus.n), labeled)
    quota_l = (config.batch_pairs + 1) // 2
    quota_u = config.batch_pairs // 2
    opt = _optimizer(config)
    tree = param_tree(params, heads)
    labeled_pool = _PoolSampler(labeled, rng)
    unlabeled_pool = _PoolSampler(unlabeled, rng) if unlabeled.size else None
    batches_per_epoch = max(1, corpus.n // config.batch_pairs)
    for _ in range(config.pretrain_epochs):
        for _ in range(batches_per_epoch):
            if unlabeled_pool is None:
                idx = labeled_pool.draw(config.batch_pairs)
            else:
                idx = np.concatenate([labeled_pool.draw(quota_l), unlabeled_pool.draw(quota_u)])
            mask = known[idx] >= 0
            batch = TrainBatch(views=_dropout_pair_views(corpus, idx, config.dropout_p, rng, params),
                               labels=known[idx], labeled_mask=mask)
            loss, grads = grad_backprop(params, heads, batch, "semi_pretrain", config.tau)
            _check_finite(loss)
            adamw_step(opt, tree, grads)
    return params


def train_loop(params: EncoderParams, corpus: Corpus, config: RunConfig, mode: str,
               rng: np.random.Generator | None = None):
    """Alternate warm-started clustering and self-supervised representation learning.

    Returns ``(params, final ClusterState, iteration records)``. In semi mode
    each iteration starts with one supervised-contrastive pass over the
    labeled pairs to keep same-class samples from drifting apart.
    """
    if config.k is None:
        raise ConfigError("train_loop needs a resolved cluster count; run estimation first")
    rng = _rng_for(config, rng)
    heads = {
        "classifier": init_projection_head(params.feature_dim, config.k, rng),
        "instance": init_projection_head(params.feature_dim, config.k, rng),
    }
    opt = _optimizer(config)
    tree = param_tree(params, heads)
    labeled = np.asarray(corpus.labeled_indices, dtype=np.int64)
    known = corpus.known_label_array()
    stage = _all_pairs_stage(corpus, config)

    records: list[IterationRecord] = []
    state = prev = None
    for t in range(config.max_train_iterations + 1):
        if mode == "semi" and labeled.size:
            for idx in _pair_batches(labeled, config.batch_pairs, rng):
                batch = TrainBatch(views=_dropout_pair_views(corpus, idx, config.dropout_p, rng, params),
                                   labels=known[idx])
                loss, grads = grad_backprop(params, heads, batch, "sup_contrastive", config.tau)
                _check_finite(loss)
                adamw_step(opt, tree, grads)
        feats = encode_corpus(params, corpus)
        if t == 0:
            # seeding happens only here; later iterations warm-start from the
            # previous centroids, so spend restarts on a good first partition
            state = None
            for _ in range(max(1, config.kmeans_restarts)):
                candidate = kmeans_run(feats, config.k, rng=rng,
                                       max_iter=config.kmeans_max_iter, tol=config.kmeans_tol,
                                       local_trials=config.kmeans_seed_trials)
                if state is None or candidate.objective < state.objective:
                    state = candidate
        else:
            state = kmeans_run(feats, prev.centroids,
                               max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
            delta = label_change_fraction(state.assignment, prev.assignment)
            identity = align_centroids(state.centroids, prev.centroids).is_identity
            records.append(IterationRecord(t, delta, state.objective, identity))
            if delta < config.delta_threshold:
                break
        if t == config.max_train_iterations:
            break
        pseudo = state.assignment
        for idx in _pair_batches(np.arange(corpus.n), config.batch_pairs, rng):
            batch = TrainBatch(views=stage(idx, rng), labels=pseudo[idx])
            loss, grads = grad_backprop(params, heads, batch, "self_supervised", config.tau)
            _check_finite(loss)
            adamw_step(opt, tree, grads)
        prev = state
    return params, state, records


def infer(params: EncoderParams, state: ClusterState, corpus: Corpus,
          *, max_iter: int = 300, tol: float = 1e-6) -> np.ndarray:
    """Cluster new samples by K-Means warm-started from the trained centroids."""
    feats = encode_corpus(params, corpus)
    return kmeans_run(feats, state.centroids, max_iter=max_iter, tol=tol).assignment


def run_experiment(train: Corpus, test: Corpus | None, config: RunConfig, mode: str,
                   rng: np.random.Generator | None = None,
                   params: EncoderParams | None = None) -> RunReport:
    """Pre-train (unless ``params`` is supplied), optionally estimate the cluster
    count, run the training loop, and evaluate the inferred assignment of the
    test split."""
    if mode not in ("unsup", "semi"):
        raise ConfigError(f"mode must be 'unsup' or 'semi', got {mode!r}")
    config.validate()
    rng = _rng_for(config, rng)
    started = time.perf_counter()

    if params is None:
        if mode == "semi":
            params = pretrain_semi(train, config, rng)
        else:
            params = pretrain_unsup(train, config, rng)

    estimate: ClusterEstimate | None = None
    k = config.k
    if k is None:
        feats = encode_corpus(params, train)
        labeled = np.asarray(train.labeled_indices, dtype=np.int64)
        if mode == "semi" and labeled.size:
            known = train.known_label_array()
            estimate = estimate_k_semi(feats, feats[labeled], known[labeled], config.k_prime,
                                       rng, max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
        else:
            estimate = estimate_k_unsup(feats, config.k_prime, rng,
                                        max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
        k = estimate.k_total

    loop_config = replace(config, k=k, k_prime=None)
    params, state, records = train_loop(params, train, loop_config, mode, rng)

    eval_corpus = test if test is not None else train
    assignment = infer(params, state, eval_corpus,
                       max_iter=config.kmeans_max_iter, tol=config.kmeans_tol)
    gt = eval_corpus.ground_truth()
    scores = {
        "nmi": nmi(gt, assignment),
        "ari": ari(gt, assignment),
        "acc": clustering_accuracy(gt, assignment),
    }
    return RunReport(
        mode=mode,
        seed=config.seed,
        config=asdict(config),
        n_train=train.n,
        n_test=eval_corpus.n,
        k_used=k,
        estimated_k=None if estimate is None else estimate.k_total,
        iterations=len(records),
        converged=bool(records) and records[-1].delta < config.delta_threshold,
        records=tuple(records),
        final_assignment=assignment,
        metrics=scores,
        wall_clock_s=time.perf_counter() - started,
    )


def encode_corpus(params: EncoderParams, corpus: Corpus) -> np.ndarray:
    """Plain (un-augmented) representations of every sample."""
    source = corpus.features if corpus.is_feature_mode else list(corpus.utterances)
    feats, _ = encode_batch(params, source)
    return feats


class _PoolSampler:
    """Draws batches from a fixed index pool, reshuffling whenever it runs dry,
    so small pools are effectively resampled with replacement."""

    def __init__(self, indices: np.ndarray, rng: np.random.Generator):
        self.indices = indices
        self.rng = rng
        self.queue: list = []

    def draw(self, count: int) -> np.ndarray:
        while len(self.queue) < count:
            self.queue.extend(self.rng.permutation(self.indices).tolist())
        out = np.array(self.queue[:count], dtype=np.int64)
        del self.queue[:count]
        return out


def _rng_for(config: RunConfig, rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(config.seed)


def _optimizer(config: RunConfig) -> AdamWState:
    return AdamWState(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2,
                      eps=config.adam_eps, weight_decay=config.weight_decay)


def _init_model(corpus: Corpus, config: RunConfig, rng: np.random.Generator, roles: dict):
    hidden = corpus.dim if corpus.is_feature_mode else config.hidden_dim
    vocab = 0 if corpus.is_feature_mode else len(corpus.vocab)
    params = init_encoder_params(vocab, hidden, config.feature_dim, rng)
    heads = {name: init_projection_head(config.feature_dim, out_dim, rng)
             for name, out_dim in roles.items()}
    return params, heads


def _pretrain_epochs(corpus, config, rng, params, heads, stage) -> None:
    opt = _optimizer(config)
    tree = param_tree(params, heads)
    for _ in range(config.pretrain_epochs):
        for idx in _pair_batches(np.arange(corpus.n), config.batch_pairs, rng):
            loss, grads = grad_backprop(params, heads, TrainBatch(views=stage(idx, rng)),
                                        "unsup_contrastive", config.tau)
            _check_finite(loss)
            adamw_step(opt, tree, grads)


def _pair_batches(pool: np.ndarray, batch_pairs: int, rng: np.random.Generator):
    """Shuffled full batches; the ragged tail is dropped unless it is all there is."""
    order = rng.permutation(pool)
    full = len(order) // batch_pairs
    if full == 0:
        if len(order):
            yield order
        return
    for b in range(full):
        yield order[b * batch_pairs:(b + 1) * batch_pairs]


def _all_pairs_stage(corpus: Corpus, config: RunConfig):
    """Augmentation for contrastive pre-training and self-supervised learning:
    random erase on token corpora, feature dropout on embedding corpora."""
    if corpus.is_feature_mode:
        return _dropout_pairs_stage(corpus, config)

    def stage(idx, rng):
        views = []
        for i in idx:
            u = corpus.utterances[i]
            views.append(random_erase(u, config.erase_frac, rng))
            views.append(random_erase(u, config.erase_frac, rng))
        return views

    return stage


def _dropout_pairs_stage(corpus: Corpus, config: RunConfig):
    def stage(idx, rng):
        return _dropout_pair_matrix(corpus, idx, config.dropout_p, rng)

    return stage


def _dropout_pair_matrix(corpus: Corpus, idx, p: float, rng) -> np.ndarray:
    rows = np.empty((2 * len(idx), corpus.features.shape[1]))
    for j, i in enumerate(idx):
        rows[2 * j] = feature_dropout(corpus.features[i], p, rng)
        rows[2 * j + 1] = feature_dropout(corpus.features[i], p, rng)
    return rows


def _dropout_pair_views(corpus: Corpus, idx, p: float, rng, params: EncoderParams):
    """Two stochastic encoder passes per sample: dropout masks on the token
    embeddings and the pooled vector (token mode) or on the features directly."""
    if corpus.is_feature_mode:
        return _dropout_pair_matrix(corpus, idx, p, rng)
    views = []
    for i in idx:
        u = corpus.utterances[i]
        for _ in range(2):
            views.append(_dropout_token_view(u, p, rng, params.hidden_dim))
    return views


def _dropout_token_view(u, p: float, rng, hidden: int) -> TokenView:
    tokens = np.asarray(u.tokens, dtype=np.int64)
    if p == 0.0:
        return TokenView(tokens=tokens)
    return TokenView(tokens=tokens,
                     token_scale=dropout_scale_mask((tokens.size, hidden), p, rng),
                     pooled_scale=dropout_scale_mask(hidden, p, rng))


def _check_finite(loss: float) -> None:
    if not np.isfinite(loss):
        raise TrainingError(f"training loss became non-finite ({loss})")
