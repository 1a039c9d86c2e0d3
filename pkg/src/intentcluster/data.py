"""Corpus ingestion, labeled/unlabeled splitting, and data augmentations.

Two on-disk formats are supported:

* text TSV: one ``text<TAB>label`` row per sample, tokens are whitespace-split;
* embedding matrix: header ``dim=<d>`` then ``id<TAB>label<TAB>f1<TAB>...<TAB>fd`` rows.

Ground-truth labels are kept out of the sample objects entirely; they live in
a private corpus field reachable only through :meth:`Corpus.ground_truth`,
which is for evaluation. Training code sees ``known_label`` only, and only on
the labeled subset produced by :func:`make_semi_split`.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, EmptyCorpusError, ParseError


@dataclass(frozen=True)
class Utterance:
    """A tokenized sample. ``known_label`` is training supervision, present only on the labeled subset."""

    tokens: tuple
    raw_text: str = ""
    known_label: int | None = None


@dataclass(frozen=True)
class AugmentedPair:
    """Two stochastic views of the same source sample."""

    view_a: object
    view_b: object
    source_index: int


@dataclass(frozen=True)
class Corpus:
    utterances: tuple
    vocab: dict
    label_names: tuple
    k_total: int
    k_known: int = 0
    labeled_indices: tuple = ()
    features: np.ndarray | None = None
    _gt_labels: np.ndarray | None = None

    def __post_init__(self):
        if self.k_known > self.k_total:
            raise ValueError("k_known exceeds k_total")
        for i in self.labeled_indices:
            if self.utterances[i].known_label is None:
                raise ValueError(f"labeled index {i} has no known_label")
        if self.features is None:
            v = len(self.vocab)
            for u in self.utterances:
                if not u.tokens:
                    raise ValueError("utterance with empty token sequence")
                if any(t < 0 or t >= v for t in u.tokens):
                    raise ValueError("token index outside vocabulary")
        elif self.features.shape[0] != len(self.utterances):
            raise ValueError("feature row count does not match utterance count")

    @property
    def n(self) -> int:
        return len(self.utterances)

    @property
    def is_feature_mode(self) -> bool:
        return self.features is not None

    @property
    def dim(self) -> int:
        """Input width seen by the encoder: feature dimension or vocabulary size."""
        return self.features.shape[1] if self.is_feature_mode else len(self.vocab)

    def ground_truth(self) -> np.ndarray:
        """Evaluation-only accessor for the hidden class labels."""
        if self._gt_labels is None:
            raise ValueError("corpus carries no ground-truth labels")
        return self._gt_labels.copy()

    def known_label_array(self) -> np.ndarray:
        """Per-sample known-class labels, -1 where absent."""
        return np.array([-1 if u.known_label is None else u.known_label
                         for u in self.utterances], dtype=np.int64)


def load_corpus(path, fmt: str | None = None, vocab: dict | None = None) -> Corpus:
    """Read a corpus file. ``fmt`` is ``"tsv"``, ``"embedding"``, or None to sniff the header.

    Passing the ``vocab`` of an already-loaded corpus freezes the token
    mapping (for held-out splits encoded with a trained table); tokens
    outside it are dropped, and a row losing every token is a parse error.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if fmt is None:
        fmt = "embedding" if lines and lines[0].startswith("dim=") else "tsv"
    if fmt == "tsv":
        return _load_tsv(path, lines, vocab)
    if fmt == "embedding":
        return _load_embedding(path, lines)
    raise ValueError(f"unknown corpus format {fmt!r}")


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus back in its native format (text TSV or embedding matrix)."""
    gt = corpus.ground_truth()
    with open(path, "w", encoding="utf-8") as fh:
        if corpus.is_feature_mode:
            fh.write(f"dim={corpus.features.shape[1]}\n")
            for i, u in enumerate(corpus.utterances):
                row = "\t".join(repr(float(x)) for x in corpus.features[i])
                fh.write(f"{u.raw_text or i}\t{corpus.label_names[gt[i]]}\t{row}\n")
        else:
            inverse = {idx: tok for tok, idx in corpus.vocab.items()}
            for i, u in enumerate(corpus.utterances):
                text = u.raw_text or " ".join(inverse[t] for t in u.tokens)
                fh.write(f"{text}\t{corpus.label_names[gt[i]]}\n")


def make_semi_split(corpus: Corpus, kcr: float, labeled_ratio: float,
                    rng: np.random.Generator) -> Corpus:
    """Select known classes and reveal known-class labels on a fraction of their samples.

    ``round(kcr * K)`` classes (half-up) are drawn uniformly; within each,
    ``labeled_ratio`` of the samples (half-up, at least one) get their class
    exposed as ``known_label``. Everything else stays unlabeled; hidden
    ground truth is retained for evaluation.
    """
    if not 0.0 <= kcr <= 1.0:
        raise ValueError(f"kcr must be in [0, 1], got {kcr}")
    if not 0.0 < labeled_ratio <= 1.0:
        raise ValueError(f"labeled_ratio must be in (0, 1], got {labeled_ratio}")
    gt = corpus.ground_truth()
    k_known = _round_half_up(kcr * corpus.k_total)
    if kcr > 0.0 and k_known == 0:
        raise ConfigError(f"kcr={kcr} selects zero known classes out of {corpus.k_total}")

    class_order = rng.permutation(corpus.k_total)
    known_classes = np.sort(class_order[:k_known])
    # remap known classes to dense indices 0..k_known-1 for supervision heads
    dense = {int(c): i for i, c in enumerate(known_classes)}

    labeled = set()
    for c in known_classes:
        members = np.flatnonzero(gt == c)
        count = max(1, _round_half_up(len(members) * labeled_ratio))
        picked = rng.choice(members, size=min(count, len(members)), replace=False)
        labeled.update(int(i) for i in picked)

    utterances = tuple(
        replace(u, known_label=dense[int(gt[i])]) if i in labeled else replace(u, known_label=None)
        for i, u in enumerate(corpus.utterances)
    )
    return replace(corpus, utterances=utterances, k_known=k_known,
                   labeled_indices=tuple(sorted(labeled)))


def random_erase(u: Utterance, a: float, rng: np.random.Generator) -> Utterance:
    """Remove ``floor(L * a)`` distinct token positions, keeping survivor order."""
    if not 0.0 <= a < 1.0:
        raise ValueError(f"erase fraction must be in [0, 1), got {a}")
    length = len(u.tokens)
    count = int(np.floor(length * a + 1e-9))
    if count == 0:
        return u
    drop = set(rng.choice(length, size=count, replace=False).tolist())
    kept = tuple(t for i, t in enumerate(u.tokens) if i not in drop)
    return replace(u, tokens=kept)


def feature_dropout(v, p: float, rng: np.random.Generator) -> np.ndarray:
    """Zero each coordinate with probability p and scale survivors by 1/(1-p)."""
    v = np.asarray(v, dtype=np.float64)
    return v * dropout_scale_mask(v.shape, p, rng)


def dropout_scale_mask(shape, p: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask of 0 / (1/(1-p)) entries; expectation-preserving."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= p) / (1.0 - p)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5 + 1e-9))


def _load_tsv(path, lines, vocab: dict | None) -> Corpus:
    frozen = vocab is not None
    vocab = dict(vocab) if frozen else {}
    label_index: dict = {}
    utterances = []
    gt = []
    for ln, line in enumerate(lines, start=1):
        if line == "":
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(path, ln, f"expected 'text<TAB>label', got {len(parts)} fields")
        text, label = parts
        words = text.split()
        if not words:
            raise ParseError(path, ln, "empty text")
        if frozen:
            tokens = tuple(vocab[w] for w in words if w in vocab)
            if not tokens:
                raise ParseError(path, ln, "every token is outside the supplied vocabulary")
        else:
            tokens = tuple(vocab.setdefault(w, len(vocab)) for w in words)
        gt.append(label_index.setdefault(label, len(label_index)))
        utterances.append(Utterance(tokens=tokens, raw_text=text))
    if not utterances:
        raise EmptyCorpusError(f"{path}: no samples")
    return Corpus(utterances=tuple(utterances), vocab=vocab,
                  label_names=tuple(label_index), k_total=len(label_index),
                  _gt_labels=np.array(gt, dtype=np.int64))


def _load_embedding(path, lines) -> Corpus:
    if not lines or not lines[0].startswith("dim="):
        raise ParseError(path, 1, "missing 'dim=<d>' header")
    try:
        dim = int(lines[0][4:])
    except ValueError:
        raise ParseError(path, 1, f"bad dimension in header {lines[0]!r}") from None
    label_index: dict = {}
    utterances = []
    gt = []
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split("\t")
        if len(parts) != 2 + dim:
            raise ParseError(path, ln, f"expected id, label and {dim} values, got {len(parts)} fields")
        try:
            rows.append([float(x) for x in parts[2:]])
        except ValueError as exc:
            raise ParseError(path, ln, str(exc)) from None
        gt.append(label_index.setdefault(parts[1], len(label_index)))
        utterances.append(Utterance(tokens=(), raw_text=parts[0]))
    if not utterances:
        raise EmptyCorpusError(f"{path}: no samples")
    return Corpus(utterances=tuple(utterances), vocab={},
                  label_names=tuple(label_index), k_total=len(label_index),
                  features=np.array(rows, dtype=np.float64),
                  _gt_labels=np.array(gt, dtype=np.int64))
