import numpy as np
import pytest

from intentcluster.data import (Corpus, Utterance, feature_dropout, load_corpus,
                                make_semi_split, random_erase, save_corpus)
from intentcluster.errors import ConfigError, EmptyCorpusError, ParseError


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadTsv:
    def test_two_line_corpus(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "c.tsv", "hello there\ta\nbye now\tb\n"))
        assert corpus.n == 2
        assert corpus.k_total == 2
        assert not corpus.is_feature_mode

    def test_whitespace_tokenization(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "c.tsv", "hello world\ta\n"))
        assert len(corpus.utterances[0].tokens) == 2
        assert corpus.utterances[0].raw_text == "hello world"

    def test_vocabulary_indices_are_dense(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "c.tsv", "a b c\tx\nb c d\ty\n"))
        assert sorted(corpus.vocab.values()) == [0, 1, 2, 3]

    def test_malformed_row_reports_line_number(self, tmp_path):
        path = write(tmp_path, "c.tsv", "good row\ta\nbad row without tab\n")
        with pytest.raises(ParseError, match="2"):
            load_corpus(path)

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(EmptyCorpusError):
            load_corpus(write(tmp_path, "c.tsv", ""))

    def test_labels_hidden_from_samples(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "c.tsv", "hello\ta\nbye\tb\n"))
        assert corpus.ground_truth().tolist() == [0, 1]
        assert all(u.known_label is None for u in corpus.utterances)


class TestLoadEmbedding:
    def test_feature_rows(self, tmp_path):
        text = "dim=3\nu0\ta\t1.0\t2.0\t3.0\nu1\tb\t0.5\t0.25\t0.125\n"
        corpus = load_corpus(write(tmp_path, "c.emb", text))
        assert corpus.is_feature_mode
        assert corpus.features.shape == (2, 3)
        assert corpus.features[1].tolist() == [0.5, 0.25, 0.125]

    def test_dimension_mismatch_is_parse_error(self, tmp_path):
        text = "dim=4\nu0\ta\t1.0\t2.0\t3.0\n"
        with pytest.raises(ParseError, match="2"):
            load_corpus(write(tmp_path, "c.emb", text))

    def test_bad_float_is_parse_error(self, tmp_path):
        text = "dim=2\nu0\ta\t1.0\tnot-a-number\n"
        with pytest.raises(ParseError):
            load_corpus(write(tmp_path, "c.emb", text))


class TestRoundTrip:
    def test_tsv_roundtrip(self, tmp_path):
        src = write(tmp_path, "c.tsv", "hello there\ta\nbye now\tb\nhello again\ta\n")
        corpus = load_corpus(src)
        out = tmp_path / "back.tsv"
        save_corpus(corpus, out)
        again = load_corpus(out)
        assert [u.raw_text for u in again.utterances] == [u.raw_text for u in corpus.utterances]
        assert again.ground_truth().tolist() == corpus.ground_truth().tolist()
        assert [u.tokens for u in again.utterances] == [u.tokens for u in corpus.utterances]

    def test_embedding_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = "\n".join(
            f"u{i}\tc{i % 3}\t" + "\t".join(repr(float(v)) for v in rng.normal(size=4))
            for i in range(6))
        src = write(tmp_path, "c.emb", f"dim=4\n{rows}\n")
        corpus = load_corpus(src)
        out = tmp_path / "back.emb"
        save_corpus(corpus, out)
        again = load_corpus(out)
        assert np.array_equal(again.features, corpus.features)
        assert again.ground_truth().tolist() == corpus.ground_truth().tolist()


def balanced_corpus(tmp_path, k=4, per_class=10):
    rows = []
    for c in range(k):
        for i in range(per_class):
            rows.append(f"word{c} filler{i}\tclass{c}")
    path = tmp_path / "balanced.tsv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return load_corpus(path)


class TestSemiSplit:
    def test_zero_kcr_is_unsupervised(self, tmp_path):
        corpus = balanced_corpus(tmp_path)
        split = make_semi_split(corpus, 0.0, 0.1, np.random.default_rng(0))
        assert split.k_known == 0
        assert split.labeled_indices == ()

    def test_quarter_of_twenty_classes_gives_five(self, tmp_path):
        corpus = balanced_corpus(tmp_path, k=20, per_class=3)
        split = make_semi_split(corpus, 0.25, 0.5, np.random.default_rng(1))
        assert split.k_known == 5

    def test_exact_labeled_count(self, tmp_path):
        # 4 classes x 10 samples, kcr=0.5, ratio=0.1 -> 2 classes x 1 sample
        corpus = balanced_corpus(tmp_path, k=4, per_class=10)
        split = make_semi_split(corpus, 0.5, 0.1, np.random.default_rng(2))
        assert split.k_known == 2
        assert len(split.labeled_indices) == 2

    def test_half_up_rounding_of_known_classes(self, tmp_path):
        corpus = balanced_corpus(tmp_path, k=6, per_class=2)
        split = make_semi_split(corpus, 0.75, 1.0, np.random.default_rng(3))
        assert split.k_known == 5  # 4.5 rounds up

    def test_never_labels_outside_known_classes(self, tmp_path):
        corpus = balanced_corpus(tmp_path, k=6, per_class=8)
        gt = corpus.ground_truth()
        for seed in range(10):
            split = make_semi_split(corpus, 0.5, 0.4, np.random.default_rng(seed))
            known_gt_classes = {int(gt[i]) for i in split.labeled_indices}
            assert len(known_gt_classes) <= split.k_known
            # dense known labels stay inside [0, k_known)
            for i in split.labeled_indices:
                assert 0 <= split.utterances[i].known_label < split.k_known

    def test_known_labels_are_consistent_within_class(self, tmp_path):
        corpus = balanced_corpus(tmp_path, k=5, per_class=6)
        gt = corpus.ground_truth()
        split = make_semi_split(corpus, 0.6, 0.5, np.random.default_rng(4))
        by_class = {}
        for i in split.labeled_indices:
            by_class.setdefault(int(gt[i]), set()).add(split.utterances[i].known_label)
        assert all(len(v) == 1 for v in by_class.values())

    def test_rounds_to_zero_known_classes_is_config_error(self, tmp_path):
        corpus = balanced_corpus(tmp_path, k=4, per_class=2)
        with pytest.raises(ConfigError):
            make_semi_split(corpus, 0.1, 0.1, np.random.default_rng(5))  # 0.4 classes -> 0

    def test_gt_retained_for_evaluation(self, tmp_path):
        corpus = balanced_corpus(tmp_path)
        split = make_semi_split(corpus, 0.5, 0.2, np.random.default_rng(6))
        assert np.array_equal(split.ground_truth(), corpus.ground_truth())


class TestRandomErase:
    def test_erases_exact_count(self):
        u = Utterance(tokens=tuple(range(10)))
        out = random_erase(u, 0.5, np.random.default_rng(0))
        assert len(out.tokens) == 5

    def test_single_token_floor_keeps_copy(self):
        u = Utterance(tokens=(7,))
        out = random_erase(u, 0.5, np.random.default_rng(1))
        assert out.tokens == (7,)

    def test_three_of_ten_at_point_three(self):
        u = Utterance(tokens=tuple(range(10)))
        out = random_erase(u, 0.3, np.random.default_rng(2))
        assert len(out.tokens) == 7

    def test_preserves_relative_order(self):
        u = Utterance(tokens=tuple(range(30)))
        for seed in range(5):
            out = random_erase(u, 0.4, np.random.default_rng(seed))
            assert list(out.tokens) == sorted(out.tokens)

    def test_positions_uniform_over_many_draws(self):
        # each position of L=10 at a=0.5 erases with frequency 0.5 +/- 3 SE
        u = Utterance(tokens=tuple(range(10)))
        rng = np.random.default_rng(3)
        draws = 10_000
        hits = np.zeros(10)
        for _ in range(draws):
            out = random_erase(u, 0.5, rng)
            survivors = set(out.tokens)
            for pos in range(10):
                if pos not in survivors:
                    hits[pos] += 1
        freq = hits / draws
        se = np.sqrt(0.25 / draws)
        assert np.all(np.abs(freq - 0.5) <= 3 * se)

    def test_invalid_fraction_rejected(self):
        with pytest.raises(ValueError):
            random_erase(Utterance(tokens=(1, 2)), 1.0, np.random.default_rng(0))


class TestFeatureDropout:
    def test_p_zero_is_identity(self):
        v = np.array([1.0, -2.0, 3.0])
        out = feature_dropout(v, 0.0, np.random.default_rng(0))
        assert np.array_equal(out, v)

    def test_survivors_scaled_and_zero_count_bounded(self):
        v = np.ones(4)
        seen_zero_counts = set()
        rng = np.random.default_rng(1)
        for _ in range(200):
            out = feature_dropout(v, 0.5, rng)
            zeros = int((out == 0.0).sum())
            seen_zero_counts.add(zeros)
            assert 0 <= zeros <= 4
            assert np.all((out == 0.0) | (out == 2.0))
        assert len(seen_zero_counts) > 1

    def test_expectation_preserved(self):
        rng = np.random.default_rng(2)
        v = np.ones(1000)
        out = feature_dropout(v, 0.3, rng)
        assert out.mean() == pytest.approx(1.0, abs=0.06)

    def test_reproducible_with_fixed_seed(self):
        v = np.linspace(-1, 1, 50)
        a = feature_dropout(v, 0.25, np.random.default_rng(42))
        b = feature_dropout(v, 0.25, np.random.default_rng(42))
        assert np.array_equal(a, b)


class TestCorpusInvariants:
    def test_token_outside_vocab_rejected(self):
        with pytest.raises(ValueError):
            Corpus(utterances=(Utterance(tokens=(5,)),), vocab={"a": 0},
                   label_names=("x",), k_total=1)

    def test_labeled_index_without_label_rejected(self):
        with pytest.raises(ValueError):
            Corpus(utterances=(Utterance(tokens=(0,)),), vocab={"a": 0},
                   label_names=("x",), k_total=1, labeled_indices=(0,))
