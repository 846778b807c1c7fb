"""Classifier tests, checked against a standalone gradient-descent oracle."""

import math
import random
import struct

import pytest

from guardgate.classifier import (
    FEATURE_DIM,
    ClassifierModel,
    Label,
    LabeledDataset,
    LabeledExample,
    Provenance,
    TrainConfig,
    deserialize_model,
    featurize,
    fnv1a64,
    generate_synthetic_stub,
    load_dataset,
    parse_dataset,
    predict,
    serialize_model,
    train,
)
from guardgate.errors import EmptyDataset, ModelFormatError, SingleClassDataset


# --------------------------------------------------------------------------
# standalone oracle: featurization + full-batch logistic GD, no package imports
# --------------------------------------------------------------------------

def oracle_fnv1a64(data: bytes) -> int:
    h = 14695981039346656037
    for byte in data:
        h = ((h ^ byte) * 1099511628211) & 0xFFFFFFFFFFFFFFFF
    return h


def oracle_featurize(text: str) -> dict[int, float]:
    tokens = text.lower().split()
    grams = list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    feats: dict[int, float] = {}
    for g in grams:
        b = oracle_fnv1a64(g.encode()) % 65536
        feats[b] = feats.get(b, 0.0) + 1.0
    return feats


def oracle_train(examples, lr, epochs):
    """Zero-init full-batch GD on mean logistic loss; returns (weights, bias)."""
    feats = [(oracle_featurize(t), 1.0 if label == "deny" else 0.0) for t, label in examples]
    w: dict[int, float] = {}
    b = 0.0
    n = len(feats)
    for _ in range(epochs):
        grad: dict[int, float] = {}
        gb = 0.0
        for f, y in feats:
            z = b + sum(w.get(k, 0.0) * v for k, v in f.items())
            p = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
            err = p - y
            gb += err
            for k, v in f.items():
                grad[k] = grad.get(k, 0.0) + err * v
        for k, g in grad.items():
            w[k] = w.get(k, 0.0) - lr * g / n
        b -= lr * gb / n
    return w, b


def oracle_predict_deny(w, b, text):
    z = b + sum(w.get(k, 0.0) * v for k, v in oracle_featurize(text).items())
    return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))


def make_dataset(pairs, provenance=Provenance.USER_UPLOADED):
    return LabeledDataset(
        examples=tuple(LabeledExample(text=t, label=Label(l)) for t, l in pairs),
        provenance=provenance,
    )


def separable_dataset(n=200, seed=7):
    """n examples split across two disjoint vocabularies."""
    rng = random.Random(seed)
    deny_vocab = ["exploit", "attack", "steal", "harm", "weapon", "malware"]
    allow_vocab = ["weather", "recipe", "music", "garden", "travel", "books"]
    fillers = ["please", "tell", "me", "about", "the", "a", "some", "info"]
    pairs = []
    for i in range(n):
        vocab = deny_vocab if i % 2 == 0 else allow_vocab
        words = [rng.choice(fillers) for _ in range(rng.randint(2, 5))]
        words.insert(rng.randrange(len(words) + 1), rng.choice(vocab))
        pairs.append((" ".join(words), "deny" if i % 2 == 0 else "allow"))
    return make_dataset(pairs)


# --------------------------------------------------------------------------
# featurize
# --------------------------------------------------------------------------

class TestFeaturize:
    def test_empty_text_zero_vector(self):
        assert featurize("") == {}

    def test_whitespace_runs_ignored(self):
        # whitespace-tokenizer oracle
        assert "a b".split() == "a  b".split()
        assert featurize("a b") == featurize("a  b")

    def test_two_words_at_most_three_buckets(self):
        feats = featurize("x y")
        assert 1 <= len(feats) <= 3
        # direct-hash oracle: exactly the buckets of "x", "y", "x y"
        expected = {oracle_fnv1a64(g.encode()) % 65536 for g in ("x", "y", "x y")}
        assert set(feats) == expected

    def test_counts_accumulate(self):
        feats = featurize("spam spam")
        unigram = fnv1a64(b"spam") % FEATURE_DIM
        assert feats[unigram] == 2.0

    def test_matches_oracle_on_sentences(self):
        for text in ("Hello there", "the CAT sat on the mat", "one"):
            assert featurize(text) == oracle_featurize(text)


# --------------------------------------------------------------------------
# train / predict
# --------------------------------------------------------------------------

class TestTrain:
    def test_toy_separable_matches_oracle(self):
        data = make_dataset([("good", "allow"), ("bad", "deny")])
        config = TrainConfig(learning_rate=0.5, epochs=200)
        model = train(data, config)

        label, p_bad = predict(model, "bad")
        assert label == "deny" and p_bad > 0.9
        label_good, p_good = predict(model, "good")
        assert label_good == "allow" and p_good < 0.1

        w, b = oracle_train([("good", "allow"), ("bad", "deny")], 0.5, 200)
        assert p_bad == pytest.approx(oracle_predict_deny(w, b, "bad"), abs=1e-12)
        assert p_good == pytest.approx(oracle_predict_deny(w, b, "good"), abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassDataset):
            train(make_dataset([("a", "allow"), ("b", "allow")]))

    def test_empty_rejected(self):
        with pytest.raises(EmptyDataset):
            train(LabeledDataset(examples=()))

    def test_bit_reproducible(self):
        data = separable_dataset(60)
        config = TrainConfig(learning_rate=0.3, epochs=50)
        blob1 = serialize_model(train(data, config))
        blob2 = serialize_model(train(data, config))
        assert blob1 == blob2

    def test_loss_non_increasing(self):
        model = train(separable_dataset(40), TrainConfig(learning_rate=0.5, epochs=80))
        losses = model.loss_history
        assert len(losses) == 80
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_fingerprint_recorded(self):
        data = separable_dataset(10)
        model = train(data, TrainConfig(epochs=5))
        assert model.dataset_fingerprint == data.fingerprint()
        assert len(model.dataset_fingerprint) == 32

    def test_training_accuracy_on_separable_set(self):
        data = separable_dataset(200)
        model = train(data, TrainConfig(learning_rate=0.5, epochs=200))
        correct = sum(
            1
            for ex in data.examples
            if predict(model, ex.text)[0] == ex.label.value
        )
        assert correct / len(data.examples) >= 0.95


class TestPredict:
    def test_zero_model_probability_half(self):
        model = ClassifierModel(
            feature_dim=FEATURE_DIM,
            weights=(0.0,) * FEATURE_DIM,
            bias=0.0,
            train_config=None,
            dataset_fingerprint=b"\x00" * 32,
        )
        _, p = predict(model, "anything at all")
        assert p == 0.5

    def test_threshold_controls_label(self):
        model = ClassifierModel(
            feature_dim=FEATURE_DIM,
            weights=(0.0,) * FEATURE_DIM,
            bias=0.0,
            train_config=None,
            dataset_fingerprint=b"\x00" * 32,
        )
        assert predict(model, "x", threshold=0.5)[0] == "deny"
        assert predict(model, "x", threshold=0.6)[0] == "allow"

    def test_probability_open_interval(self):
        model = train(
            make_dataset([("good", "allow"), ("bad", "deny")]),
            TrainConfig(learning_rate=5.0, epochs=2000),
        )
        for text in ("bad bad bad bad", "good good good good", ""):
            _, p = predict(model, text)
            assert 0.0 < p < 1.0


class TestGradientCheck:
    def test_analytic_matches_central_differences(self):
        # random small models: a handful of texts, random weights on their buckets
        rng = random.Random(13)
        texts = ["alpha beta", "beta gamma delta", "alpha", "delta epsilon"]
        labels = [1.0, 0.0, 0.0, 1.0]
        feats = [featurize(t) for t in texts]
        active = sorted({b for f in feats for b in f})

        def loss(wvec, bias):
            total = 0.0
            for f, y in zip(feats, labels):
                z = bias + sum(wvec.get(k, 0.0) * v for k, v in f.items())
                total += (math.log1p(math.exp(-abs(z))) + max(z, 0.0)) - y * z
            return total / len(feats)

        for _ in range(5):
            w = {b: rng.uniform(-1, 1) for b in active}
            bias = rng.uniform(-1, 1)
            # analytic gradient of mean logistic loss
            grad = {b: 0.0 for b in active}
            gb = 0.0
            for f, y in zip(feats, labels):
                z = bias + sum(w[k] * v for k, v in f.items())
                p = 1.0 / (1.0 + math.exp(-z))
                for k, v in f.items():
                    grad[k] += (p - y) * v / len(feats)
                gb += (p - y) / len(feats)
            h = 1e-6
            for b in active:
                w_plus = dict(w); w_plus[b] += h
                w_minus = dict(w); w_minus[b] -= h
                numeric = (loss(w_plus, bias) - loss(w_minus, bias)) / (2 * h)
                assert abs(numeric - grad[b]) <= 1e-6 * max(1.0, abs(grad[b]))
            numeric_b = (loss(w, bias + h) - loss(w, bias - h)) / (2 * h)
            assert abs(numeric_b - gb) <= 1e-6 * max(1.0, abs(gb))


# --------------------------------------------------------------------------
# synthetic augmentation
# --------------------------------------------------------------------------

class TestSynthetic:
    def test_n_zero_empty(self):
        ds = generate_synthetic_stub([LabeledExample("hi there", Label.ALLOW)], 0)
        assert ds.examples == () and ds.provenance is Provenance.SYNTHETIC

    def test_three_perturbations_of_one_seed(self):
        seed = LabeledExample("Buy the good stuff", Label.DENY)
        ds = generate_synthetic_stub([seed], 3)
        assert len(ds.examples) == 3
        # perturbation-table oracle: every output is one of the documented rewrites
        candidates = {
            seed.text.upper(),
            seed.text.lower(),
            seed.text.title(),
            seed.text + ".",
            "purchase the good stuff",
            "Buy the great stuff",
        }
        for ex in ds.examples:
            assert ex.label is Label.DENY
            assert ex.text in candidates, ex.text

    def test_deterministic(self):
        seeds = [
            LabeledExample("one fine day", Label.ALLOW),
            LabeledExample("bad actor here", Label.DENY),
        ]
        assert generate_synthetic_stub(seeds, 7) == generate_synthetic_stub(seeds, 7)


# --------------------------------------------------------------------------
# serialization & dataset files
# --------------------------------------------------------------------------

class TestSerialization:
    def test_round_trip(self):
        model = train(separable_dataset(20), TrainConfig(epochs=10))
        blob = serialize_model(model)
        loaded = deserialize_model(blob)
        assert loaded.weights == model.weights
        assert loaded.bias == model.bias
        assert loaded.dataset_fingerprint == model.dataset_fingerprint

    def test_documented_layout(self):
        model = train(make_dataset([("a", "allow"), ("b", "deny")]), TrainConfig(epochs=1))
        blob = serialize_model(model)
        magic, version, dim, bias = struct.unpack_from("<8sIId", blob, 0)
        assert magic == b"GGCLSF01" and version == 1 and dim == FEATURE_DIM
        assert bias == model.bias
        assert len(blob) == 24 + dim * 8 + 32

    def test_bad_magic(self):
        with pytest.raises(ModelFormatError):
            deserialize_model(b"WRONG!!!" + b"\x00" * 100)

    def test_truncated(self):
        with pytest.raises(ModelFormatError):
            deserialize_model(b"GG")


class TestDatasetFiles:
    def test_parse_and_load(self, tmp_path):
        path = tmp_path / "data.tsv"
        path.write_text("allow\tnice text\ndeny\tbad text\n", encoding="utf-8")
        ds = load_dataset(path)
        assert [(e.text, e.label.value) for e in ds.examples] == [
            ("nice text", "allow"),
            ("bad text", "deny"),
        ]

    def test_bad_label(self):
        with pytest.raises(Exception, match="label"):
            parse_dataset(["maybe\ttext"])

    def test_missing_tab(self):
        with pytest.raises(Exception, match="label<TAB>text"):
            parse_dataset(["allow no tab here"])
