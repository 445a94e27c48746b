import numpy as np
import pytest

from tata.errors import (
    BankTooSmallError,
    EmptyClassNameError,
    InvalidCountError,
    InvalidValueError,
)
from tata.numerics import l2_normalize
from tata.textspace import (
    TextBank,
    analog_weights,
    assign_nouns,
    compose_prompt,
    select_attributes,
    textual_analog,
)

from oracles import cosine_loop, softmax_loop


def random_bank(rng, size, dim, prefix="noun"):
    vectors = np.array([l2_normalize(rng.standard_normal(dim)) for _ in range(size)])
    return TextBank.from_rows([f"{prefix}{i:03d}" for i in range(size)], vectors)


class TestTextBank:
    def test_rejects_empty(self):
        with pytest.raises(BankTooSmallError):
            TextBank.from_rows([], np.empty((0, 4)))

    def test_rejects_duplicate_texts(self):
        with pytest.raises(InvalidValueError):
            TextBank.from_rows(["a", "a"], np.eye(2))


class TestAssignNouns:
    def test_exact_noun_ranks_first(self):
        rng = np.random.default_rng(70)
        centers = np.eye(3)
        texts = [f"n{i}" for i in range(9)]
        vectors = [centers[0]] + [l2_normalize(rng.standard_normal(3) + 0.1) for _ in range(8)]
        bank = TextBank.from_rows(texts, np.array(vectors))
        space = assign_nouns(bank, centers, k1=1)
        assert space.texts[0] == "n0"

    def test_k1_one_is_argmax(self):
        rng = np.random.default_rng(71)
        bank = random_bank(rng, 30, 6)
        centers = np.array([l2_normalize(rng.standard_normal(6)) for _ in range(4)])
        space = assign_nouns(bank, centers, k1=1)
        assert space.size == 4 and space.k1 == 1

    def test_matches_bruteforce_ranking(self):
        rng = np.random.default_rng(72)
        bank = random_bank(rng, 50, 8)
        centers = np.array([l2_normalize(rng.standard_normal(8)) for _ in range(3)])
        space = assign_nouns(bank, centers, k1=5)

        # oracle: per noun, softmax over centers of cosines; per center,
        # sort nouns by that probability
        probs = []
        for k in range(bank.size):
            sims = [cosine_loop(bank.vectors[k], c) for c in centers]
            probs.append(softmax_loop(sims, 1.0))
        for i in range(3):
            ranked = sorted(range(bank.size), key=lambda k: (-probs[k][i], k))[:5]
            got = space.texts[i * 5:(i + 1) * 5]
            assert list(got) == [bank.texts[k] for k in ranked]

    def test_groups_have_k1_entries(self):
        rng = np.random.default_rng(73)
        bank = random_bank(rng, 40, 5)
        centers = np.array([l2_normalize(rng.standard_normal(5)) for _ in range(4)])
        space = assign_nouns(bank, centers, k1=7)
        assert space.size == 4 * 7

    def test_order_invariance_of_selection(self):
        rng = np.random.default_rng(74)
        bank = random_bank(rng, 25, 6)
        centers = np.array([l2_normalize(rng.standard_normal(6)) for _ in range(2)])
        space_a = assign_nouns(bank, centers, k1=4)

        perm = rng.permutation(bank.size)
        shuffled = TextBank.from_rows(
            [bank.texts[i] for i in perm], bank.vectors[perm]
        )
        space_b = assign_nouns(shuffled, centers, k1=4)
        assert sorted(space_a.texts) == sorted(space_b.texts)
        assert set(space_a.texts[:4]) == set(space_b.texts[:4])

    def test_bank_too_small(self):
        rng = np.random.default_rng(75)
        bank = random_bank(rng, 5, 4)
        with pytest.raises(BankTooSmallError):
            assign_nouns(bank, np.eye(4), k1=2)


class TestTextualAnalog:
    def test_single_noun_space(self):
        rng = np.random.default_rng(76)
        bank = random_bank(rng, 3, 5)
        center = bank.vectors[1].reshape(1, -1)
        space = assign_nouns(bank, center, k1=1)
        out = textual_analog(l2_normalize(rng.standard_normal(5)), space, 0.005)
        np.testing.assert_allclose(out, space.vectors[0], atol=1e-12)

    def test_dominant_weight_when_gap_large(self):
        # gap / tau_tilde = 0.05 / 0.005 = 10; with two competitors the
        # winning weight is 1 / (1 + 2 e^-10) >= 1 - 1e-4
        f_v = l2_normalize(np.array([1.0, 1.0, 0.0, 0.0]))
        target = f_v.copy()
        far = l2_normalize(np.array([1.0, 0.4, 0.9, 0.0]))
        farther = l2_normalize(np.array([0.2, 0.3, 1.0, 0.5]))
        assert cosine_loop(f_v, far) < 0.95 and cosine_loop(f_v, farther) < 0.95
        from tata.textspace import TextSpace

        space = TextSpace(
            texts=("t", "f1", "f2"), vectors=np.array([target, far, farther]),
            n_centers=3, k1=1,
        )
        weights = analog_weights(f_v, space, 0.005)
        assert weights[0] >= 1.0 - 1e-4

    def test_matches_weighted_sum_oracle(self):
        rng = np.random.default_rng(77)
        bank = random_bank(rng, 15, 7)
        centers = np.array([l2_normalize(rng.standard_normal(7)) for _ in range(3)])
        space = assign_nouns(bank, centers, k1=5)
        f_v = l2_normalize(rng.standard_normal(7))

        sims = [cosine_loop(f_v, row) for row in space.vectors]
        w = softmax_loop(sims, 0.005)
        raw = [
            sum(w[j] * space.vectors[j][d] for j in range(space.size))
            for d in range(7)
        ]
        want = l2_normalize(np.array(raw))
        np.testing.assert_allclose(textual_analog(f_v, space, 0.005), want, atol=1e-9)

    def test_weights_are_convex(self):
        rng = np.random.default_rng(78)
        bank = random_bank(rng, 20, 6)
        centers = np.array([l2_normalize(rng.standard_normal(6)) for _ in range(2)])
        space = assign_nouns(bank, centers, k1=6)
        w = analog_weights(l2_normalize(rng.standard_normal(6)), space, 0.005)
        assert np.all(w >= 0)
        assert abs(w.sum() - 1.0) <= 1e-9


class TestSelectAttributes:
    def test_full_bank_sorted(self):
        rng = np.random.default_rng(79)
        bank = random_bank(rng, 6, 5, prefix="attr")
        f_v = l2_normalize(rng.standard_normal(5))
        out = select_attributes(f_v, bank, 6)
        sims = [cosine_loop(f_v, v) for v in bank.vectors]
        want = [bank.texts[i] for i in sorted(range(6), key=lambda i: (-sims[i], i))]
        assert out == want

    def test_exact_match_wins(self):
        base = np.eye(5)
        bank = TextBank.from_rows([f"attr{i}" for i in range(5)], base)
        out = select_attributes(base[3], bank, 1)
        assert out == ["attr3"]

    def test_matches_scan_oracle(self):
        rng = np.random.default_rng(80)
        bank = random_bank(rng, 25, 8, prefix="attr")
        f_v = l2_normalize(rng.standard_normal(8))
        out = select_attributes(f_v, bank, 3)
        sims = [cosine_loop(f_v, v) for v in bank.vectors]
        want = [bank.texts[i] for i in sorted(range(25), key=lambda i: (-sims[i], i))[:3]]
        assert out == want

    def test_prefix_property(self):
        rng = np.random.default_rng(81)
        bank = random_bank(rng, 12, 6, prefix="attr")
        f_v = l2_normalize(rng.standard_normal(6))
        full = select_attributes(f_v, bank, 12)
        for n in (1, 4, 9):
            assert select_attributes(f_v, bank, n) == full[:n]

    def test_invalid_count(self):
        rng = np.random.default_rng(82)
        bank = random_bank(rng, 4, 3, prefix="attr")
        for bad in (0, 5):
            with pytest.raises(InvalidCountError):
                select_attributes(np.ones(3), bank, bad)


class TestComposePrompt:
    def test_no_attributes(self):
        assert compose_prompt("cat", []) == "a photo of a cat"

    def test_single_attribute(self):
        assert compose_prompt("koala", ["grey"]) == "a grey photo of a koala"

    def test_multiple_attributes_join_order(self):
        assert compose_prompt("dog", ["striped", "outdoor"]) == "a striped outdoor photo of a dog"

    def test_empty_class_name(self):
        with pytest.raises(EmptyClassNameError):
            compose_prompt("", ["x"])
        with pytest.raises(EmptyClassNameError):
            compose_prompt("   ", [])
