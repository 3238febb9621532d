import pytest
from hypothesis import given
from hypothesis import strategies as st

from grazslide.words import (Word, as_word, concat, ends_with_r_rotation, flip, pairing_alpha,
                             pairing_alphas, power, prefix, segments)

words = st.text(alphabet="LR", max_size=12).map(Word)
nonempty = st.text(alphabet="LR", min_size=1, max_size=12).map(Word)


def test_concat_examples():
    assert str(concat("RLR", "LR")) == "RLRLR"
    assert str(concat("RLR", "")) == "RLR"
    assert str(concat("RLLLR", "LLLR")) == "RLLLRLLLR"


def test_power_examples():
    assert str(power("RLR", 0)) == ""
    assert str(power("RLR", 2)) == "RLRRLR"
    assert str(power("LR", 3)) == "LRLRLR"


def test_flip_examples():
    assert str(flip("RLR", 2)) == "RLL"
    assert str(flip("LR", 0)) == "RR"
    assert str(flip(flip("RLR", 1), 1)) == "RLR"


def test_flip_out_of_range():
    with pytest.raises(IndexError):
        flip("RLR", 3)


def test_invalid_symbol():
    with pytest.raises(ValueError):
        Word("RXL")


def test_pairing_examples():
    assert pairing_alpha("RLR", "LR") == 1
    assert pairing_alpha("RLLLR", "LLLR") == 3
    assert pairing_alpha("RLRLRLR", "LR") == 1


def test_unpaired_words():
    assert pairing_alpha("LL", "LL") is None


def test_prefix_examples():
    assert str(prefix("RLRLR", 1)) == "R"
    assert str(prefix("RLLLRLLLR", 3)) == "RLL"
    with pytest.raises(IndexError):
        prefix("RL", 3)


def test_rotation_and_segments():
    w, shift = ends_with_r_rotation("RLRRR")
    assert str(w).endswith("R") and shift == 1
    assert segments("RLRLR") == [1, 2, 2]


@given(words, words, words)
def test_associative(a, b, c):
    assert concat(concat(a, b), c) == concat(a, concat(b, c))


@given(words, st.integers(1, 5))
def test_power_recursion(w, k):
    assert power(w, k) == concat(power(w, k - 1), w)


@given(nonempty, st.data())
def test_flip_involution(w, data):
    i = data.draw(st.integers(0, len(w) - 1))
    f = flip(w, i)
    assert flip(f, i) == w
    assert [j for j in range(len(w)) if f[j] != w[j]] == [i]


@given(nonempty, nonempty)
def test_pairing_differs_at_zero_and_alpha(x, y):
    for alpha in pairing_alphas(x, y):
        xy, yx = str(concat(x, y)), str(concat(y, x))
        assert {i for i in range(len(xy)) if xy[i] != yx[i]} == {0, alpha}


def test_as_word_idempotent():
    w = as_word("RL")
    assert as_word(w) is w
