"""Finite words over the alphabet {L, R}.

A word names the order in which the two affine branches of a piecewise-linear
map are composed. Words are immutable and serialise as plain ASCII strings.
"""

from dataclasses import dataclass

ALPHABET = frozenset("LR")


@dataclass(frozen=True)
class Word:
    symbols: str = ""

    def __post_init__(self):
        if not isinstance(self.symbols, str):
            object.__setattr__(self, "symbols", "".join(self.symbols))
        bad = set(self.symbols) - ALPHABET
        if bad:
            raise ValueError(f"words use only 'L' and 'R', got {sorted(bad)} in {self.symbols!r}")

    def __str__(self):
        return self.symbols

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Word(self.symbols[i])
        return self.symbols[i]

    def __add__(self, other):
        return concat(self, other)

    def __mul__(self, k):
        return power(self, k)

    def flip(self, i):
        return flip(self, i)

    def count(self, symbol):
        return self.symbols.count(symbol)

    def rotate(self, shift):
        """Cyclic shift: ``w.rotate(s)[i] == w[(i + s) % n]``."""
        if not self.symbols:
            return self
        s = shift % len(self.symbols)
        return Word(self.symbols[s:] + self.symbols[:s])


def as_word(w):
    return w if isinstance(w, Word) else Word(w)


def concat(a, b):
    return Word(as_word(a).symbols + as_word(b).symbols)


def power(w, k):
    if k < 0:
        raise ValueError(f"power must be non-negative, got {k}")
    return Word(as_word(w).symbols * k)


def flip(w, i):
    """Return ``w`` with the symbol at index ``i`` switched."""
    s = as_word(w).symbols
    if not 0 <= i < len(s):
        raise IndexError(f"flip index {i} out of range for word of length {len(s)}")
    other = "R" if s[i] == "L" else "L"
    return Word(s[:i] + other + s[i + 1:])


def prefix(w, alpha):
    s = as_word(w).symbols
    if not 0 < alpha <= len(s):
        raise IndexError(f"prefix length {alpha} out of range for word of length {len(s)}")
    return Word(s[:alpha])


def pairing_alphas(x, y):
    """All alpha in 1..n+p-1 with ``xy`` equal to ``yx`` flipped at 0 and alpha."""
    x, y = as_word(x), as_word(y)
    if len(x) < 1 or len(y) < 1:
        raise ValueError("pairing requires non-empty words")
    xy = concat(x, y)
    yx_flipped = flip(concat(y, x), 0)
    found = []
    for alpha in range(1, len(xy)):
        if flip(yx_flipped, alpha) == xy:
            found.append(alpha)
    return found


def pairing_alpha(x, y):
    """Smallest admissible pairing index, or ``None`` when the words do not pair."""
    found = pairing_alphas(x, y)
    return found[0] if found else None


def ends_with_r_rotation(w):
    """Rotate a cyclic word so that it ends in R; returns ``(rotated, shift)``.

    The shift is chosen so the first R of ``w`` becomes the last symbol.
    """
    w = as_word(w)
    if "R" not in w.symbols:
        raise ValueError(f"word {w} has no R")
    r = w.symbols.index("R")
    shift = r + 1
    return w.rotate(shift), shift


def segments(w):
    """Split a word ending in R into runs ``L...LR``; returns the run lengths."""
    w = as_word(w)
    if not w.symbols.endswith("R"):
        raise ValueError(f"word {w} must end in R")
    out, run = [], 0
    for s in w.symbols:
        run += 1
        if s == "R":
            out.append(run)
            run = 0
    return out
