# utils/word_parser.py
import itertools
import os
import re
from typing import Iterator, Optional, Sequence, Tuple

from utils.errors import WordError

# letter with optional power: a, A, a^3, b^-2
FREE_TOKEN_REGEX = re.compile(r"([a-zA-Z])(?:\^(-?\d+))?")
SEPARATOR_REGEX = re.compile(r"[\s,;*]+")

BUILTIN_POLYHEDRA = {"pentagon", "dodecahedron"}
POLYHEDRON_FILE_EXT = {".json"}

Word = Tuple[int, ...]


# ----------------- reflection words (faces of a polyhedron) -----------------

def parse_reflection_word(text: str, n_faces: Optional[int] = None) -> Word:
    """
    "1 3 2" -> (0, 2, 1). Faces are numbered from 1 for users and from 0 inside.
    """
    tokens = [t for t in SEPARATOR_REGEX.split(text.strip()) if t]
    if not tokens:
        raise WordError("empty reflection word")
    word = []
    for t in tokens:
        if not t.isdigit():
            raise WordError(f"bad face index {t!r} in {text!r}")
        i = int(t)
        if i < 1 or (n_faces is not None and i > n_faces):
            limit = f"1..{n_faces}" if n_faces is not None else ">= 1"
            raise WordError(f"face index {i} out of range {limit}")
        word.append(i - 1)
    return tuple(word)


def format_reflection_word(word: Sequence[int]) -> str:
    return " ".join(str(i + 1) for i in word)


# ----------------- free group words -----------------

def letter_to_int(ch: str) -> int:
    n = ord(ch.lower()) - ord("a") + 1
    return n if ch.islower() else -n


def int_to_letter(x: int) -> str:
    ch = chr(ord("a") + abs(x) - 1)
    return ch if x > 0 else ch.upper()


def parse_free_word(text: str) -> Word:
    """
    Letters a, b, c, ... are generators, capitals their inverses; "a^6" and
    "b^-2" are powers. "abAB", "a b A B" and "a b a^-1 b^-1" agree.
    Returns the freely reduced word as a tuple of signed generator numbers.
    """
    s = SEPARATOR_REGEX.sub("", text)
    if s in ("", "1", "e"):
        return ()
    word = []
    pos = 0
    for m in FREE_TOKEN_REGEX.finditer(s):
        if m.start() != pos:
            raise WordError(f"invalid character in free word {text!r} at {s[pos:m.start()]!r}")
        pos = m.end()
        gen = letter_to_int(m.group(1))
        power = int(m.group(2)) if m.group(2) is not None else 1
        if power < 0:
            gen, power = -gen, -power
        word.extend([gen] * power)
    if pos != len(s):
        raise WordError(f"invalid trailing text in free word {text!r}: {s[pos:]!r}")
    return free_reduce(word)


def format_free_word(word: Sequence[int]) -> str:
    if not word:
        return "1"
    parts = []
    for gen, group in itertools.groupby(word):
        n = len(list(group))
        letter = int_to_letter(gen)
        parts.append(letter if n == 1 else f"{letter}^{n}")
    return "".join(parts)


def free_reduce(word: Sequence[int]) -> Word:
    out = []
    for x in word:
        if x == 0:
            raise WordError("generator 0 is not a letter")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_reduced(word: Sequence[int]) -> bool:
    return all(x != 0 for x in word) and all(a != -b for a, b in zip(word, word[1:]))


def cyclic_reduce(word: Sequence[int]) -> Word:
    w = list(free_reduce(word))
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return tuple(w)


def invert_free_word(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def enumerate_reduced_words(rank: int, max_len: int) -> Iterator[Word]:
    """Nontrivial reduced words of length 1..max_len in shortlex order."""
    letters = [g for i in range(1, rank + 1) for g in (i, -i)]
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for x in letters:
                if w and w[-1] == -x:
                    continue
                nxt.append(w + (x,))
        for w in nxt:
            yield w
        layer = nxt


def classify_polyhedron_source(text: str) -> str:
    """
    Return: 'builtin' | 'file' | 'unknown'
    """
    t = text.strip()
    if t.lower() in BUILTIN_POLYHEDRA:
        return "builtin"
    ext = os.path.splitext(t)[1].lower()
    if ext in POLYHEDRON_FILE_EXT or os.path.isfile(t):
        return "file"
    return "unknown"
