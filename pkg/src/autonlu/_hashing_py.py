"""Pure-Python signed-hashing kernel.

Reference implementation of the FNV-1a character n-gram hasher. The compiled
kernel in _hashing_c.pyx must produce bit-identical counts; keep the two in
lockstep when changing either.
"""

FNV_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def seed_state(seed: int) -> int:
    """Initial hash state with the seed folded in."""
    h = (FNV_BASIS ^ (seed & _MASK)) & _MASK
    return (h * FNV_PRIME) & _MASK


def _accumulate(h: int, dim: int, out) -> None:
    bucket = h % dim
    if (h >> 63) & 1:
        out[bucket] -= 1
    else:
        out[bucket] += 1


def hash_whole(text: str, dim: int, seed: int, out) -> None:
    """Hash the entire string as a single unit into the signed count array."""
    h = seed_state(seed)
    for ch in text:
        h = ((h ^ ord(ch)) * FNV_PRIME) & _MASK
    _accumulate(h, dim, out)


def hash_counts(text: str, dim: int, lo: int, hi: int, seed: int, out) -> None:
    """Accumulate signed counts of all character n-grams of text into out.

    Grams of every length in [lo, hi] are hashed over Unicode code points.
    A text shorter than lo is hashed once as a whole, so nothing is ever
    silently dropped.
    """
    cps = [ord(c) for c in text]
    n = len(cps)
    if n < lo:
        hash_whole(text, dim, seed, out)
        return
    h0 = seed_state(seed)
    for length in range(lo, hi + 1):
        if length > n:
            break
        for start in range(n - length + 1):
            h = h0
            for k in range(start, start + length):
                h = ((h ^ cps[k]) * FNV_PRIME) & _MASK
            _accumulate(h, dim, out)
