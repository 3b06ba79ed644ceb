# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled signed-hashing kernel.

Must stay bit-identical to _hashing_py: same FNV-1a constants, same seed
fold, same bucket and sign rules, same short-text fallback.
"""

from libc.stdlib cimport free, malloc

ctypedef unsigned long long u64

cdef u64 FNV_BASIS = 14695981039346656037ULL
cdef u64 FNV_PRIME = 1099511628211ULL


cdef inline u64 _seed_state(u64 seed) nogil:
    return (FNV_BASIS ^ seed) * FNV_PRIME


cdef inline void _accumulate(u64 h, long long dim, long long[::1] out) nogil:
    cdef u64 bucket = h % (<u64> dim)
    if (h >> 63) & 1ULL:
        out[<Py_ssize_t> bucket] -= 1
    else:
        out[<Py_ssize_t> bucket] += 1


cdef unsigned int* _codepoints(str text, Py_ssize_t n) except NULL:
    cdef unsigned int* cps = <unsigned int*> malloc(max(n, 1) * sizeof(unsigned int))
    if cps == NULL:
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n):
        cps[i] = <unsigned int> ord(text[i])
    return cps


def hash_whole(str text, long long dim, u64 seed, long long[::1] out):
    """Hash the entire string as a single unit into the signed count array."""
    cdef Py_ssize_t n = len(text)
    cdef unsigned int* cps = _codepoints(text, n)
    cdef u64 h = _seed_state(seed)
    cdef Py_ssize_t i
    try:
        with nogil:
            for i in range(n):
                h = (h ^ (<u64> cps[i])) * FNV_PRIME
            _accumulate(h, dim, out)
    finally:
        free(cps)


def hash_counts(str text, long long dim, int lo, int hi, u64 seed, long long[::1] out):
    """Accumulate signed counts of all character n-grams of text into out."""
    cdef Py_ssize_t n = len(text)
    if n < lo:
        hash_whole(text, dim, seed, out)
        return
    cdef unsigned int* cps = _codepoints(text, n)
    cdef u64 h0 = _seed_state(seed)
    cdef u64 h
    cdef int length
    cdef Py_ssize_t start, k
    try:
        with nogil:
            for length in range(lo, hi + 1):
                if length > n:
                    break
                for start in range(n - length + 1):
                    h = h0
                    for k in range(start, start + length):
                        h = (h ^ (<u64> cps[k])) * FNV_PRIME
                    _accumulate(h, dim, out)
    finally:
        free(cps)
