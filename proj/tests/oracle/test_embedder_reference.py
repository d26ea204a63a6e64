#!/usr/bin/env python3
"""Independent re-implementation of the documented n-gram test embedder,
used once to produce the frozen cosine fixtures in tests/unit/test_providers.cpp.
Covers ASCII inputs, where normalization is lowercase + whitespace collapse."""
import math

SEED = 0x5141584E4752414D
DIM = 256
MASK = (1 << 64) - 1


def fnv1a(data: bytes) -> int:
    h = 0xCBF29CE484222325 ^ SEED
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def embed(text: str):
    s = " ".join(text.lower().split())
    v = [0.0] * DIM
    if not s:
        v[0] = 1.0
        return v
    for n in (1, 2, 3):
        for i in range(len(s) - n + 1):
            v[fnv1a(s[i:i + n].encode()) % DIM] += 1.0
    norm = math.sqrt(sum(x * x for x in v))
    return [x / norm for x in v]


def cos(a, b):
    u, v = embed(a), embed(b)
    return sum(x * y for x, y in zip(u, v))


if __name__ == "__main__":
    for a, b in [("abcdef", "uvwxyz"), ("the black cat", "the black dog"),
                 ("the black cat", "zzzz")]:
        print(f"{a!r} vs {b!r}: {cos(a, b)!r}")
    v = embed("hello")
    print("hello nonzero buckets:", [(i, x) for i, x in enumerate(v) if x][:5])
