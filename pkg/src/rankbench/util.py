"""Shared numeric helpers: seed derivation and safe link functions."""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(root: int, index: int) -> int:
    """Derive an independent child seed from a root seed and a task index.

    XORs the two values and runs the result through a fixed 64-bit finalizer
    (splitmix64), so sibling tasks get decorrelated streams and the mapping is
    stable across runs and platforms.
    """
    z = (int(root) ^ int(index)) & _MASK64
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def name_seed(root: int, name: str) -> int:
    """Seed keyed by a feature name rather than its column position.

    Uses sha256 (not the salted builtin hash) so per-feature random draws are
    identical no matter where the column sits in the matrix.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return derive_seed(root, int.from_bytes(digest[:8], "little"))


def sigmoid(z):
    z = np.clip(z, -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))


def cross_entropy(y, p, eps: float = 1e-12):
    """Per-sample binary cross-entropy with probability clipping."""
    p = np.clip(p, eps, 1.0 - eps)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
