"""Truncated power series in one variable, stored as coefficient arrays
(lowest order first).  Just enough arithmetic for germs at a fixed point."""

from __future__ import annotations

import numpy as np


def mul(a, b, n: int) -> np.ndarray:
    return np.convolve(a, b)[:n] if len(a) and len(b) else np.zeros(n, complex)


def pad(a, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    a = np.asarray(a, dtype=complex)[:n]
    out[: len(a)] = a
    return out


def reciprocal(a, n: int) -> np.ndarray:
    """1 / a for a[0] != 0."""
    a = pad(a, n)
    if a[0] == 0:
        raise ZeroDivisionError("series has no constant term")
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1 : k + 1], out[k - 1 :: -1][:k]) / a[0]
    return out


def power(a, p: float, n: int) -> np.ndarray:
    """a^p for a[0] = 1, any real p (J. C. P. Miller recurrence)."""
    a = pad(a, n)
    if abs(a[0] - 1) > 1e-14:
        raise ValueError("leading coefficient must be 1")
    out = np.zeros(n, dtype=complex)
    out[0] = 1
    for k in range(1, n):
        j = np.arange(1, k + 1)
        out[k] = np.sum(((p + 1) * j - k) * a[j] * out[k - j]) / k
    return out


def log1p(h, n: int) -> np.ndarray:
    """log(1 + h) for h without constant term."""
    h = pad(h, n)
    out = np.zeros(n, dtype=complex)
    term = np.zeros(n, dtype=complex)
    term[0] = 1
    for k in range(1, n):
        term = mul(term, h, n)
        if not term.any():
            break
        out += ((-1) ** (k + 1) / k) * term
    return out


def compose(f, g, n: int) -> np.ndarray:
    """f(g(y)) for g without constant term."""
    g = pad(g, n)
    if g[0] != 0:
        raise ValueError("inner series must vanish at 0")
    out = np.zeros(n, dtype=complex)
    for c in pad(f, n)[::-1]:
        out = mul(out, g, n)
        out[0] += c
    return out


def revert(f, n: int) -> np.ndarray:
    """Compositional inverse of f(y) = y + O(y^2)."""
    f = pad(f, n)
    if f[0] != 0 or abs(f[1] - 1) > 1e-14:
        raise ValueError("need f(y) = y + O(y^2)")
    g = np.zeros(n, dtype=complex)
    g[1] = 1
    for _ in range(n):
        err = compose(f, g, n)
        err[1] -= 1
        if np.abs(err).max() < 1e-300:
            break
        g = g - err
    return g


def evaluate(a, y):
    out = np.zeros_like(np.asarray(y, dtype=complex))
    for c in np.asarray(a)[::-1]:
        out = out * y + c
    return out
