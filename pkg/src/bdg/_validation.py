"""Input validation helpers shared by the public API and the CLI."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def check_power_of_two(n, name="K"):
    if int(n) != n or not is_power_of_two(int(n)):
        raise ValueError(f"`{name}` must be a positive integer power of 2, got {n!r}.")
    return int(n)


def check_h(h) -> float:
    """Validate that ``h`` equals ``1/2**m`` for an integer ``m >= 1``.

    Accepts floats and strings such as ``"1/8"``.
    """
    if isinstance(h, str):
        try:
            h = float(Fraction(h.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse h={h!r}") from exc
    h = float(h)
    if not (0.0 < h < 1.0):
        raise ValueError(f"`h` must lie in (0, 1), got {h!r}.")
    mantissa, _ = math.frexp(h)
    if mantissa != 0.5:
        raise ValueError(f"`h` must be a power of 1/2 (1/2, 1/4, 1/8, ...), got {h!r}.")
    return h


def check_nonnegative(value, name):
    value = float(value)
    if not value >= 0.0 or not math.isfinite(value):
        raise ValueError(f"`{name}` must be a non-negative finite number, got {value!r}.")
    return value


def check_positive(value, name):
    value = float(value)
    if not value > 0.0 or not math.isfinite(value):
        raise ValueError(f"`{name}` must be a positive finite number, got {value!r}.")
    return value


def check_vector(x, length=None, name="x", dtype=np.complex128):
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise ValueError(f"`{name}` must be one-dimensional, got shape {arr.shape}.")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"`{name}` has length {arr.shape[0]}, expected {length}.")
    return arr


def check_same_length(f, g):
    if len(f) != len(g):
        raise ValueError(f"length mismatch: {len(f)} != {len(g)}")
