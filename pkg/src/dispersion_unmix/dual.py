"""Forward-mode dual numbers.

A `Dual` carries a value and its directional derivative through the scalar
pipeline of the dispersion model. Payloads may be floats or numpy arrays,
so one pass differentiates a whole spectrum with respect to one parameter.
"""

from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("val", "dot")

    # Make `ndarray <op> Dual` defer to the reflected operators below
    # instead of numpy building an object array.
    __array_ufunc__ = None

    def __init__(self, val, dot=0.0):
        self.val = val
        self.dot = dot

    def __repr__(self):
        return f"Dual({self.val!r}, {self.dot!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val, self.dot * other.val + self.val * other.dot
            )
        return Dual(self.val * other, self.dot * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(
                self.val * inv, (self.dot - self.val * inv * other.dot) * inv
            )
        return Dual(self.val / other, self.dot / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        v = other * inv
        return Dual(v, -v * inv * self.dot)

    def __neg__(self):
        return Dual(-self.val, -self.dot)


def value(x):
    return x.val if isinstance(x, Dual) else x


def dot_part(x):
    return x.dot if isinstance(x, Dual) else 0.0


def sqrt(x):
    if isinstance(x, Dual):
        r = np.sqrt(x.val)
        return Dual(r, x.dot / (2.0 * r))
    return np.sqrt(x)


def clip_min(x, floor):
    """max(x, floor) with a zero derivative wherever the floor is active."""
    if isinstance(x, Dual):
        keep = x.val > floor
        return Dual(np.maximum(x.val, floor), np.where(keep, x.dot, 0.0))
    return np.maximum(x, floor)
