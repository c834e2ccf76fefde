"""Dense float64 matrix kernel and seeded RNG.

All public operations work on 2-D C-contiguous float64 arrays, check shapes
exactly (no broadcasting), and refuse to let NaN/Inf escape. The RNG is
SplitMix64, so streams are reproducible bit-for-bit from a 64-bit seed on
any platform.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

Matrix = np.ndarray

_U64_MASK = (1 << 64) - 1


class ShapeError(ValueError):
    """Operand shapes do not satisfy an operation's contract."""


class NumericError(ArithmeticError):
    """A numeric result left the finite float64 range."""


def matrix(data) -> Matrix:
    """Build a 2-D float64 matrix from nested sequences, validating finiteness."""
    out = np.array(data, dtype=np.float64, order="C")
    if out.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={out.ndim}")
    _require_finite(out, "matrix")
    return out


def zeros(rows: int, cols: int) -> Matrix:
    if rows < 1 or cols < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return np.zeros((rows, cols), dtype=np.float64)


def _require_2d(a: Matrix, op: str) -> None:
    if not isinstance(a, np.ndarray) or a.ndim != 2:
        raise ShapeError(f"{op}: operand must be a 2-D matrix")


def _require_same_shape(a: Matrix, b: Matrix, op: str) -> None:
    _require_2d(a, op)
    _require_2d(b, op)
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _require_finite(a: np.ndarray, op: str) -> None:
    if not np.isfinite(a).all():
        raise NumericError(f"{op}: non-finite value in result")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with sequential per-element accumulation.

    einsum keeps the summation order identical to the naive triple loop, so
    results are reproducible down to the last ulp regardless of the BLAS
    the interpreter was built against.
    """
    _require_2d(a, "matmul")
    _require_2d(b, "matmul")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ ({a.shape} x {b.shape})")
    out = np.einsum("ik,kj->ij", a, b)
    _require_finite(out, "matmul")
    return out


def add(a: Matrix, b: Matrix) -> Matrix:
    _require_same_shape(a, b, "add")
    out = a + b
    _require_finite(out, "add")
    return out


def sub(a: Matrix, b: Matrix) -> Matrix:
    _require_same_shape(a, b, "sub")
    out = a - b
    _require_finite(out, "sub")
    return out


def mul(a: Matrix, b: Matrix) -> Matrix:
    """Hadamard (elementwise) product."""
    _require_same_shape(a, b, "mul")
    out = a * b
    _require_finite(out, "mul")
    return out


def sigmoid(a: Matrix) -> Matrix:
    """Logistic function 1 / (1 + exp(-x)), overflow-safe for any finite input."""
    _require_2d(a, "sigmoid")
    out = expit(a)
    _require_finite(out, "sigmoid")
    return out


def tanh(a: Matrix) -> Matrix:
    _require_2d(a, "tanh")
    out = np.tanh(a)
    _require_finite(out, "tanh")
    return out


def one_minus(a: Matrix) -> Matrix:
    _require_2d(a, "one_minus")
    out = 1.0 - a
    _require_finite(out, "one_minus")
    return out


class Rng:
    """SplitMix64 pseudo-random generator.

    Single-owner: one consumer advances the state. The raw u64 stream is
    platform-independent; derived floats use only exact dyadic arithmetic.
    """

    def __init__(self, seed: int):
        self._state = int(seed) & _U64_MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _U64_MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform draw in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_scalar(self, lo: float, hi: float) -> float:
        if not lo < hi:
            raise ValueError(f"uniform: need lo < hi, got [{lo}, {hi})")
        return lo + (hi - lo) * self.next_float()

    def uniform(self, lo: float, hi: float, rows: int, cols: int) -> Matrix:
        """Matrix of i.i.d. uniform draws in [lo, hi), row-major fill order."""
        if not lo < hi:
            raise ValueError(f"uniform: need lo < hi, got [{lo}, {hi})")
        if rows < 1 or cols < 1:
            raise ValueError(f"uniform: dimensions must be positive, got {rows}x{cols}")
        span = hi - lo
        vals = [lo + span * self.next_float() for _ in range(rows * cols)]
        return np.array(vals, dtype=np.float64).reshape(rows, cols)

    def normal(self, n: int, mean: float = 0.0, sd: float = 1.0) -> np.ndarray:
        """1-D array of Gaussian draws via Box-Muller on the uniform stream."""
        if n < 0:
            raise ValueError(f"normal: n must be nonnegative, got {n}")
        if sd < 0:
            raise ValueError(f"normal: sd must be nonnegative, got {sd}")
        out = np.empty(n, dtype=np.float64)
        i = 0
        while i < n:
            u1 = 1.0 - self.next_float()  # (0, 1]; keeps log() finite
            u2 = self.next_float()
            radius = math.sqrt(-2.0 * math.log(u1))
            angle = 2.0 * math.pi * u2
            out[i] = radius * math.cos(angle)
            if i + 1 < n:
                out[i + 1] = radius * math.sin(angle)
            i += 2
        return mean + sd * out

    def below(self, n: int) -> int:
        """Integer in [0, n) via the multiply-high reduction."""
        if n < 1:
            raise ValueError(f"below: n must be positive, got {n}")
        return (self.next_u64() * n) >> 64

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n), driven by this stream."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
