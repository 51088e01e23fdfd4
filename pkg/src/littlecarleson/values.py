"""Normed values in the concrete Banach spaces used for test functions.

Three families are supported: complex scalars, finite-dimensional l_p vectors
and Schatten-p matrices. A :class:`Space` knows how to compute norms of whole
arrays of payloads at once; :class:`NormedValue` wraps a single element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError

MAX_DIM = 16

SCALAR = "scalar"
LP = "lp"
SCHATTEN = "schatten"


@dataclass(frozen=True)
class Space:
    kind: str = SCALAR
    d: int = 1
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in (SCALAR, LP, SCHATTEN):
            raise StructuralError(f"unknown space kind {self.kind!r}")
        if self.kind == SCALAR and self.d != 1:
            raise StructuralError("scalar space has d = 1")
        if not 1 <= self.d <= MAX_DIM and self.kind == SCHATTEN:
            raise StructuralError(f"Schatten dimension must be in [1, {MAX_DIM}]")
        if self.d < 1:
            raise StructuralError("dimension must be positive")
        if not self.p >= 1:
            raise StructuralError("p must be >= 1")

    @property
    def shape(self) -> tuple:
        if self.kind == SCALAR:
            return ()
        if self.kind == LP:
            return (self.d,)
        return (self.d, self.d)

    @property
    def tag(self) -> str:
        if self.kind == SCALAR:
            return "complex-scalar"
        name = "lp-vector" if self.kind == LP else "schatten-matrix"
        return f"{name}({self.d},{_fmt_p(self.p)})"

    def check(self, arr: np.ndarray, lead: int = 0) -> None:
        if tuple(arr.shape[lead:]) != self.shape:
            raise StructuralError(
                f"payload shape {arr.shape[lead:]} does not match {self.tag}"
            )

    def norms(self, arr) -> np.ndarray:
        """Norms of an array of payloads; the trailing axes hold one payload."""
        arr = np.asarray(arr)
        nd = len(self.shape)
        if arr.ndim < nd:
            raise StructuralError(f"payload shape {arr.shape} does not match {self.tag}")
        self.check(arr, arr.ndim - nd)
        if self.kind == SCALAR:
            return np.abs(arr)
        if self.kind == LP:
            return _lp(np.abs(arr), self.p, axis=-1)
        sv = singular_values(arr)
        return _lp(sv, self.p, axis=-1)

    def zero(self) -> "NormedValue":
        return NormedValue(self, np.zeros(self.shape, dtype=complex))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d, "p": self.p}

    @classmethod
    def from_dict(cls, data: dict) -> "Space":
        return cls(data.get("kind", SCALAR), int(data.get("d", 1)), float(data.get("p", 2.0)))


def _fmt_p(p):
    return "inf" if np.isinf(p) else f"{p:g}"


def _lp(a, p, axis=-1):
    if np.isinf(p):
        return a.max(axis=axis)
    if p == 1:
        return a.sum(axis=axis)
    if p == 2:
        return np.sqrt((a * a).sum(axis=axis))
    m = a.max(axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    return np.squeeze(safe, axis=axis) * ((a / safe) ** p).sum(axis=axis) ** (1.0 / p)


def singular_values(arr: np.ndarray) -> np.ndarray:
    """Singular values of a stack of square matrices, descending.

    2x2 matrices use the closed form from the Frobenius norm and determinant,
    which is exact to rounding and much faster than a batched SVD.
    """
    arr = np.asarray(arr)
    if arr.shape[-2:] == (2, 2):
        fro2 = (np.abs(arr) ** 2).sum(axis=(-2, -1))
        det = np.abs(arr[..., 0, 0] * arr[..., 1, 1] - arr[..., 0, 1] * arr[..., 1, 0])
        disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
        s1 = np.sqrt((fro2 + disc) / 2.0)
        # small singular value from det/s1 avoids cancellation
        s2 = np.divide(det, s1, out=np.zeros_like(s1), where=s1 > 0)
        return np.stack([s1, s2], axis=-1)
    return np.linalg.svd(arr, compute_uv=False)


@dataclass(frozen=True, eq=False)
class NormedValue:
    """An immutable element of a :class:`Space`."""

    space: Space
    payload: np.ndarray

    def __post_init__(self):
        arr = np.array(self.payload, dtype=complex)
        self.space.check(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "payload", arr)

    def norm(self) -> float:
        return float(self.space.norms(self.payload))

    def __add__(self, other: "NormedValue") -> "NormedValue":
        return add(self, other)

    def __sub__(self, other: "NormedValue") -> "NormedValue":
        return add(self, scale(-1.0, other))

    def __rmul__(self, c) -> "NormedValue":
        return scale(c, self)

    def __neg__(self):
        return scale(-1.0, self)

    def __repr__(self):
        return f"NormedValue({self.space.tag}, norm={self.norm():.6g})"

    def allclose(self, other: "NormedValue", atol=1e-12) -> bool:
        return self.space == other.space and np.allclose(self.payload, other.payload, atol=atol, rtol=0)


def norm(v: NormedValue) -> float:
    return v.norm()


def add(u: NormedValue, v: NormedValue) -> NormedValue:
    if u.space != v.space:
        raise StructuralError(f"cannot add {u.space.tag} and {v.space.tag}")
    return NormedValue(u.space, u.payload + v.payload)


def scale(c: complex, v: NormedValue) -> NormedValue:
    return NormedValue(v.space, complex(c) * v.payload)


def scalar(z: complex) -> NormedValue:
    return NormedValue(Space(), np.asarray(z, dtype=complex))


def lp_vector(components, p: float = 2.0) -> NormedValue:
    arr = np.asarray(components, dtype=complex)
    return NormedValue(Space(LP, arr.shape[0], p), arr)


def schatten_matrix(matrix, p: float = 2.0) -> NormedValue:
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructuralError("Schatten payload must be a square matrix")
    return NormedValue(Space(SCHATTEN, arr.shape[0], p), arr)
