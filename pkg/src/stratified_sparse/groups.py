"""Finite models of stratified groups.

Two families are provided:

* ``Torus(d, n)``: the abelian group (Z/n)^d with the Euclidean gauge of the
  symmetric representative; homogeneous dimension ``d``.
* ``HeisenbergQuotient(n)``: the Heisenberg group over Z/n in polarized
  coordinates, ``(x, y, z) * (x', y', z') = (x + x', y + y', z + z' + x y')``
  with every coordinate reduced mod ``n``; homogeneous dimension 4.

Group elements are addressed by a flat integer index (mixed radix over the
coordinate moduli).  All tables are built once and the model is immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEFAULT_MAX_SIZE = 4096


class GroupSizeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Descriptor of a finite group model, e.g. ``ModelSpec("torus", n=64, d=1)``."""

    kind: str
    n: int
    d: int = 1

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """Parse ``torus:d=1,n=64`` / ``heisenberg:n=6`` style descriptors."""
        kind, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, _, value = item.partition("=")
            params[key.strip()] = int(value)
        kind = kind.strip().lower()
        if kind not in ("torus", "heisenberg"):
            raise ValueError(f"unknown model kind {kind!r}")
        if "n" not in params:
            raise ValueError(f"model descriptor {text!r} lacks n")
        return cls(kind, params["n"], params.get("d", 3 if kind == "heisenberg" else 1))

    def __str__(self) -> str:
        if self.kind == "torus":
            return f"torus:d={self.d},n={self.n}"
        return f"heisenberg:n={self.n}"


@dataclass(frozen=True, eq=False)
class GroupModel:
    kind: str
    n: int
    moduli: tuple[int, ...]
    Q: int
    generators: tuple[tuple[int, ...], ...]
    quasi_triangle: float = field(default=float("nan"))

    # ------------------------------------------------------------------
    # indexing
    @property
    def dim(self) -> int:
        return len(self.moduli)

    @property
    def size(self) -> int:
        return int(np.prod(self.moduli))

    @property
    def identity(self) -> int:
        return 0

    @cached_property
    def coords(self) -> np.ndarray:
        """``(size, dim)`` array of canonical coordinates, row ``i`` = element ``i``."""
        grids = np.meshgrid(*[np.arange(m) for m in self.moduli], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    def index(self, coords) -> np.ndarray | int:
        c = np.mod(np.asarray(coords, dtype=np.int64), self.moduli)
        idx = np.ravel_multi_index(tuple(np.moveaxis(c, -1, 0)), self.moduli)
        return int(idx) if np.ndim(idx) == 0 else idx

    def point(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.coords[i])

    # ------------------------------------------------------------------
    # group law on coordinate arrays (broadcasting over leading axes)
    def multiply_coords(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = a + b
        if self.kind == "heisenberg":
            out = out.copy()
            out[..., 2] += a[..., 0] * b[..., 1]
        return np.mod(out, self.moduli)

    def inverse_coords(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        out = -a
        if self.kind == "heisenberg":
            out = out.copy()
            out[..., 2] += a[..., 0] * a[..., 1]
        return np.mod(out, self.moduli)

    def multiply(self, a, b) -> tuple[int, ...]:
        return tuple(int(v) for v in self.multiply_coords(a, b))

    def inverse(self, a) -> tuple[int, ...]:
        return tuple(int(v) for v in self.inverse_coords(a))

    # ------------------------------------------------------------------
    # index tables
    @cached_property
    def inverse_table(self) -> np.ndarray:
        return self.index(self.inverse_coords(self.coords))

    @cached_property
    def mul_table(self) -> np.ndarray:
        """``mul_table[a, b]`` is the index of ``a * b``."""
        c = self.coords
        n = self.size
        dtype = np.int32 if n < 2**31 else np.int64
        table = np.empty((n, n), dtype=dtype)
        for start in range(0, n, 256):
            stop = min(start + 256, n)
            prod = self.multiply_coords(c[start:stop, None, :], c[None, :, :])
            table[start:stop] = self.index(prod)
        return table

    @cached_property
    def left_quotient_table(self) -> np.ndarray:
        """``left_quotient_table[y, x]`` is the index of ``y^{-1} x``."""
        return self.mul_table[self.inverse_table]

    # ------------------------------------------------------------------
    # quasi-norm
    def _gauge(self, c: np.ndarray) -> np.ndarray:
        rep = symmetric_representative(c, self.moduli).astype(float)
        if self.kind == "torus":
            return np.sqrt(np.sum(rep**2, axis=-1))
        x, y = rep[..., 0], rep[..., 1]
        # central coordinate in exponential coordinates, wrapped to (-n/2, n/2]
        n3 = self.moduli[2]
        t = np.asarray(c, dtype=float)[..., 2] - x * y / 2.0
        t = n3 / 2.0 - np.mod(n3 / 2.0 - t, n3)
        return ((x**2 + y**2) ** 2 + t**2) ** 0.25

    @cached_property
    def norms(self) -> np.ndarray:
        """Quasi-norm of every element, symmetrized so that ``|a^{-1}| = |a|``."""
        g = self._gauge(self.coords)
        out = np.maximum(g, g[self.inverse_table])
        out[self.identity] = 0.0
        return out

    def quasi_norm(self, a) -> float:
        return float(self.norms[self.index(a)])

    @cached_property
    def distance(self) -> np.ndarray:
        """``distance[z, x] = |z^{-1} x|`` (left invariant, symmetric)."""
        return self.norms[self.left_quotient_table]

    @cached_property
    def diameter(self) -> float:
        return float(self.norms.max())

    @cached_property
    def min_positive_norm(self) -> float:
        return float(self.norms[self.norms > 0].min())

    @cached_property
    def norm_values(self) -> np.ndarray:
        """Sorted distinct quasi-norm values, starting with 0."""
        return np.unique(self.norms)

    # ------------------------------------------------------------------
    def ball(self, center, r: float) -> np.ndarray:
        """Indices of ``{x : |center^{-1} x| < r}`` in increasing order."""
        c = center if isinstance(center, (int, np.integer)) else self.index(center)
        return np.flatnonzero(self.distance[c] < r)

    def ball_sizes(self, radii) -> np.ndarray:
        return np.array([int(np.count_nonzero(self.norms < r)) for r in radii])

    def left_translate(self, f: np.ndarray, g: int) -> np.ndarray:
        """``(L_g f)(x) = f(g^{-1} x)``."""
        return np.asarray(f)[self.left_quotient_table[g]]

    def convolve(self, f: np.ndarray, k: np.ndarray) -> np.ndarray:
        """``(f * k)(x) = sum_y f(y) k(y^{-1} x)`` with counting measure."""
        f = np.asarray(f)
        k = np.asarray(k)
        table = self.left_quotient_table
        out = np.zeros(self.size, dtype=np.result_type(f, k))
        for start in range(0, self.size, 512):
            stop = min(start + 512, self.size)
            out += f[start:stop] @ k[table[start:stop]]
        return out

    def convolution_matrix(self, k: np.ndarray) -> np.ndarray:
        """Matrix ``A`` with ``A @ f == convolve(f, k)``, i.e. ``A[x, y] = k(y^{-1} x)``."""
        return np.asarray(k)[self.left_quotient_table.T]


def symmetric_representative(c, moduli) -> np.ndarray:
    """Map residues into ``(-m/2, m/2]``."""
    m = np.asarray(moduli)
    c = np.mod(np.asarray(c, dtype=np.int64), m)
    return np.where(c > m // 2, c - m, c)


def build_group(spec: ModelSpec | str, max_size: int = DEFAULT_MAX_SIZE, seed: int = 0,
                samples: int = 1000) -> GroupModel:
    """Build a model, check the group axioms on random samples and measure the
    quasi-triangle constant ``K = max |ab| / (|a| + |b|)``."""
    if isinstance(spec, str):
        spec = ModelSpec.parse(spec)
    if spec.n < 2 or spec.d < 1:
        raise ValueError(f"non-positive model parameters: n={spec.n}, d={spec.d}")
    if spec.kind == "torus":
        moduli = (spec.n,) * spec.d
        Q = spec.d
        gens = []
        for i in range(spec.d):
            e = [0] * spec.d
            e[i] = 1
            gens.append(tuple(e))
    elif spec.kind == "heisenberg":
        moduli = (spec.n, spec.n, spec.n)
        Q = 4
        gens = [(1, 0, 0), (0, 1, 0)]
    else:
        raise ValueError(f"unknown model kind {spec.kind!r}")
    size = math.prod(moduli)
    if size > max_size:
        raise GroupSizeError(f"size-limit exceeded: |G| = {size} > {max_size}")

    model = GroupModel(spec.kind, spec.n, moduli, Q, tuple(gens))
    _check_axioms(model, np.random.default_rng(seed), samples)
    object.__setattr__(model, "quasi_triangle", measure_quasi_triangle(model))
    return model


def _check_axioms(g: GroupModel, rng: np.random.Generator, samples: int) -> None:
    c = g.coords
    a, b, d = (c[rng.integers(g.size, size=samples)] for _ in range(3))
    lhs = g.multiply_coords(g.multiply_coords(a, b), d)
    rhs = g.multiply_coords(a, g.multiply_coords(b, d))
    if not np.array_equal(lhs, rhs):
        raise AssertionError("group law is not associative on the sample")
    e = np.zeros_like(a)
    if not np.array_equal(g.multiply_coords(a, e), a) or not np.array_equal(g.multiply_coords(e, a), a):
        raise AssertionError("identity axiom fails")
    if not np.array_equal(g.multiply_coords(a, g.inverse_coords(a)), e):
        raise AssertionError("inverse axiom fails")


def measure_quasi_triangle(g: GroupModel) -> float:
    """Exhaustive ``max |ab| / (|a| + |b|)`` over pairs with ``a, b != e``."""
    nrm = g.norms
    worst = 0.0
    table = g.mul_table
    for start in range(1, g.size, 256):
        stop = min(start + 256, g.size)
        num = nrm[table[start:stop, 1:]]
        den = nrm[start:stop, None] + nrm[None, 1:]
        worst = max(worst, float((num / den).max()))
    return worst


def growth_table(g: GroupModel, radii=None) -> list[tuple[float, int]]:
    """Rows ``(r, |B(e, r)|)``; defaults to the distinct norm values above 0."""
    if radii is None:
        radii = g.norm_values[1:]
    return [(float(r), int(s)) for r, s in zip(radii, g.ball_sizes(radii))]


def fitted_growth_exponent(g: GroupModel, r_max: float | None = None) -> float:
    """Least-squares slope of ``log |B(e, r)|`` against ``log r`` for ``r <= r_max``
    (default a quarter of the diameter)."""
    if r_max is None:
        r_max = g.diameter / 4
    radii = g.norm_values[(g.norm_values > 0) & (g.norm_values <= r_max)]
    if radii.size < 2:
        raise ValueError(f"need at least two radii up to {r_max:g}; the model is too small")
    # closed balls {|x| <= r}
    sizes = np.array([np.count_nonzero(g.norms <= r) for r in radii])
    slope, _ = np.polyfit(np.log(radii), np.log(sizes), 1)
    return float(slope)


def doubling_constant(g: GroupModel, r_max: float | None = None) -> float:
    if r_max is None:
        r_max = g.diameter / 2
    radii = g.norm_values[(g.norm_values > 0) & (g.norm_values <= r_max)]
    return float(max(g.ball_sizes(2 * radii) / g.ball_sizes(radii)))
