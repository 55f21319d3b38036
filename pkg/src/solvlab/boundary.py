"""Parabolic visual boundaries: Q_m, (R^n, D_Mbar), R^n x Q_m, and the two
boundaries of a horocyclic product."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import spaces
from .errors import BlockMismatch, NotComparable, PrecisionExhausted
from .horoprod import XPoint
from .madic import MAdic
from .spaces import TreeVertex
from .spectral import SpectralSplit

__all__ = [
    "MAdic",
    "BlockVector",
    "ProductBoundaryPoint",
    "madic_dist",
    "dM_metric",
    "product_metric",
    "visual_metric",
    "horo_boundary_class",
    "PrecisionExhausted",
]


def madic_dist(x: MAdic, y: MAdic) -> Fraction:
    """m**(-v) with v the valuation of x - y, as an exact rational."""
    if x.m != y.m:
        raise ValueError("m-adic operands must share the base")
    v = x.diff_valuation(y)
    if v is None:
        return Fraction(0)
    return Fraction(x.m) ** -v


@dataclass(frozen=True, eq=False)
class BlockVector:
    """A boundary vector split into eigen-blocks of increasing log-modulus."""

    blocks: tuple
    alphas: tuple

    @classmethod
    def from_vector(cls, x, split: SpectralSplit, side=1):
        x = np.asarray(x, dtype=float)
        n = split.n1 if side == 1 else split.n2
        if x.shape != (n,):
            raise BlockMismatch(f"expected a vector of length {n}")
        return cls.from_classes(x, split.classes(side), split.block_alphas(side))

    @classmethod
    def from_classes(cls, x, classes, alphas):
        x = np.asarray(x, dtype=float)
        if sum(len(c) for c in classes) != x.shape[0]:
            raise BlockMismatch("vector length does not match the block structure")
        return cls(tuple(x[list(c)] for c in classes), tuple(alphas))

    def norms(self):
        return [float(np.linalg.norm(b)) for b in self.blocks]


@dataclass(frozen=True, eq=False)
class ProductBoundaryPoint:
    x: object  # BlockVector or raw vector
    y: MAdic


def _block_diffs(v, w, split, side):
    if isinstance(v, BlockVector) and isinstance(w, BlockVector):
        if len(v.blocks) != len(w.blocks) or any(a.shape != b.shape for a, b in zip(v.blocks, w.blocks)):
            raise BlockMismatch("block structures differ")
        return [float(np.linalg.norm(a - b)) for a, b in zip(v.blocks, w.blocks)], v.alphas
    if split is None:
        raise BlockMismatch("raw vectors need a split for their block structure")
    v = v if isinstance(v, BlockVector) else BlockVector.from_vector(v, split, side)
    w = w if isinstance(w, BlockVector) else BlockVector.from_vector(w, split, side)
    return _block_diffs(v, w, None, side)


def dM_metric(v, w, split: Optional[SpectralSplit] = None, side=1, base=None) -> float:
    """max_i |dx_i| ** (log(base) / alpha_i); base defaults to exp(alpha_1)."""
    diffs, alphas = _block_diffs(v, w, split, side)
    if not alphas:
        return 0.0
    la = alphas[0] if base is None else math.log(base)
    return max((d ** (la / a) if d > 0 else 0.0) for d, a in zip(diffs, alphas))


def product_metric(p: ProductBoundaryPoint, q: ProductBoundaryPoint, split=None, side=2, base=None) -> float:
    """max(D_Mbar, m-adic distance)."""
    real = 0.0
    if p.x is not None and (not hasattr(p.x, "__len__") or len(p.x) or isinstance(p.x, BlockVector)):
        real = dM_metric(p.x, q.x, split, side, base)
    return max(real, float(madic_dist(p.y, q.y)))


def visual_metric(xi, eta, a, eps, lam=None):
    """a ** t0 with t0 the first height at which the two vertical geodesics
    are within eps.

    Tree ends are MAdic values; G_Mbar ends are vectors with moduli ``lam``
    (scalar or per-coordinate, all > 1).
    """
    if isinstance(xi, TreeVertex):
        xi, eta = spaces.tree_end(xi), spaces.tree_end(eta)
    if isinstance(xi, MAdic):
        v = xi.diff_valuation(eta)
        if v is None:
            return 0.0
        t0 = -v - int(math.floor(eps / 2))
        return float(a) ** t0
    if lam is None:
        raise ValueError("G_Mbar ends need their moduli")
    dv = np.atleast_1d(np.asarray(xi, dtype=float) - np.asarray(eta, dtype=float))
    lam = np.broadcast_to(np.atleast_1d(np.asarray(lam, dtype=float)), dv.shape)
    if not np.any(dv):
        return 0.0
    if eps <= 0:
        raise NotComparable("distinct vertical geodesics never come within distance 0")
    nz = dv != 0
    if np.allclose(lam[nz], lam[nz][0]):
        t0 = math.log(float(np.linalg.norm(dv)) / eps) / math.log(float(lam[nz][0]))
    else:
        def gap(t):
            return math.log(float(np.linalg.norm(lam ** (-t) * dv))) - math.log(eps)

        ts = np.log(np.abs(dv[nz]) / eps) / np.log(lam[nz])
        lo, hi = float(ts.min()) - 1.0, float(ts.max()) + 1.0 + math.log(len(dv))
        t0 = brentq(gap, lo, hi, xtol=1e-13)
    return float(a) ** t0


def horo_boundary_class(ell, side, split=None):
    """Class of a vertical geodesic in the side-1 or side-2 boundary.

    ``ell`` is an XPoint of X_Mbar (the geodesic through it) or an HPoint.
    """
    if side not in (1, 2):
        raise ValueError("side must be 1 or 2")
    if isinstance(ell, XPoint):
        if split is None:
            raise ValueError("X_Mbar geodesics need the split")
        v = np.array([float(x) for x in ell.v])
        if side == 1:
            return v[: split.n1]
        if split.det == 1:
            return v[split.n1:]
        if split.n2 == 0:
            return ell.y
        return ProductBoundaryPoint(v[split.n1:], ell.y)
    x = ell.x1 if side == 1 else ell.x2
    g = spaces.vertical_geodesic(x)
    if isinstance(g, tuple) and len(g) == 2 and isinstance(g[0], MAdic):
        return ProductBoundaryPoint(np.array(g[1], dtype=float), g[0])
    return g
