"""Spectral analysis of integral matrices.

Every accepted matrix is factored as ``M = S @ Mbar @ P @ inv(S)`` with
``Mbar`` the diagonal of eigenvalue moduli and ``P`` orthogonal (signs for
real eigenvalues, rotation blocks for complex pairs).  Coordinates are
ordered by decreasing modulus, so the expanding block comes first.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ._arith import bareiss_det, iroot, mat_inverse, nullspace
from .errors import (
    EigenvalueOnUnitCircle,
    EmptyBlock,
    NonIntegralDeterminantPower,
    NotDiagonalizable,
    SingularMatrix,
)

UNIT_CIRCLE_TOL = 1e-9
ALPHA_MERGE_TOL = 1e-9
_CLUSTER_TOL = 1e-6
_RANK_TOL = 1e-7


@dataclass(frozen=True)
class ExactSplit:
    """Rational factorization, available when every eigenvalue is an integer."""

    S: tuple
    Sinv: tuple
    mbar: tuple  # diagonal of Mbar as ints
    signs: tuple  # diagonal of P as +-1


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    M: tuple
    eigenvalues: tuple
    Mbar: np.ndarray
    Mbar1: np.ndarray
    Mbar2: np.ndarray
    S: np.ndarray
    Sinv: np.ndarray
    P: np.ndarray
    det: int
    det_sign: int
    n1: int
    n2: int
    alphas: tuple
    alphas2: tuple
    classes1: tuple  # per alpha, the coordinate indices inside block 1
    classes2: tuple
    exact: Optional[ExactSplit] = None

    @property
    def n(self):
        return len(self.M)

    @property
    def moduli(self):
        return np.diag(self.Mbar).copy()

    def M_array(self):
        return np.array(self.M, dtype=float)

    def block_diag(self, block):
        """Diagonal of Mbar1 (block 1) or Mbar2 (block 2)."""
        return np.diag(self.Mbar1 if block == 1 else self.Mbar2).copy()

    def block_slice(self, block):
        return slice(0, self.n1) if block == 1 else slice(self.n1, self.n)

    def classes(self, block):
        return self.classes1 if block == 1 else self.classes2

    def block_alphas(self, block):
        return self.alphas if block == 1 else self.alphas2


def _as_int_matrix(M) -> tuple:
    rows = [list(r) for r in M]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ValueError("matrix must be square and nonempty")
    out = []
    for r in rows:
        row = []
        for x in r:
            if int(x) != x:
                raise ValueError(f"non-integer entry {x!r}")
            row.append(int(x))
        out.append(tuple(row))
    return tuple(out)


def _sort_key(lam):
    # modulus descending, then real part descending, then positive imaginary first
    return (-round(abs(lam), 12), -round(lam.real, 12), -lam.imag)


def _cluster(eigs):
    clusters = []
    for lam in eigs:
        for c in clusters:
            if abs(c[0] - lam) < _CLUSTER_TOL * max(1.0, abs(lam)):
                c.append(lam)
                break
        else:
            clusters.append([lam])
    return clusters


def _null_basis(A, k):
    """Orthonormal basis of the k-dimensional numerical kernel of A."""
    _, sv, vh = np.linalg.svd(A)
    scale = max(1.0, float(np.max(np.abs(A))))
    small = int(np.sum(sv < _RANK_TOL * scale))
    if small != k:
        raise NotDiagonalizable(
            f"geometric multiplicity {small} differs from algebraic multiplicity {k}"
        )
    return vh[-k:].conj().T


def _exact_split(M, eigs):
    """Exact S for matrices with integer spectrum; None otherwise."""
    ints = []
    for lam in eigs:
        if abs(lam.imag) > 1e-9 or abs(lam.real - round(lam.real)) > 1e-6:
            return None
        ints.append(int(round(lam.real)))
    n = len(M)
    columns = []
    for lam in sorted(set(ints), key=lambda x: (-abs(x), -x)):
        shifted = [[M[i][j] - (lam if i == j else 0) for j in range(n)] for i in range(n)]
        if bareiss_det(shifted) != 0:
            return None
        k = ints.count(lam)
        basis = nullspace(shifted)
        if len(basis) != k:
            raise NotDiagonalizable(f"eigenvalue {lam} has a nontrivial Jordan block")
        columns.extend((lam, v) for v in basis)
    S = [[columns[j][1][i] for j in range(n)] for i in range(n)]
    Sinv = mat_inverse(S)
    return ExactSplit(
        S=tuple(tuple(r) for r in S),
        Sinv=tuple(tuple(r) for r in Sinv),
        mbar=tuple(abs(lam) for lam, _ in columns),
        signs=tuple(1 if lam > 0 else -1 for lam, _ in columns),
    )


def _alpha_classes(diag):
    """Group coordinates by distinct log-modulus; ascending alphas."""
    logs = [math.log(x) for x in diag]
    alphas = []
    for a in sorted(logs):
        if not alphas or a - alphas[-1] > ALPHA_MERGE_TOL:
            alphas.append(a)
    classes = tuple(
        tuple(i for i, a in enumerate(logs) if abs(a - alpha) <= ALPHA_MERGE_TOL) for alpha in alphas
    )
    return tuple(alphas), classes


def analyze(M) -> SpectralSplit:
    Mi = _as_int_matrix(M)
    n = len(Mi)
    det = bareiss_det(Mi)
    if det == 0:
        raise SingularMatrix("matrix is singular")
    A = np.array(Mi, dtype=float)
    eigs = np.linalg.eigvals(A)
    if not np.all(np.isfinite(eigs)):
        # companion-matrix fallback through the characteristic polynomial
        eigs = np.roots(np.poly(A))
    for lam in eigs:
        if abs(abs(lam) - 1.0) < UNIT_CIRCLE_TOL:
            raise EigenvalueOnUnitCircle(f"eigenvalue {lam} has modulus 1")
    eigs = [complex(x) for x in eigs]
    # conjugate pairs must come out exactly conjugate
    eigs = [complex(x.real, 0.0) if abs(x.imag) < 1e-12 else x for x in eigs]
    eigs.sort(key=_sort_key)

    exact = _exact_split(Mi, eigs)
    if exact is not None:
        S = np.array([[float(x) for x in r] for r in exact.S])
        mods = [float(x) for x in exact.mbar]
        P = np.diag([float(s) for s in exact.signs])
        eig_sorted = [complex(x * s) for x, s in zip(exact.mbar, exact.signs)]
    else:
        cols, mods, blocks, eig_sorted = [], [], [], []
        for cl in _cluster(eigs):
            lam = complex(np.mean(cl))
            k = len(cl)
            if abs(lam.imag) < 1e-9:
                lam = complex(lam.real, 0.0)
                basis = _null_basis(A - lam.real * np.eye(n), k).real
                for j in range(k):
                    cols.append(basis[:, j])
                    mods.append(abs(lam.real))
                    blocks.append(np.array([[math.copysign(1.0, lam.real)]]))
                    eig_sorted.append(lam)
            elif lam.imag > 0:
                basis = _null_basis(A.astype(complex) - lam * np.eye(n), k)
                r, theta = abs(lam), cmath.phase(lam)
                c, s = math.cos(theta), math.sin(theta)
                for j in range(k):
                    z = basis[:, j]
                    cols.extend([z.real, z.imag])
                    mods.extend([r, r])
                    blocks.append(np.array([[c, s], [-s, c]]))
                    eig_sorted.extend([lam, lam.conjugate()])
        S = np.column_stack(cols)
        P = np.zeros((n, n))
        i = 0
        for b in blocks:
            w = b.shape[0]
            P[i:i + w, i:i + w] = b
            i += w
        if len(mods) != n:
            raise NotDiagonalizable("could not assemble a full eigenbasis")
    Mbar = np.diag(mods)
    Sinv = np.linalg.inv(S)
    recon = S @ Mbar @ P @ Sinv
    if np.max(np.abs(recon - A)) > 1e-9:
        raise NotDiagonalizable("reconstruction S Mbar P S^-1 failed; matrix is ill-conditioned")
    n1 = sum(1 for x in mods if x > 1)
    n2 = n - n1
    Mbar1 = np.diag(mods[:n1]) if n1 else np.zeros((0, 0))
    Mbar2 = np.diag([1.0 / x for x in mods[n1:]]) if n2 else np.zeros((0, 0))
    alphas, classes1 = _alpha_classes(mods[:n1]) if n1 else ((), ())
    alphas2, classes2 = _alpha_classes([1.0 / x for x in mods[n1:]]) if n2 else ((), ())
    return SpectralSplit(
        M=Mi,
        eigenvalues=tuple(eig_sorted),
        Mbar=Mbar,
        Mbar1=Mbar1,
        Mbar2=Mbar2,
        S=S,
        Sinv=Sinv,
        P=P,
        det=abs(det),
        det_sign=1 if det > 0 else -1,
        n1=n1,
        n2=n2,
        alphas=alphas,
        alphas2=alphas2,
        classes1=classes1,
        classes2=classes2,
        exact=exact,
    )


SOL_LIKE = "SolLike"
EXPANDING = "Expanding"
MIXED = "Mixed"
SCALAR_TREE = "ScalarTree"


def classify(split: SpectralSplit) -> str:
    if split.n == 1:
        return SCALAR_TREE
    if split.det == 1:
        return SOL_LIKE
    if split.n2 == 0:
        return EXPANDING
    return MIXED


def exact_det_power(d: int, k) -> int:
    """d**k as an exact integer, or raise NonIntegralDeterminantPower."""
    k = Fraction(k)
    if d == 1:
        return 1
    if k < 0:
        raise NonIntegralDeterminantPower(f"{d}^{k} is not an integer")
    root = iroot(d ** k.numerator, k.denominator)
    if root is None:
        raise NonIntegralDeterminantPower(f"{d}^{k} is not an integer")
    return root


def absolute_power(split: SpectralSplit, k):
    """Return (Mbar**k, d**k); d**k must be an integer."""
    k = Fraction(k)
    dk = exact_det_power(split.det, k)
    return np.diag(split.moduli ** float(k)), dk


def snowflake_exponents(split: SpectralSplit, block=1) -> list:
    """Ratios alpha_1/alpha_i over the distinct log-moduli of a block, descending."""
    b = _block_number(block)
    alphas = split.block_alphas(b)
    if not alphas:
        raise EmptyBlock(f"block {block} is empty")
    return [alphas[0] / a for a in alphas]


def _block_number(block):
    if block in (1, "1", "Expanding1", "expanding1"):
        return 1
    if block in (2, "2", "Expanding2", "expanding2"):
        return 2
    raise ValueError(f"unknown block {block!r}")


def orthogonal_power(P: np.ndarray, s) -> np.ndarray:
    """P**s for orthogonal P; integer s is exact, fractional s needs a real branch."""
    s_frac = Fraction(s).limit_denominator(10**9) if not isinstance(s, Fraction) else s
    if s_frac.denominator == 1:
        return np.linalg.matrix_power(P, int(s_frac)) if s_frac >= 0 else np.linalg.matrix_power(P.T, -int(s_frac))
    w, U = np.linalg.eig(P)
    theta = np.angle(w)
    # an unpaired eigenvalue -1 has no real fractional power; caught by the imag check
    out = (U @ np.diag(np.exp(1j * float(s) * theta)) @ np.linalg.inv(U))
    if np.max(np.abs(out.imag)) > 1e-9:
        raise ValueError("orthogonal matrix has no real fractional power of this order")
    return out.real


def split_to_json(split: SpectralSplit) -> dict:
    def _c(z):
        return [z.real, z.imag] if z.imag else z.real

    return {
        "matrix": [list(r) for r in split.M],
        "eigenvalues": [_c(z) for z in split.eigenvalues],
        "mbar": split.moduli.tolist(),
        "mbar1": np.diag(split.Mbar1).tolist(),
        "mbar2": np.diag(split.Mbar2).tolist(),
        "det": split.det,
        "case": classify(split),
        "alphas": list(split.alphas),
        "alphas2": list(split.alphas2),
    }


def parse_matrix(text: str) -> list:
    import json

    M = json.loads(text)
    if isinstance(M, int):
        M = [[M]]
    return M


__all__ = [
    "SpectralSplit",
    "ExactSplit",
    "analyze",
    "classify",
    "absolute_power",
    "snowflake_exponents",
    "orthogonal_power",
    "exact_det_power",
    "split_to_json",
    "parse_matrix",
    "SOL_LIKE",
    "EXPANDING",
    "MIXED",
    "SCALAR_TREE",
]
