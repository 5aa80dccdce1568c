"""Banded-matrix algebra and quasi-Hamiltonian builders.

The quasi-Hamiltonian of a degree-t potential acts in the modified basis
psi = B(x) * sum h_n <x|n> and takes the (2t+1)-diagonal form

    M(E) = diag(eps_n - E) . Bband + Nband,

where Bband is the band of the denominator polynomial of x^2, Nband the band
of the effective numerator beta * N(x^2), and eps_n the harmonic eigenvalues.
M(E) is non-Hermitian because of the row scaling by eps_n - E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis
from .potential import CouplingPath, PadePotential

__all__ = [
    "BandedMatrix",
    "QuasiHamiltonian",
    "build_quasi_hamiltonian",
    "derivative_matrices",
    "solve_triangular",
    "banded_lu_det",
    "build_rho",
]


class BandedMatrix:
    """Real banded matrix with independent lower/upper half-bandwidths.

    Storage is row-major by diagonals: data[i, off + lower_bw] holds element
    (i, i + off) for off in [-lower_bw, upper_bw].  Reads outside the stored
    band return exactly 0; recurrences may therefore touch formal indices
    outside the matrix without special-casing.
    """

    __slots__ = ("size", "lower_bw", "upper_bw", "data")

    def __init__(self, size: int, lower_bw: int, upper_bw: int, data: np.ndarray | None = None):
        if size < 1 or lower_bw < 0 or upper_bw < 0:
            raise ValueError("invalid banded matrix shape")
        self.size = size
        self.lower_bw = lower_bw
        self.upper_bw = upper_bw
        width = lower_bw + upper_bw + 1
        if data is None:
            self.data = np.zeros((size, width))
        else:
            if data.shape != (size, width):
                raise ValueError("data shape does not match bandwidths")
            self.data = data

    def get(self, i: int, j: int) -> float:
        off = j - i
        if not (0 <= i < self.size and 0 <= j < self.size):
            return 0.0
        if off < -self.lower_bw or off > self.upper_bw:
            return 0.0
        return float(self.data[i, off + self.lower_bw])

    def set(self, i: int, j: int, value: float) -> None:
        off = j - i
        if off < -self.lower_bw or off > self.upper_bw:
            raise IndexError(f"element ({i}, {j}) outside stored band")
        self.data[i, off + self.lower_bw] = value

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for off in range(-self.lower_bw, self.upper_bw + 1):
            lo = max(0, -off)
            hi = min(self.size, self.size - off)
            rows = np.arange(lo, hi)
            out[rows, rows + off] = self.data[lo:hi, off + self.lower_bw]
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError("vector length does not match matrix size")
        out = np.zeros(self.size)
        for off in range(-self.lower_bw, self.upper_bw + 1):
            lo = max(0, -off)
            hi = min(self.size, self.size - off)
            out[lo:hi] += self.data[lo:hi, off + self.lower_bw] * x[lo + off:hi + off]
        return out

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        """Transpose action x^T M, returned as a vector."""
        return self.transpose().matvec(x)

    def transpose(self) -> "BandedMatrix":
        out = BandedMatrix(self.size, self.upper_bw, self.lower_bw)
        for off in range(-self.lower_bw, self.upper_bw + 1):
            lo = max(0, -off)
            hi = min(self.size, self.size - off)
            out.data[lo + off:hi + off, -off + out.lower_bw] = self.data[lo:hi, off + self.lower_bw]
        return out

    def __matmul__(self, other: "BandedMatrix") -> "BandedMatrix":
        if self.size != other.size:
            raise ValueError("size mismatch in banded product")
        lb = self.lower_bw + other.lower_bw
        ub = self.upper_bw + other.upper_bw
        out = BandedMatrix(self.size, lb, ub)
        n = self.size
        for off_a in range(-self.lower_bw, self.upper_bw + 1):
            col_a = self.data[:, off_a + self.lower_bw]
            for off_b in range(-other.lower_bw, other.upper_bw + 1):
                off_c = off_a + off_b
                # rows i where i, i+off_a, i+off_c are all in range
                lo = max(0, -off_a, -off_c)
                hi = min(n, n - off_a, n - off_c)
                if lo >= hi:
                    continue
                out.data[lo:hi, off_c + lb] += (
                    col_a[lo:hi] * other.data[lo + off_a:hi + off_a, off_b + other.lower_bw]
                )
        return out

    def scaled(self, c: float) -> "BandedMatrix":
        return BandedMatrix(self.size, self.lower_bw, self.upper_bw, self.data * c)

    def row_scaled(self, v: np.ndarray) -> "BandedMatrix":
        """diag(v) @ self."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ValueError("scaling vector length mismatch")
        return BandedMatrix(self.size, self.lower_bw, self.upper_bw, self.data * v[:, None])

    def add(self, other: "BandedMatrix") -> "BandedMatrix":
        if self.size != other.size:
            raise ValueError("size mismatch in banded sum")
        lb = max(self.lower_bw, other.lower_bw)
        ub = max(self.upper_bw, other.upper_bw)
        out = BandedMatrix(self.size, lb, ub)
        out.data[:, lb - self.lower_bw: lb + self.upper_bw + 1] += self.data
        out.data[:, lb - other.lower_bw: lb + other.upper_bw + 1] += other.data
        return out

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scaled(-1.0))

    def copy(self) -> "BandedMatrix":
        return BandedMatrix(self.size, self.lower_bw, self.upper_bw, self.data.copy())

    @staticmethod
    def identity(size: int) -> "BandedMatrix":
        m = BandedMatrix(size, 0, 0)
        m.data[:, 0] = 1.0
        return m

    @staticmethod
    def zeros(size: int, lower_bw: int = 0, upper_bw: int = 0) -> "BandedMatrix":
        return BandedMatrix(size, lower_bw, upper_bw)

    def widened(self, lower_bw: int, upper_bw: int) -> "BandedMatrix":
        """Copy with at least the requested bandwidths (zero padding)."""
        lb = max(lower_bw, self.lower_bw)
        ub = max(upper_bw, self.upper_bw)
        out = BandedMatrix(self.size, lb, ub)
        out.data[:, lb - self.lower_bw: lb + self.upper_bw + 1] = self.data
        return out

    def cropped(self, size: int) -> "BandedMatrix":
        """Leading principal size x size submatrix (same bandwidths).

        Stored entries that would reference columns beyond the new edge are
        zeroed, so .data never carries stale out-of-matrix values.
        """
        if size > self.size:
            raise ValueError("cropped size exceeds matrix size")
        out = BandedMatrix(size, self.lower_bw, self.upper_bw, self.data[:size].copy())
        for off in range(1, self.upper_bw + 1):
            out.data[max(0, size - off):, off + self.lower_bw] = 0.0
        return out


def banded_lu_det(m: BandedMatrix) -> tuple[float, float]:
    """Determinant of a banded matrix via banded LU with partial pivoting.

    Returns (sign, log|det|) with sign in {-1.0, 0.0, 1.0}; the split keeps
    determinants of large cutoffs representable.  The factorization works on
    LAPACK-style column storage with kl extra rows for pivoting fill.
    """
    n, kl, ku = m.size, m.lower_bw, m.upper_bw
    kuw = ku + kl  # working upper bandwidth after row interchanges
    ab = np.zeros((kl + kuw + 1, n))
    for off in range(-kl, ku + 1):
        lo = max(0, -off)
        hi = min(n, n - off)
        rows = np.arange(lo, hi)
        ab[kuw - off, rows + off] = m.data[lo:hi, off + kl]

    sign = 1.0
    logabs = 0.0
    for j in range(n):
        span = min(kl, n - 1 - j)
        col = ab[kuw: kuw + span + 1, j]
        p = int(np.argmax(np.abs(col)))
        piv = col[p]
        if piv == 0.0:
            return 0.0, -math.inf
        if p != 0:
            sign = -sign
            ncols = min(kuw, n - 1 - j)
            for c in range(ncols + 1):
                r1 = kuw - c
                r2 = kuw + p - c
                ab[r1, j + c], ab[r2, j + c] = ab[r2, j + c], ab[r1, j + c]
            piv = ab[kuw, j]
        sign *= 1.0 if piv > 0 else -1.0
        logabs += math.log(abs(piv))
        if span >= 1:
            factors = ab[kuw + 1: kuw + span + 1, j] / piv
            ab[kuw + 1: kuw + span + 1, j] = 0.0
            ncols = min(kuw, n - 1 - j)
            for c in range(1, ncols + 1):
                ab[kuw + 1 - c: kuw + span + 1 - c, j + c] -= factors * ab[kuw - c, j + c]
    return sign, logabs


def solve_triangular(m: BandedMatrix, rhs: np.ndarray, kind: str) -> np.ndarray:
    """Forward (lower) or back (upper) substitution on a triangular band.

    The sweep is ascending in the row index for kind="lower" and descending
    for kind="upper"; within a row, contributions are accumulated in order of
    increasing column offset.  This fixes the operation order exactly, so two
    runs on the same data are bit-identical.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = m.size
    if rhs.shape != (n,):
        raise ValueError("rhs length does not match matrix size")
    x = np.zeros(n)
    diag = m.data[:, m.lower_bw]
    if kind == "lower":
        for i in range(n):
            if diag[i] == 0.0:
                raise ZeroDivisionError(f"zero pivot in triangular solve at row {i}")
            acc = rhs[i]
            for off in range(-min(m.lower_bw, i), 0):
                acc -= m.data[i, off + m.lower_bw] * x[i + off]
            x[i] = acc / diag[i]
    elif kind == "upper":
        for i in range(n - 1, -1, -1):
            if diag[i] == 0.0:
                raise ZeroDivisionError(f"zero pivot in triangular solve at row {i}")
            acc = rhs[i]
            for off in range(1, min(m.upper_bw, n - 1 - i) + 1):
                acc -= m.data[i, off + m.lower_bw] * x[i + off]
            x[i] = acc / diag[i]
    else:
        raise ValueError(f"kind must be 'lower' or 'upper', got {kind!r}")
    return x


@dataclass(frozen=True)
class QuasiHamiltonian:
    """E-independent part H and coefficient D of the pencil M(E) = H - E*D."""

    H: BandedMatrix
    D: BandedMatrix
    t: int
    ell: int

    @property
    def size(self) -> int:
        return self.H.size

    def m_of(self, E: float) -> BandedMatrix:
        return self.H - self.D.scaled(E)


def _poly_band(coeffs, ell: int, size: int) -> BandedMatrix:
    """Band of sum_d coeffs[d] * x^{2d}, padded to bandwidth len(coeffs)-1.

    Powers are multiplied out in a workspace with margin t extra states and
    cropped afterwards, so every stored entry is the true infinite-operator
    element; truncation of any pencil built from these bands is then exactly
    a principal-submatrix truncation.
    """
    t = len(coeffs) - 1
    work = size + t
    out = BandedMatrix.identity(work).scaled(coeffs[0]).widened(t, t)
    if t == 0:
        return out.cropped(size)
    xp = basis.x2_band(ell, work)
    acc = xp
    for d in range(1, t + 1):
        out = out.add(acc.scaled(coeffs[d]))
        if d < t:
            acc = acc @ xp
    return out.widened(t, t).cropped(size)


def build_quasi_hamiltonian(p: PadePotential, bp: "basis.BasisParams", size: int) -> QuasiHamiltonian:
    """Assemble H and D for a potential: row n of M(E) is
    (eps_n - E) <n|B(x^2)|m> + <n|beta N(x^2)|m>.
    """
    if size <= 2 * p.t:
        raise ValueError(f"size must exceed 2t = {2 * p.t}, got {size}")
    if bp.ell != p.ell:
        raise ValueError("basis channel does not match potential channel")
    bband = _poly_band(p.B, p.ell, size)
    nband = _poly_band(list(p.numerator_coeffs()) + [0.0], p.ell, size)
    evec = basis.eps_vector(size, p.ell)
    h = bband.row_scaled(evec).add(nband)
    return QuasiHamiltonian(H=h, D=bband, t=p.t, ell=p.ell)


def derivative_matrices(
    path: CouplingPath, bp: "basis.BasisParams", size: int, max_order: int | None = None
) -> list[tuple[BandedMatrix, BandedMatrix]]:
    """Expansion matrices (H^(j), D^(j)) with H(l) = sum l^j H^(j) exactly.

    The products beta(lambda) * A_n(lambda) are expanded by polynomial
    multiplication before the bands are formed, so the identity holds to
    rounding for every lambda, not just asymptotically.
    """
    deg = path.degree()
    if max_order is None:
        max_order = deg
    if max_order < deg:
        raise ValueError(
            f"max_order={max_order} below expanded coefficient degree {deg}"
        )
    num_polys = path.numerator_polys()
    evec = basis.eps_vector(size, path.ell)
    out = []
    for j in range(max_order + 1):
        bcoef = [b[j] if j < len(b) else 0.0 for b in path.B]
        ncoef = [a[j] if j < len(a) else 0.0 for a in num_polys]
        dband = _poly_band(bcoef, path.ell, size)
        nband = _poly_band(ncoef + [0.0], path.ell, size)
        hband = dband.row_scaled(evec).add(nband)
        out.append((hband, dband))
    return out


def build_rho(solution, size: int) -> np.ndarray:
    """Left-eigenvector surrogate rho = D(0) h0, zero-padded to size.

    Only the first q+t+1 components are nonzero; rho annihilates M(E0) from
    the left on the leading block and yields every energy correction without
    computing a genuine left eigenvector.
    """
    p = solution.potential
    bp = basis.BasisParams(ell=p.ell)
    qh = build_quasi_hamiltonian(p, bp, size)
    h = np.zeros(size)
    h[: len(solution.h0)] = solution.h0
    return qh.D.matvec(h)
