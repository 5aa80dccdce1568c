"""Reference spectral solvers.

Two independent routes to the bound-state energies of a Pade potential:

* matrix_spectrum - roots of det M(E) on the (M+1)-dimensional truncation,
  located by a sign-change scan of the banded-LU determinant followed by
  bisection + secant refinement;
* shoot_energy - outward/inward Runge-Kutta integration of the radial
  equation with logarithmic-derivative matching at the outer turning point.

The second route never touches the basis-set machinery, which makes it an
honest oracle for everything built on the quasi-Hamiltonian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import banded, basis
from .potential import PadePotential

__all__ = ["SpectrumResult", "matrix_spectrum", "shoot_energy", "convergence_table",
           "merged_parity_energies"]

_DIP_THRESHOLD = 6.0  # log-magnitude drop that triggers a fine re-scan


@dataclass
class SpectrumResult:
    """Sorted eigenvalues at a cutoff, with per-cutoff history rows."""

    energies: list[float]
    cutoff: int
    rows: list[tuple[int, list[float]]] = field(default_factory=list)
    partial: bool = False

    def level_history(self, level: int) -> list[tuple[int, float]]:
        """(M, E) pairs of one level across the stored cutoffs."""
        out = []
        for m, es in self.rows:
            if level < len(es):
                out.append((m, es[level]))
        return out


class _DetEvaluator:
    def __init__(self, p: PadePotential, ell: int, m_cut: int):
        size = m_cut + 1
        bp = basis.BasisParams(ell=ell)
        # the builder wants size > 2t; assemble larger and crop the pencil
        build_size = max(size, 2 * p.t + 1)
        qh = banded.build_quasi_hamiltonian(p, bp, build_size)
        if build_size != size:
            qh = banded.QuasiHamiltonian(
                H=qh.H.cropped(size), D=qh.D.cropped(size), t=qh.t, ell=qh.ell)
        self.qh = qh

    def __call__(self, e: float) -> tuple[float, float]:
        return banded.banded_lu_det(self.qh.m_of(e))


def _refine_root(det, lo: float, hi: float, s_lo: float, tol: float) -> float:
    """Bisection well below `tol`, then one secant polish on the scaled det.

    The determinant is carried as (sign, log|det|); bisection needs only the
    sign, the final secant step uses locally rescaled magnitudes so that no
    exponentiation can overflow.
    """
    target = min(tol * 1e-2, 1e-12)
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        s_mid, _ = det(mid)
        if s_mid == 0.0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    s1, l1 = det(lo)
    s2, l2 = det(hi)
    if s1 != 0.0 and s2 != 0.0 and s1 != s2:
        ref = max(l1, l2)
        f1 = s1 * math.exp(l1 - ref)
        f2 = s2 * math.exp(l2 - ref)
        if f1 != f2:
            cand = lo - f1 * (hi - lo) / (f2 - f1)
            if lo <= cand <= hi:
                return cand
    return 0.5 * (lo + hi)


def _scan_roots(det, e_lo: float, e_hi: float, step: float, count: int,
                refine_tol: float) -> list[float]:
    roots: list[float] = []

    def accept(root: float) -> None:
        if all(abs(root - r) > 1e-7 * (1.0 + abs(root)) for r in roots):
            roots.append(root)

    grid = [e_lo + i * step for i in range(int(math.ceil((e_hi - e_lo) / step)) + 1)]
    signs_logs = [det(e) for e in grid]
    i = 0
    while i < len(grid) - 1 and len(roots) < count:
        (s1, _), (s2, _) = signs_logs[i], signs_logs[i + 1]
        if s1 == 0.0:
            accept(grid[i])
            i += 1
            continue
        if s1 * s2 < 0:
            accept(_refine_root(det, grid[i], grid[i + 1], s1, refine_tol))
        elif 0 < i and _is_dip(signs_logs, i):
            # a deep |det| dip without a sign change can hide a close pair;
            # re-scan the suspicious neighborhood on a fine grid
            fine = np.arange(grid[i - 1], grid[i + 1], 1e-4)
            fs = [det(e) for e in fine]
            for j in range(len(fine) - 1):
                if fs[j][0] * fs[j + 1][0] < 0 and len(roots) < count:
                    accept(_refine_root(det, fine[j], fine[j + 1], fs[j][0], refine_tol))
        i += 1
    return sorted(roots)[:count]


def _is_dip(signs_logs, i: int) -> bool:
    l_prev, l_here, l_next = signs_logs[i - 1][1], signs_logs[i][1], signs_logs[i + 1][1]
    return (l_here < l_prev - _DIP_THRESHOLD) and (l_here < l_next - _DIP_THRESHOLD)


def matrix_spectrum(
    p: PadePotential,
    ell: int,
    m_cut: int,
    count: int,
    e_min: float | None = None,
    e_max: float | None = None,
    step: float = 0.5,
    refine_tol: float = 1e-10,
    method: str = "det",
) -> SpectrumResult:
    """Lowest `count` roots of det M(E) = 0 on the (m_cut+1)-dimensional block.

    The default scan window is [eps_0 - 2, eps_M]; fewer than `count` roots
    there gives a result flagged partial.  method="eig" cross-checks via the
    dense generalized eigenproblem (H, D) instead of the determinant scan.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if m_cut < 0:
        raise ValueError("cutoff must be nonnegative")
    if e_min is None:
        e_min = basis.eps(0, ell) - 2.0
    if e_max is None:
        e_max = float(basis.eps(m_cut, ell))
    if method == "eig":
        energies = _eig_spectrum(p, ell, m_cut, count, e_min, e_max)
    elif method == "det":
        det = _DetEvaluator(p, ell, m_cut)
        energies = _scan_roots(det, e_min, e_max, step, count, refine_tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = SpectrumResult(energies=energies, cutoff=m_cut,
                         rows=[(m_cut, list(energies))],
                         partial=len(energies) < count)
    return res


def _eig_spectrum(p, ell, m_cut, count, e_min, e_max) -> list[float]:
    from scipy.linalg import eig

    size = m_cut + 1
    bp = basis.BasisParams(ell=ell)
    build_size = max(size, 2 * p.t + 1)
    qh = banded.build_quasi_hamiltonian(p, bp, build_size)
    h = qh.H.to_dense()[:size, :size]
    d = qh.D.to_dense()[:size, :size]
    vals = eig(h, d, right=False)
    real = sorted(v.real for v in vals
                  if abs(v.imag) <= 1e-8 * (1 + abs(v)) and e_min <= v.real <= e_max)
    return real[:count]


def convergence_table(p: PadePotential, ell: int, m_max: int, count: int,
                      refine_tol: float = 1e-10) -> SpectrumResult:
    """matrix_spectrum for every cutoff M = 0..m_max, all over one scan window.

    The window is fixed to [eps_0 - 2, eps(m_max)] so that small-M rows can
    report roots above their own eps_M, matching the layout of the published
    convergence tables.
    """
    e_min = basis.eps(0, ell) - 2.0
    e_max = float(basis.eps(m_max, ell))
    rows = []
    energies: list[float] = []
    for m in range(m_max + 1):
        r = matrix_spectrum(p, ell, m, count, e_min=e_min, e_max=e_max,
                            refine_tol=refine_tol)
        rows.append((m, r.energies))
        energies = r.energies
    return SpectrumResult(energies=energies, cutoff=m_max, rows=rows,
                          partial=len(energies) < count)


def merged_parity_energies(beta: float, b_coef: float, m_cut: int, count: int,
                           refine_tol: float = 1e-10) -> list[float]:
    """Lowest `count` levels of the t=1 double well with both parities merged.

    The even (ell = -1) and odd (ell = 0) channels are separate eigenproblems;
    their spectra are concatenated and sorted, which resolves quasi-degenerate
    doublets exactly (each partner lives in its own channel).
    """
    merged: list[float] = []
    for ell in (-1, 0):
        p = PadePotential(t=1, beta=beta, A=(1.0,), B=(1.0, b_coef), ell=ell)
        r = matrix_spectrum(p, ell, m_cut, count, refine_tol=refine_tol)
        merged.extend(r.energies)
    return sorted(merged)[:count]


# ----------------------------------------------------------------------------
# Shooting oracle
# ----------------------------------------------------------------------------

def _rk4_coefficients(w0, wm, w1, h):
    """Per-step linear map of classic RK4 for u'' = w(x) u, state (u, u').

    Folding the four stages of the textbook scheme for this linear system
    gives u' = A u + B v, v' = C u + D v with the coefficients below; the
    update is algebraically identical to stepping RK4 with stages at x,
    x + h/2 and x + h.
    """
    h2 = h * h
    a = 1.0 + (h2 / 6.0) * (w0 + 2.0 * wm) + (h2 * h2 / 24.0) * wm * w0
    b = h + (h * h2 / 6.0) * wm
    c = (h / 6.0) * (w0 + 4.0 * wm + w1) + (h * h2 / 12.0) * wm * (w0 + w1)
    d = 1.0 + (h2 / 6.0) * (2.0 * wm + w1) + (h2 * h2 / 24.0) * w1 * wm
    return a, b, c, d


class _Shooter:
    """Precomputed potential grid for repeated integrations at varying E."""

    def __init__(self, p: PadePotential, ell: int, x0: float, x_max: float, h: float):
        self.ell = ell
        self.h = h
        self.n_steps = int(round((x_max - x0) / h))
        # full half-step grid: x0, x0+h/2, x0+h, ...
        xs = x0 + 0.5 * h * np.arange(2 * self.n_steps + 1)
        w = p(xs)
        if ell > 0:
            w = w + ell * (ell + 1) / xs**2
        self.xs = xs
        self.w_grid = w
        self.x0 = x0
        self.x_max = x_max
        self.v_origin = float(p(0.0))

    def turning_index(self, e: float) -> int:
        """Largest step index whose grid point is still classically allowed."""
        allowed = np.nonzero(self.w_grid[::2] <= e)[0]
        if len(allowed) == 0:
            raise ValueError(f"no classically allowed region at E = {e}")
        idx = int(allowed[-1])
        return min(max(idx, 2), self.n_steps - 2)

    def log_derivative_mismatch(self, e: float) -> float:
        i_m = self.turning_index(e)
        w = self.w_grid - e
        h = self.h
        # outward sweep 0 -> i_m
        u, v = self._outward_start(e)
        a, b, c, d = _rk4_coefficients(w[0:2 * i_m:2], w[1:2 * i_m:2],
                                       w[2:2 * i_m + 1:2], h)
        for aa, bb, cc, dd in zip(a.tolist(), b.tolist(), c.tolist(), d.tolist()):
            u, v = aa * u + bb * v, cc * u + dd * v
        u_out, v_out = u, v
        # inward sweep n -> i_m
        u, v = 1.0, -math.sqrt(max(w[2 * self.n_steps], 1e-12))
        a, b, c, d = _rk4_coefficients(w[2 * self.n_steps:2 * i_m:-2],
                                       w[2 * self.n_steps - 1:2 * i_m:-2],
                                       w[2 * self.n_steps - 2:max(2 * i_m - 1, 0):-2],
                                       -h)
        for aa, bb, cc, dd in zip(a.tolist(), b.tolist(), c.tolist(), d.tolist()):
            u, v = aa * u + bb * v, cc * u + dd * v
        u_in, v_in = u, v
        # scaled Wronskian: zero exactly at an eigenvalue
        norm = abs(v_out * u_in) + abs(u_out * v_in) + 1e-300
        return (v_out * u_in - u_out * v_in) / norm

    def _outward_start(self, e: float) -> tuple[float, float]:
        """Series start u ~ x^(ell+1) (1 + c1 x^2) at x0.

        The c1 term matters: with u' = (ell+1) x0^ell alone, the admixture of
        the irregular solution is O(x0) and shows up as an x0-proportional
        bias in the eigenvalue.
        """
        ell, x0 = self.ell, self.x0
        c1 = (self.v_origin - e) / (4 * ell + 6)
        u = x0 ** (ell + 1) * (1.0 + c1 * x0 * x0)
        v = (ell + 1) * x0**ell if ell != -1 else 0.0
        v += (ell + 3) * c1 * x0 ** (ell + 2)
        return u, v


def shoot_energy(
    p: PadePotential,
    ell: int,
    bracket: tuple[float, float],
    x_max: float = 12.0,
    h: float = 1e-3,
    tol: float = 1e-9,
    x0: float = 1e-6,
) -> float:
    """Eigenvalue inside `bracket` by outward/inward RK4 and bisection.

    Integrates -u'' + [ell(ell+1)/x^2 + V(x)] u = E u from x0 outward and
    from x_max inward with classic 4th-order steps of size h, matching
    logarithmic derivatives at the outer classical turning point, and bisects
    the mismatch down to `tol`.  The bracket must contain exactly one sign
    change of the mismatch.
    """
    e_lo, e_hi = bracket
    if not e_lo < e_hi:
        raise ValueError("empty bracket")
    shooter = _Shooter(p, ell, x0, x_max, h)
    probes = np.linspace(e_lo, e_hi, 9)
    vals = [shooter.log_derivative_mismatch(e) for e in probes]
    changes = sum(1 for i in range(8) if vals[i] * vals[i + 1] < 0)
    if changes != 1:
        raise ValueError(
            f"bracket ({e_lo}, {e_hi}) contains {changes} mismatch sign changes; need exactly 1"
        )
    i0 = next(i for i in range(8) if vals[i] * vals[i + 1] < 0)
    lo, hi = float(probes[i0]), float(probes[i0 + 1])
    f_lo = vals[i0]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = shooter.log_derivative_mismatch(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)
