"""Zero-order partially solvable states.

A degree-t potential supports a terminating expansion h_0..h_q exactly when
E0 = 4t + 4q + 2*ell + 3 and the couplings satisfy the q+t coupled rows of
the truncated quasi-Hamiltonian system.  For t=1 the couplings are roots of
a secular polynomial; for t >= 2 the system is bilinear in (h, couplings)
and is solved by multi-start damped Newton with an extended-precision polish.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import banded, basis
from .potential import PadePotential

__all__ = [
    "ExactSolution",
    "quasi_energy",
    "secular_polynomial_t1",
    "solve_t1",
    "solve_general",
    "solution_from_potential",
    "reduce_t2_q2",
    "default_seeds",
]

log = logging.getLogger(__name__)

_RESIDUAL_TOL = 1e-9
_DEDUP_TOL = 1e-6


def _polish_enabled(polish) -> bool:
    if polish is not None:
        return bool(polish)
    return os.environ.get("PADE_SPECT_PRECISION", "extended") != "double"


@dataclass(frozen=True)
class ExactSolution:
    """A terminating zero-order state with its solved couplings."""

    t: int
    q: int
    ell: int
    potential: PadePotential
    h0: tuple[float, ...]
    E0: float
    residual: float
    excitation: int | None = None
    seed: tuple[float, ...] | None = None

    def padded_h(self, size: int) -> np.ndarray:
        h = np.zeros(size)
        h[: len(self.h0)] = self.h0
        return h


def quasi_energy(t: int, q: int, ell: int) -> int:
    """Terminating energy E0 = 4t + 4q + 2*ell + 3."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    if ell < -1:
        raise ValueError(f"ell must be >= -1, got {ell}")
    return 4 * t + 4 * q + 2 * ell + 3


def _secular_fractions(q: int, ell: int, B) -> list[Fraction]:
    """Exact coefficients of the secular determinant, ascending in beta."""
    B = Fraction(B)
    if B <= 0:
        raise ValueError("denominator coupling B must be positive")
    e0 = Fraction(quasi_energy(1, q, ell))

    def a_shift(n):
        al = Fraction(4 * n + 2 * ell + 3, 2)
        return (1 + B * al) * (Fraction(4 * n + 2 * ell + 3) - e0)

    def cd(n):
        b2_prev = Fraction(n * (2 * (n - 1) + 2 * ell + 3), 2)
        return B * B * b2_prev * (Fraction(4 * n + 2 * ell + 3) - e0) * (
            Fraction(4 * (n - 1) + 2 * ell + 3) - e0
        )

    prev = [Fraction(1)]           # D_{-1}
    cur = [a_shift(0), Fraction(1)]  # D_0 = beta + a_shift(0)
    for n in range(1, q + 1):
        nxt = [Fraction(0)] * (len(cur) + 1)
        an = a_shift(n)
        for i, c in enumerate(cur):
            nxt[i] += an * c
            nxt[i + 1] += c
        cdn = cd(n)
        for i, c in enumerate(prev):
            nxt[i] -= cdn * c
        prev, cur = cur, nxt
    return cur


def secular_polynomial_t1(q: int, ell: int, B=1) -> np.ndarray:
    """Coefficients (ascending) of the degree-(q+1) secular polynomial in beta.

    Built as the determinant of the leading (q+1) x (q+1) block of M(E0) by
    the three-term determinant recurrence D_n = a_n D_{n-1} - c_n d_{n-1}
    D_{n-2}, carried in exact rational arithmetic so the printed integer
    coefficients come out bit-exactly for B = 1.
    """
    if q < 0 or ell < -1:
        raise ValueError("invalid (q, ell)")
    return np.array([float(c) for c in _secular_fractions(q, ell, B)])


def _mp_polish_poly_root(coeffs_frac: list[Fraction], x0: float, dps: int = 40) -> float:
    """Newton polish of a real polynomial root in extended precision."""
    from mpmath import mp, mpf

    with mp.workdps(dps):
        cs = [mpf(c.numerator) / mpf(c.denominator) for c in coeffs_frac]
        dcs = [k * c for k, c in enumerate(cs)][1:]

        def ev(cc, x):
            acc = mpf(0)
            for c in reversed(cc):
                acc = acc * x + c
            return acc

        x = mpf(x0)
        for _ in range(60):
            dfx = ev(dcs, x)
            if dfx == 0:
                break
            step = ev(cs, x) / dfx
            x -= step
            if abs(step) <= mpf(10) ** (-dps + 4) * (1 + abs(x)):
                break
        return float(x)


def _make_solution(t, q, ell, beta, A, B, h, seed=None, excitation=None) -> ExactSolution:
    pot = PadePotential(t=t, beta=beta, A=tuple(A), B=tuple(B), ell=ell)
    e0 = float(quasi_energy(t, q, ell))
    size = q + 3 * t + 2
    qh = banded.build_quasi_hamiltonian(pot, basis.BasisParams(ell=ell), size)
    hpad = np.zeros(size)
    hpad[: q + 1] = h
    resid = float(np.max(np.abs(qh.m_of(e0).matvec(hpad))))
    return ExactSolution(
        t=t, q=q, ell=ell, potential=pot, h0=tuple(float(v) for v in h),
        E0=e0, residual=resid, excitation=excitation, seed=seed,
    )


def _t1_coefficients(q: int, ell: int, B: float, beta0: float) -> np.ndarray:
    """h_0..h_q by descending back substitution, normalized h_q = 1."""
    e0 = quasi_energy(1, q, ell)
    a = lambda n: beta0 + (1.0 + B * basis.alpha(n, ell)) * (basis.eps(n, ell) - e0)
    c = lambda n: B * basis.beta_off(n - 1, ell) * (basis.eps(n, ell) - e0)
    d = lambda n: B * basis.beta_off(n, ell) * (basis.eps(n, ell) - e0)
    h = np.zeros(q + 1)
    h[q] = 1.0
    if q >= 1:
        h[q - 1] = -a(q) / c(q)
        for n in range(q - 1, 0, -1):
            h[n - 1] = -(a(n) * h[n] + d(n) * h[n + 1]) / c(n)
    return h


def solve_t1(q: int, ell: int, B=1.0, polish: bool | None = None) -> list[ExactSolution]:
    """All real solvable couplings beta0 of the t=1 family, as ExactSolutions.

    Roots come from the companion matrix of the secular polynomial and are
    polished by Newton in extended precision; h0 follows by back substitution
    through the tridiagonal block.  Sorted ascending in beta0; the largest
    root is the ground state of its parity channel (Table-2 convention), so
    excitation = (number of larger roots).
    """
    coeffs = _secular_fractions(q, ell, B)
    cs = np.array([float(c) for c in coeffs])
    roots = np.roots(cs[::-1])
    real_roots = []
    for r in roots:
        if abs(r.imag) <= 1e-9 * (1.0 + abs(r)):
            real_roots.append(float(r.real))
        else:
            log.info("t=1 q=%d ell=%d: complex secular root %s produces no solution", q, ell, r)
    real_roots.sort()
    if _polish_enabled(polish):
        real_roots = [_mp_polish_poly_root(coeffs, r) for r in real_roots]
    Bf = float(B)
    out = []
    for idx, beta0 in enumerate(real_roots):
        h = _t1_coefficients(q, ell, Bf, beta0)
        out.append(_make_solution(
            1, q, ell, beta=beta0, A=(1.0,), B=(1.0, Bf), h=h,
            excitation=len(real_roots) - 1 - idx,
        ))
    return out


class _RowsEvaluator:
    """Rows 0..q+t-1 of M(E0) h as a function of (h_0..h_{q-1}, A_0..A_{t-1}).

    The x^{2k} bands and the denominator band are fixed by (t, q, ell, B),
    so they are assembled once; each evaluation is a handful of small
    mat-vecs.  The system is bilinear, which makes the Jacobian exact.
    """

    def __init__(self, t, q, ell, B):
        self.t, self.q, self.ell = t, q, ell
        self.nrows = q + t
        self.size = q + 2 * t + 2
        self.e0 = float(quasi_energy(t, q, ell))
        bp = basis.BasisParams(ell=ell)
        ref = PadePotential(t=t, beta=1.0, A=(0.0,) * t, B=tuple(B), ell=ell)
        qh = banded.build_quasi_hamiltonian(ref, bp, self.size)
        self.kin_dense = qh.m_of(self.e0).to_dense()  # (eps-E0) Bband part
        xband = basis.x2_band(ell, self.size)
        self.powers = [np.eye(self.size)]
        for _ in range(t - 1):
            self.powers.append(xband.to_dense() @ self.powers[-1])

    def rows_jac(self, u):
        q, t, nrows = self.q, self.t, self.nrows
        h = np.zeros(self.size)
        h[:q] = u[:q]
        h[q] = 1.0
        A = u[q:]
        m = self.kin_dense.copy()
        for k in range(t):
            m += A[k] * self.powers[k]
        rows = (m @ h)[:nrows]
        jac = np.zeros((nrows, q + t))
        jac[:, :q] = m[:nrows, :q]
        for k in range(t):
            jac[:, q + k] = (self.powers[k] @ h)[:nrows]
        return rows, jac


def _newton_from_seed(ev: _RowsEvaluator, seed_u, max_iter=200):
    u = np.array(seed_u, dtype=float)
    for _ in range(max_iter):
        rows, jac = ev.rows_jac(u)
        norm = np.max(np.abs(rows))
        if norm <= 1e-12 * (1.0 + np.max(np.abs(u))):
            return u
        try:
            step = np.linalg.solve(jac, -rows)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        alpha = 1.0
        improved = False
        for _ in range(30):
            trial = u + alpha * step
            trows, _ = ev.rows_jac(trial)
            if np.max(np.abs(trows)) < norm * (1.0 - 0.25 * alpha):
                u = trial
                improved = True
                break
            alpha *= 0.5
        if not improved:
            return None
    rows, _ = ev.rows_jac(u)
    if np.max(np.abs(rows)) <= 1e-10 * (1.0 + np.max(np.abs(u))):
        return u
    return None


def _mp_polish_general(t, q, ell, B, u0, dps=40):
    """Extended-precision Newton on the coupled rows, from a float solution."""
    from mpmath import lu_solve, matrix as mmat, mp
    from mpmath import sqrt as msqrt

    with mp.workdps(dps):
        e0 = quasi_energy(t, q, ell)
        size = q + 2 * t + 2
        nrows = q + t
        X = mmat(size, size)
        for n in range(size):
            X[n, n] = mp.mpf(4 * n + 2 * ell + 3) / 2
            if n + 1 < size:
                X[n, n + 1] = X[n + 1, n] = msqrt(mp.mpf((n + 1) * (2 * n + 2 * ell + 3)) / 2)
        powers = [mp.eye(size)]
        for _ in range(t):
            powers.append(X * powers[-1])
        kin = mmat(size, size)
        for d, bd in enumerate(B):
            kin += mp.mpf(bd) * powers[d]
        for n in range(size):
            fac = mp.mpf(4 * n + 2 * ell + 3 - e0)
            for c in range(size):
                kin[n, c] *= fac

        def rows_jac(u):
            hpad = mmat(size, 1)
            for j in range(q):
                hpad[j] = u[j]
            hpad[q] = mp.mpf(1)
            m = kin.copy()
            for k in range(t):
                m += u[q + k] * powers[k]
            r = m * hpad
            jac = mmat(nrows, q + t)
            for j in range(q):
                for i in range(nrows):
                    jac[i, j] = m[i, j]
            for k in range(t):
                col = powers[k] * hpad
                for i in range(nrows):
                    jac[i, q + k] = col[i]
            return mmat([r[i] for i in range(nrows)]), jac

        u = mmat([mp.mpf(float(v)) for v in u0])
        for _ in range(12):
            r, jac = rows_jac(u)
            step = lu_solve(jac, -r)
            u = u + step
            if max(abs(step[i]) for i in range(len(u0))) < mp.mpf(10) ** (-dps + 6):
                break
        return [float(u[i]) for i in range(len(u0))]


def default_seeds(t: int, q: int, ell: int, B) -> list[tuple[float, ...]]:
    """Deterministic multi-start seeds.

    Coarse lattice over the h coefficients combined with (a) least-squares
    couplings at each lattice point (the rows are linear in the couplings at
    fixed h) and (b) couplings inherited from the q-1 solutions (homotopy in
    q).  A sparse wide layer catches the occasional large-h solution.
    """
    if q == 0:
        return [tuple([0.0] * t)]
    narrow = [-8.0, -4.0, 0.5, 4.0, 8.0]
    wide = [-30.0, -15.0, 15.0, 30.0]
    grids = [[v] for v in narrow + wide]
    for _ in range(q - 1):
        grids = [g + [v] for g in grids for v in narrow + wide]
    parent_couplings = [
        tuple(s.potential.numerator_coeffs())
        for s in solve_general(t, q - 1, ell, B, polish=False)
    ]
    ev = _RowsEvaluator(t, q, ell, tuple(float(b) for b in B))
    seeds = []
    for hpart in grids:
        u0 = np.array(hpart + [0.0] * t)
        rows0, jac = ev.rows_jac(u0)
        acoef, *_ = np.linalg.lstsq(jac[:, q:], -rows0, rcond=None)
        seeds.append(tuple(hpart) + tuple(float(a) for a in acoef))
        for pc in parent_couplings:
            seeds.append(tuple(hpart) + pc)
    return seeds


def solve_general(
    t: int,
    q: int,
    ell: int,
    B,
    seeds: list | None = None,
    polish: bool | None = None,
    max_iter: int = 200,
) -> list[ExactSolution]:
    """Damped-Newton solutions of the q+t coupled termination rows.

    Unknowns are (h_0..h_{q-1}, A_0..A_{t-1}) with h_q = 1 and the
    denominator B frozen; one ExactSolution per converged, de-duplicated,
    a-posteriori-validated root, sorted by coupling vector.  A seed that
    fails to converge within max_iter is skipped, not fatal.  Each solution
    records the seed it came from.
    """
    B = tuple(float(b) for b in B)
    if len(B) != t + 1:
        raise ValueError(f"expected {t + 1} frozen denominator coefficients")
    if seeds is None:
        seeds = default_seeds(t, q, ell, B)
    ev = _RowsEvaluator(t, q, ell, B)
    found: list[np.ndarray] = []
    found_seeds: list[tuple] = []
    for seed in seeds:
        if len(seed) != q + t:
            raise ValueError(f"seed length {len(seed)} != q+t = {q + t}")
        u = _newton_from_seed(ev, seed, max_iter=max_iter)
        if u is None:
            log.debug("seed %s failed to converge", seed)
            continue
        if any(np.max(np.abs(u - v)) <= _DEDUP_TOL for v in found):
            continue
        found.append(u)
        found_seeds.append(tuple(float(s) for s in seed))
    if _polish_enabled(polish):
        found = [np.array(_mp_polish_general(t, q, ell, B, u)) for u in found]
    order = sorted(range(len(found)), key=lambda i: tuple(found[i]))
    out = []
    for i in order:
        u = found[i]
        h = np.concatenate([u[:q], [1.0]])
        sol = _make_solution(t, q, ell, beta=1.0, A=u[q:], B=B, h=h, seed=found_seeds[i])
        if sol.residual > _RESIDUAL_TOL * (1.0 + float(np.max(np.abs(u)))):
            log.warning("discarding candidate with residual %.3e", sol.residual)
            continue
        if not sol.potential.denominator_positive():
            log.info("discarding candidate with non-positive denominator")
            continue
        out.append(sol)
    return out


def solution_from_potential(p: PadePotential, q: int) -> ExactSolution:
    """Recover the terminating state of an already-solved potential.

    The couplings are taken as given; h_0..h_{q-1} follow from the first q
    rows (linear, with h_q = 1) and the remaining t rows must close to the
    residual tolerance, otherwise the potential is not solvable at this q.
    """
    t, ell = p.t, p.ell
    e0 = float(quasi_energy(t, q, ell))
    size = q + 3 * t + 2
    qh = banded.build_quasi_hamiltonian(p, basis.BasisParams(ell=ell), size)
    mdense = qh.m_of(e0).to_dense()
    nrows = q + t
    block = mdense[:nrows, : q + 1]
    h = np.zeros(q + 1)
    h[q] = 1.0
    if q > 0:
        sol, *_ = np.linalg.lstsq(block[:, :q], -block[:, q], rcond=None)
        h[:q] = sol
    resid = float(np.max(np.abs(block @ h)))
    scale = 1.0 + float(np.max(np.abs(p.numerator_coeffs())))
    if resid > _RESIDUAL_TOL * scale:
        raise ValueError(
            f"potential is not solvable at q={q}: termination residual {resid:.3e}"
        )
    return _make_solution(t, q, ell, beta=p.beta, A=p.A, B=p.B, h=h)


def reduce_t2_q2() -> tuple[list[int], list[float]]:
    """The single-sextic reduction of the t=2, q=2, s-wave case (f=g=1).

    Follows the elimination chain on the exact 4x3 termination block: the
    bottom row fixes mu(h_1), the third row nu(h_0, h_1), the second row
    h_0(h_1); substituting h_1 = y*sqrt(5) into the first row and clearing
    denominators yields a primitive integer-coefficient sextic in y.
    Returns (ascending coefficients, real roots ascending).
    """
    import sympy as sp

    ell = 0
    e0 = quasi_energy(2, 2, ell)
    size = 6
    X = sp.zeros(size, size)
    for n in range(size):
        X[n, n] = sp.Rational(4 * n + 2 * ell + 3, 2)
        if n + 1 < size:
            X[n, n + 1] = X[n + 1, n] = sp.sqrt(sp.Rational((n + 1) * (2 * n + 2 * ell + 3), 2))
    bmat = sp.eye(size) - X + X * X
    mu, nu, h0, h1 = sp.symbols("mu nu h0 h1", real=True)
    m = sp.zeros(size, size)
    for n in range(size):
        for c in range(size):
            m[n, c] = (4 * n + 2 * ell + 3 - e0) * bmat[n, c]
    m += nu * sp.eye(size) + mu * X
    hvec = sp.Matrix([h0, h1, 1, 0, 0, 0])
    rows = m * hvec
    # Ascending elimination: bottom row -> mu, next -> nu, next -> h_0.  The
    # substitutions are sequential because nu reintroduces h_0.
    mu_sol = sp.solve(sp.Eq(rows[3], 0), mu)[0]
    nu_sol = sp.solve(sp.Eq(rows[2].subs(mu, mu_sol), 0), nu)[0]
    h0_sol = sp.solve(sp.Eq(sp.expand(rows[1].subs(mu, mu_sol).subs(nu, nu_sol)), 0), h0)[0]
    final = rows[0].subs(mu, mu_sol).subs(nu, nu_sol).subs(h0, h0_sol)
    y = sp.symbols("y", real=True)
    numer, _ = sp.fraction(sp.together(sp.expand(final.subs(h1, y * sp.sqrt(5)))))
    poly = sp.Poly(sp.expand(numer), y)
    # the cleared numerator carries a common sqrt(30); remove it, then the
    # integer content and an overall sign
    rat = [sp.simplify(c / sp.sqrt(30)) for c in poly.all_coeffs()]
    p2 = sp.Poly(sum(c * y**i for i, c in enumerate(rat[::-1])), y)
    _, prim = p2.primitive()
    if prim.LC() < 0:
        prim = -prim
    ints = [int(c) for c in prim.all_coeffs()[::-1]]
    roots = np.roots(np.array(ints[::-1], dtype=float))
    real = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-9 * (1 + abs(r)))
    return ints, real
