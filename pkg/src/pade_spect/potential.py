"""Pade-rational anharmonic potentials, their coupling paths, and partial fractions.

A potential in this family is V(x) = x^2 + beta * N(x^2)/B(x^2) with even
polynomials N (degree t-1 in x^2) and B (degree t, B_t != 0).  The harmonic
frequency is scaled to 1 throughout.  Coupling paths attach a polynomial
lambda-dependence to every coefficient, which keeps the matrix expansions of
the perturbation machinery exact term by term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PadePotential",
    "CouplingPath",
    "PartialFractionForm",
    "load_potential_config",
]

# Tolerances for root classification in the denominator analysis.
_REAL_ROOT_IMAG_TOL = 1e-9
_ROOT_CLUSTER_TOL = 1e-7
_ROUND_TRIP_TOL = 1e-10


def _poly_eval(coeffs, x):
    """Horner evaluation of sum_k coeffs[k] * x^k (coeffs ascending)."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_mul(p, q):
    out = [0.0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return tuple(out)


def _as_poly(value) -> tuple[float, ...]:
    """Accept a plain number or an iterable of ascending coefficients."""
    if np.isscalar(value):
        return (float(value),)
    return tuple(float(c) for c in value)


@dataclass(frozen=True)
class PadePotential:
    """V(x) = x^2 + beta * (sum A_n x^{2n}) / (sum B_d x^{2d}).

    B is normalized so that B[0] == 1 at construction (beta absorbs the
    scale).  B[t] must stay nonzero; positivity of the denominator is a
    separate check, not a construction invariant, so that invalid couplings
    can still be represented and rejected explicitly.
    """

    t: int
    beta: float
    A: tuple[float, ...]
    B: tuple[float, ...]
    ell: int = -1

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"degree t must be >= 1, got {self.t}")
        if self.ell < -1:
            raise ValueError(f"ell must be >= -1, got {self.ell}")
        A = tuple(float(a) for a in self.A)
        B = tuple(float(b) for b in self.B)
        if len(A) != self.t:
            raise ValueError(f"expected {self.t} numerator coefficients, got {len(A)}")
        if len(B) != self.t + 1:
            raise ValueError(f"expected {self.t + 1} denominator coefficients, got {len(B)}")
        if B[-1] == 0.0:
            raise ValueError("leading denominator coefficient B_t must be nonzero")
        if B[0] == 0.0:
            raise ValueError("constant denominator coefficient B_0 must be nonzero")
        beta = float(self.beta)
        if B[0] != 1.0:
            scale = B[0]
            B = tuple(b / scale for b in B)
            beta = beta / scale
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "beta", beta)

    def __call__(self, x):
        """Evaluate V(x); works elementwise on numpy arrays."""
        s = np.asarray(x, dtype=float) ** 2
        num = _poly_eval(self.A, s)
        den = _poly_eval(self.B, s)
        return s + self.beta * num / den

    def numerator_coeffs(self) -> tuple[float, ...]:
        """Coefficients of beta * N(s), the effective numerator polynomial."""
        return tuple(self.beta * a for a in self.A)

    def denominator_positive(self) -> bool:
        """True iff sum B_d s^d > 0 for every s >= 0.

        Decided from the real nonnegative roots of the denominator polynomial
        in s = x^2 (companion-matrix roots), which is unambiguous for any t.
        """
        coeffs = np.array(self.B[::-1], dtype=float)
        if len(coeffs) == 1:
            return coeffs[0] > 0.0
        roots = np.roots(coeffs)
        for r in roots:
            if abs(r.imag) <= _REAL_ROOT_IMAG_TOL * (1.0 + abs(r)):
                if r.real >= -1e-12:
                    return False
        return True

    def to_partial_fractions(self) -> "PartialFractionForm":
        return PartialFractionForm.from_potential(self)

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "ell": self.ell,
            "beta": self.beta,
            "A": list(self.A),
            "B": list(self.B),
        }


@dataclass(frozen=True)
class CouplingPath:
    """Polynomial lambda-dependence of every coupling of a PadePotential.

    Each coefficient is a tuple of ascending lambda-powers.  B_0 must be the
    constant polynomial 1: perturbing the overall denominator scale would
    force a lambda-dependent renormalization and break the exact polynomial
    identity H(lambda) = sum lambda^j H^(j).
    """

    t: int
    ell: int
    beta: tuple[float, ...]
    A: tuple[tuple[float, ...], ...]
    B: tuple[tuple[float, ...], ...]
    lambda_range: tuple[float, float] = (-1.0, 1.0)
    _validation_grid: int = field(default=25, repr=False)

    def __post_init__(self):
        beta = _as_poly(self.beta)
        A = tuple(_as_poly(a) for a in self.A)
        B = tuple(_as_poly(b) for b in self.B)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if len(A) != self.t or len(B) != self.t + 1:
            raise ValueError("coefficient counts do not match degree t")
        if any(c != 0.0 for c in B[0][1:]) or B[0][0] != 1.0:
            raise ValueError("B_0 must be the constant polynomial 1 along the path")
        lo, hi = self.lambda_range
        if not lo < hi:
            raise ValueError(f"empty lambda range {self.lambda_range}")
        object.__setattr__(self, "lambda_range", (float(lo), float(hi)))
        # Denominator positivity sampled over the admissible window.
        for lam in np.linspace(lo, hi, self._validation_grid):
            p = self._build(float(lam))
            if not p.denominator_positive():
                raise ValueError(
                    f"denominator loses positivity at lambda = {lam:.6g}"
                )

    def _build(self, lam: float) -> PadePotential:
        return PadePotential(
            t=self.t,
            beta=_poly_eval(self.beta, lam),
            A=tuple(_poly_eval(a, lam) for a in self.A),
            B=tuple(_poly_eval(b, lam) for b in self.B),
            ell=self.ell,
        )

    def at(self, lam: float) -> PadePotential:
        """Potential at a given lambda inside the admissible range."""
        lo, hi = self.lambda_range
        if not (lo <= lam <= hi):
            raise ValueError(f"lambda = {lam} outside range [{lo}, {hi}]")
        return self._build(float(lam))

    @property
    def zero_order(self) -> PadePotential:
        return self._build(0.0)

    def degree(self) -> int:
        """Highest lambda power appearing after expanding beta(lambda)*A_n(lambda)."""
        deg_b = max((len(b) - 1) for b in self.B)
        deg_num = max(len(_poly_mul(self.beta, a)) - 1 for a in self.A)
        return max(deg_b, deg_num)

    def numerator_polys(self) -> tuple[tuple[float, ...], ...]:
        """Expanded lambda-polynomials of beta(lambda) * A_n(lambda)."""
        return tuple(_poly_mul(self.beta, a) for a in self.A)

    def to_json_dict(self) -> dict:
        def enc(p):
            return p[0] if len(p) == 1 else {"coeffs": list(p)}

        return {
            "t": self.t,
            "ell": self.ell,
            "beta": enc(self.beta),
            "A": [enc(a) for a in self.A],
            "B": [enc(b) for b in self.B],
            "lambda_range": list(self.lambda_range),
        }


@dataclass(frozen=True)
class PartialFractionForm:
    """Partial fractions of the rational part in s = x^2.

    simple_terms:    list of (e_m, (sigma_m1, ..., sigma_mJ)) contributing
                     sum_j sigma_mj / (1 + e_m x^2)^j.
    quadratic_terms: list of (f_n, g_n, ((mu_n1, nu_n1), ...)) contributing
                     sum_k (mu_nk x^2 + nu_nk) / (1 + (f_n-2g_n) x^2 + g_n^2 x^4)^k.
    """

    simple_terms: tuple
    quadratic_terms: tuple

    @staticmethod
    def from_potential(p: PadePotential) -> "PartialFractionForm":
        if not p.denominator_positive():
            raise ValueError("partial fractions require a positive denominator")
        roots = np.roots(np.array(p.B[::-1], dtype=float))
        clusters = _cluster_roots(roots)
        # Factor list: each entry is a polynomial in s with constant term 1,
        # together with its multiplicity and kind.
        factors = []
        for center, mult in clusters:
            if abs(center.imag) <= _REAL_ROOT_IMAG_TOL * (1.0 + abs(center)):
                s0 = center.real
                e = -1.0 / s0
                factors.append(("simple", (e,), (1.0, e), mult))
            else:
                if center.imag < 0:
                    continue  # conjugate partner handled with its twin
                rr = abs(center) ** 2
                g = np.sqrt(1.0 / rr)
                pcoef = -2.0 * center.real / rr
                f = pcoef + 2.0 * g
                factors.append(("quad", (f, g), (1.0, pcoef, g * g), mult))

        unknown_cols = []
        layout = []  # (kind, params, j) per unknown column block
        for kind, params, poly, mult in factors:
            for j in range(1, mult + 1):
                # Multiply the remaining factors: full denominator / poly^j.
                rest = (1.0,)
                for kind2, params2, poly2, mult2 in factors:
                    m2 = mult2 - (j if (kind2, params2) == (kind, params) else 0)
                    for _ in range(m2):
                        rest = _poly_mul(rest, poly2)
                if kind == "simple":
                    unknown_cols.append(rest)
                    layout.append((kind, params, j, "const"))
                else:
                    unknown_cols.append(rest)
                    layout.append((kind, params, j, "const"))
                    unknown_cols.append(_poly_mul((0.0, 1.0), rest))
                    layout.append((kind, params, j, "lin"))

        target = list(p.numerator_coeffs()) + [0.0] * p.t
        target = target[: p.t]
        n_unknowns = len(unknown_cols)
        mat = np.zeros((p.t, n_unknowns))
        for col, poly in enumerate(unknown_cols):
            for row, c in enumerate(poly[: p.t]):
                mat[row, col] = c
        try:
            sol = np.linalg.solve(mat, np.array(target)) if n_unknowns == p.t else \
                np.linalg.lstsq(mat, np.array(target), rcond=None)[0]
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"ill-conditioned decomposition: {exc}") from exc

        simple: dict = {}
        quad: dict = {}
        for value, (kind, params, j, part) in zip(sol, layout):
            if kind == "simple":
                simple.setdefault(params, {})[j] = value
            else:
                entry = quad.setdefault(params, {})
                mu, nu = entry.get(j, (0.0, 0.0))
                if part == "lin":
                    entry[j] = (value, nu)
                else:
                    entry[j] = (mu, value)

        form = PartialFractionForm(
            simple_terms=tuple(
                (e, tuple(d[j] for j in sorted(d))) for (e,), d in simple.items()
            ),
            quadratic_terms=tuple(
                (f, g, tuple(d[j] for j in sorted(d))) for (f, g), d in quad.items()
            ),
        )
        _check_round_trip(p, form, clusters)
        return form

    def rational_part(self, x):
        """Evaluate the reassembled rational part (everything but x^2)."""
        s = np.asarray(x, dtype=float) ** 2
        total = np.zeros_like(s)
        for e, sigmas in self.simple_terms:
            base = 1.0 + e * s
            for j, sigma in enumerate(sigmas, start=1):
                total += sigma / base**j
        for f, g, pairs in self.quadratic_terms:
            base = 1.0 + (f - 2.0 * g) * s + g * g * s * s
            for k, (mu, nu) in enumerate(pairs, start=1):
                total += (mu * s + nu) / base**k
        return total

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** 2 + self.rational_part(x)


def _cluster_roots(roots: np.ndarray) -> list[tuple[complex, int]]:
    """Group numerically coincident roots into (center, multiplicity) pairs."""
    remaining = list(roots)
    clusters: list[tuple[complex, int]] = []
    while remaining:
        r = remaining.pop(0)
        group = [r]
        keep = []
        for other in remaining:
            if abs(other - r) <= _ROOT_CLUSTER_TOL * (1.0 + abs(r)):
                group.append(other)
            else:
                keep.append(other)
        remaining = keep
        center = sum(group) / len(group)
        clusters.append((center, len(group)))
    return clusters


def _check_round_trip(p: PadePotential, form: PartialFractionForm, clusters) -> None:
    xs = np.linspace(0.0, 10.0, 50)
    direct = p(xs) - xs**2
    rebuilt = form.rational_part(xs)
    err = np.max(np.abs(rebuilt - direct) / (1.0 + np.abs(direct)))
    if err > _ROUND_TRIP_TOL:
        desc = ", ".join(f"s={c:.6g} (x{m})" for c, m in clusters)
        raise ValueError(
            f"ill-conditioned decomposition (round-trip error {err:.2e}) "
            f"for root cluster(s): {desc}"
        )


def load_potential_config(data: dict):
    """Build a PadePotential or CouplingPath from the JSON schema.

    Schema: {"t": int, "ell": int, "beta": num|poly, "A": [num|poly],
    "B": [num|poly]} with poly = {"coeffs": [c0, c1, ...]} in ascending
    lambda powers; an optional "lambda_range": [lo, hi] selects the path
    window.  A config with any polynomial coefficient yields a CouplingPath.
    """
    allowed = {"t", "ell", "beta", "A", "B", "lambda_range"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("t", "ell", "beta", "A", "B"):
        if key not in data:
            raise ValueError(f"missing config key: {key!r}")

    def dec(v):
        if isinstance(v, dict):
            extra = set(v) - {"coeffs"}
            if extra:
                raise ValueError(f"unknown poly keys: {sorted(extra)}")
            return tuple(float(c) for c in v["coeffs"])
        return (float(v),)

    beta = dec(data["beta"])
    A = tuple(dec(a) for a in data["A"])
    B = tuple(dec(b) for b in data["B"])
    is_path = "lambda_range" in data or any(
        len(p) > 1 for p in (beta, *A, *B)
    )
    if not is_path:
        return PadePotential(
            t=int(data["t"]), beta=beta[0], A=tuple(a[0] for a in A),
            B=tuple(b[0] for b in B), ell=int(data["ell"]),
        )
    rng = tuple(data.get("lambda_range", (-1.0, 1.0)))
    return CouplingPath(
        t=int(data["t"]), ell=int(data["ell"]), beta=beta, A=A, B=B,
        lambda_range=rng,
    )
