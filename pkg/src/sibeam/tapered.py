"""Exact per-column solver for unit-norm (tapered) codebooks.

Each reference column r is replaced by the unit vector z closest to it in
inner product subject to a quadratic SI cap:

    maximize Re(r^H z)  s.t.  z^H G z <= eps,  ||z|| = 1.

With G = Q diag(sigma) Q^H the KKT system reduces to a scalar secular
polynomial in the sphere-to-cap multiplier ratio nu,

    P(nu) = sum_p (sigma_p - eps) |q_p^H r|^2 prod_{q != p} (sigma_q + nu)^2,

whose largest positive real root gives the optimizer
z = Q (diag(sigma) + nu I)^{-1} Q^H r, normalized. Below the feasibility
threshold sigma_bar the cap cannot be met by any unit vector and the
problem is infeasible; at or above r^H G r the reference itself is
feasible and returned unchanged.

Roots are found from the expanded polynomial via companion-matrix
eigenvalues with a bisection fallback on the product form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, Mode
from .split import SplitGrams, quadratic_form

RANK_EIG_REL = 1e-12
ROOT_IMAG_REL = 1e-8
ROOT_REAL_MIN = 1e-12
KKT_TOL = 1e-8


class InfeasibleColumnError(ValueError):
    """The SI cap is below the column's feasibility threshold."""

    def __init__(self, message: str, eps: float, sigma_bar: float,
                 side: str = "", column: int = -1):
        super().__init__(message)
        self.eps = eps
        self.sigma_bar = sigma_bar
        self.side = side
        self.column = column


@dataclass
class TaperedSolveReport:
    """Per-column solution certificate."""

    objective: float
    nu_star: float
    mu: float
    lam: float
    si_value: float
    case: str           # "reference", "active", or "active_sphere_slack"
    kkt_residual: float


@dataclass
class _Spectrum:
    """Cached eigendecomposition of one side's Gram matrix."""

    sigma: np.ndarray   # ascending, clamped at 0
    q: np.ndarray
    rank_cut: float

    @classmethod
    def of(cls, g: np.ndarray) -> "_Spectrum":
        sigma, q = np.linalg.eigh(0.5 * (g + g.conj().T))
        sigma = np.maximum(sigma, 0.0)
        cut = RANK_EIG_REL * (sigma.max() if sigma.size else 0.0)
        return cls(sigma=sigma, q=q, rank_cut=cut)

    @property
    def full_rank(self) -> bool:
        return bool(np.all(self.sigma > self.rank_cut))


def min_feasible_eps(r: np.ndarray, g: np.ndarray) -> float:
    """Feasibility threshold sigma_bar for one column.

    For full-rank G this is
    (sum_p |q_p^H r|^2 / sigma_p) / (sum_p |q_p^H r|^2 / sigma_p^2);
    any rank-deficient G admits unit vectors with arbitrarily small
    quadratic form, so the threshold is 0.
    """
    spec = _Spectrum.of(g)
    return _sigma_bar(spec, np.asarray(r, dtype=complex))


def _sigma_bar(spec: _Spectrum, r: np.ndarray) -> float:
    if not spec.full_rank:
        return 0.0
    w = np.abs(spec.q.conj().T @ r) ** 2
    a1 = float(np.sum(w / spec.sigma))
    a2 = float(np.sum(w / spec.sigma ** 2))
    if a2 == 0.0:
        return 0.0
    return a1 / a2


def _secular_coeffs(sigma: np.ndarray, weights: np.ndarray,
                    eps: float) -> np.ndarray:
    """Expanded coefficients of P(nu), highest degree first."""
    p = len(sigma)
    total = np.zeros(2 * p - 1)
    for i in range(p):
        if weights[i] == 0.0:
            continue
        poly = np.array([weights[i] * (sigma[i] - eps)])
        for j in range(p):
            if j == i:
                continue
            lin = np.array([1.0, sigma[j]])
            poly = np.convolve(np.convolve(poly, lin), lin)
        total[-len(poly):] += poly
    return total


def _secular_value(nu: float, sigma: np.ndarray, weights: np.ndarray,
                   eps: float) -> float:
    """P(nu) evaluated in product form, stable for large degrees."""
    logs = np.log(sigma + nu)
    total_log = 2.0 * np.sum(logs)
    acc = 0.0
    for i in range(len(sigma)):
        if weights[i] == 0.0:
            continue
        acc += weights[i] * (sigma[i] - eps) * np.exp(total_log - 2.0 * logs[i])
    return acc


def _largest_positive_root(sigma: np.ndarray, weights: np.ndarray,
                           eps: float, trace: float, r_g_r: float) -> float | None:
    coeffs = _secular_coeffs(sigma, weights, eps)
    lead = np.max(np.abs(coeffs))
    if lead > 0:
        roots = np.roots(coeffs / lead)
        real = roots[(np.abs(roots.imag) <= ROOT_IMAG_REL * np.maximum(np.abs(roots.real), 1e-300))
                     & (roots.real > ROOT_REAL_MIN)].real
        if real.size:
            return float(real.max())
    # bisection fallback on [lo, hi]; P < 0 near 0 and > 0 at large nu
    # whenever an active root exists
    hi = trace * (1.0 + r_g_r / eps) + 1.0
    lo = ROOT_REAL_MIN
    f_lo = _secular_value(lo, sigma, weights, eps)
    f_hi = _secular_value(hi, sigma, weights, eps)
    while f_hi <= 0.0 and hi < 1e18:
        hi *= 4.0
        f_hi = _secular_value(hi, sigma, weights, eps)
    if f_lo >= 0.0 or f_hi <= 0.0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _secular_value(mid, sigma, weights, eps) < 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def solve_tapered_column(r: np.ndarray, g: np.ndarray, eps: float,
                         _spectrum: _Spectrum | None = None
                         ) -> tuple[np.ndarray, TaperedSolveReport]:
    """Solve one column exactly. Returns (z, report).

    Raises InfeasibleColumnError when eps is at or below the column's
    feasibility threshold.
    """
    r = np.asarray(r, dtype=complex)
    if eps <= 0.0:
        raise InfeasibleColumnError("eps must be positive", eps, 0.0)
    nrm = np.linalg.norm(r)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"reference column norm {nrm:.12f} is not 1")

    r_g_r = quadratic_form(g, r)
    if eps >= r_g_r:
        # reference already satisfies the cap; keep it bit-exact
        return r.copy(), TaperedSolveReport(
            objective=1.0, nu_star=0.0, mu=0.0, lam=0.5,
            si_value=r_g_r, case="reference", kkt_residual=0.0)

    spec = _spectrum if _spectrum is not None else _Spectrum.of(g)
    sigma_bar = _sigma_bar(spec, r)
    if eps <= sigma_bar:
        raise InfeasibleColumnError(
            f"eps={eps:.6e} is at or below the feasibility threshold "
            f"{sigma_bar:.6e}", eps, sigma_bar)

    # work in units of the largest eigenvalue for conditioning
    scale = float(spec.sigma.max())
    sig = spec.sigma / scale
    eps_s = eps / scale
    proj = spec.q.conj().T @ r
    weights = np.abs(proj) ** 2

    null_mask = spec.sigma <= spec.rank_cut
    nu = _largest_positive_root(sig, weights, eps_s, float(np.sum(sig)),
                                r_g_r / scale)

    if nu is None and np.any(null_mask) and float(np.sum(weights[null_mask])) < 1e-20:
        # cap active but the sphere constraint is slack: the optimum rides
        # the SI ellipsoid inside the unit ball, padded with a null-space
        # direction that costs nothing
        pos = ~null_mask
        a1 = float(np.sum(weights[pos] / spec.sigma[pos]))
        z_r = spec.q[:, pos] @ (proj[pos] / spec.sigma[pos]) * np.sqrt(eps / a1)
        pad = np.sqrt(max(1.0 - float(np.linalg.norm(z_r) ** 2), 0.0))
        z = z_r + pad * spec.q[:, np.argmax(null_mask)]
        mu = np.sqrt(a1) / (2.0 * np.sqrt(eps))
        resid = float(np.linalg.norm(-r + 2.0 * mu * (g @ z)))
        return z, TaperedSolveReport(
            objective=float(np.real(np.vdot(r, z))), nu_star=0.0, mu=mu,
            lam=0.0, si_value=quadratic_form(g, z),
            case="active_sphere_slack", kkt_residual=resid)

    if nu is None:
        raise InfeasibleColumnError(
            f"no active root found for eps={eps:.6e} "
            f"(threshold {sigma_bar:.6e})", eps, sigma_bar)

    nu_star = nu * scale

    def _z_of(nu_val: float) -> tuple[np.ndarray, float]:
        z_tilde = spec.q @ (proj / (spec.sigma + nu_val))
        norm_zt = float(np.linalg.norm(z_tilde))
        return z_tilde / norm_zt, norm_zt

    z, norm_zt = _z_of(nu_star)
    if quadratic_form(g, z) > eps:
        # the companion-matrix root is only ~1e-7 accurate and may land a
        # hair on the infeasible side; the cap value grows with nu, so
        # bisect nu down until the measured form is at or under eps
        shrink = 1e-6
        lo = nu_star * (1.0 - shrink)
        while lo > 0.0 and quadratic_form(g, _z_of(lo)[0]) > eps:
            shrink *= 8.0
            lo = nu_star * (1.0 - shrink)
        lo = max(lo, ROOT_REAL_MIN * scale)
        hi = nu_star
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if quadratic_form(g, _z_of(mid)[0]) <= eps:
                lo = mid
            else:
                hi = mid
        nu_star = lo
        z, norm_zt = _z_of(nu_star)
    mu = 0.5 * norm_zt
    lam = nu_star * mu
    resid = float(np.linalg.norm(-r + 2.0 * mu * (g @ z) + 2.0 * lam * z))
    return z, TaperedSolveReport(
        objective=float(np.real(np.vdot(r, z))), nu_star=nu_star, mu=mu,
        lam=lam, si_value=quadratic_form(g, z), case="active",
        kkt_residual=resid)


def optimize_codebooks_tapered(
        reference_rx: Codebook, reference_tx: Codebook, grams: SplitGrams,
        eps: float, beta: float = 1.0
) -> tuple[Codebook, Codebook, dict[str, list[TaperedSolveReport]]]:
    """Solve every column of both codebooks under the split SI cap.

    TX columns satisfy w^H g_tx w <= eps*beta, RX columns
    c^H g_rx c <= eps/beta, so the decoupled bound on the pair's max-SI is
    at most eps. Columns whose reference already meets the cap are copied
    unchanged. Raises InfeasibleColumnError naming the first offending
    column when the cap is unattainable.
    """
    if eps <= 0.0 or beta <= 0.0:
        raise ValueError("eps and beta must be positive")
    sides = (("tx", reference_tx, grams.g_tx, eps * beta),
             ("rx", reference_rx, grams.g_rx, eps / beta))
    out: dict[str, np.ndarray] = {}
    reports: dict[str, list[TaperedSolveReport]] = {"tx": [], "rx": []}
    for name, ref, g, side_eps in sides:
        spec = _Spectrum.of(g)
        cols = np.empty_like(ref.entries)
        for j in range(ref.num_beams):
            try:
                z, rep = solve_tapered_column(ref.entries[:, j], g, side_eps,
                                              _spectrum=spec)
            except InfeasibleColumnError as err:
                raise InfeasibleColumnError(
                    f"{name} column {j}: {err}", err.eps, err.sigma_bar,
                    side=name, column=j) from None
            cols[:, j] = z
            reports[name].append(rep)
        out[name] = cols
    rx_cb = Codebook(entries=out["rx"], mode=Mode.TAPERED)
    tx_cb = Codebook(entries=out["tx"], mode=Mode.TAPERED)
    return rx_cb, tx_cb, reports
