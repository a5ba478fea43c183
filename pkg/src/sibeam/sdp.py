"""Semidefinite relaxation engine for constant-modulus (phased) codebooks.

A phased column with entries of modulus 1/sqrt(P) cannot be optimized in
closed form, so each column is lifted to Z = z z^H and solved as the
relaxation

    maximize <r r^H, Z>  s.t.  <G, Z> <= eps,  Z_pp = 1/P,  Z psd,

dropping the rank-one requirement. The solver is a self-contained
first-order operator-splitting (ADMM) scheme over the Hermitian PSD cone:
alternating projections between the affine constraint set (closed form
through a small Gram system) and the cone (eigendecomposition with
eigenvalue clipping), with over-relaxation and adaptive penalty scaling.

The extracted leading eigenvector is phase-aligned with the reference and,
when needed, projected back to constant modulus. The trust metric
upsilon = sigma_max / trace in [1/P, 1] reports how close the relaxation
came to rank one; values at 1 certify the lift was exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook, Mode
from .split import SplitGrams, quadratic_form

DEFAULT_TOLERANCE = 1e-7
DEFAULT_MAX_ITER = 50_000
OVER_RELAXATION = 1.6
MODULUS_PROJECT_TOL = 1e-6
RANK_ONE_ACCEPT = 0.995


@dataclass
class SdpProblem:
    """maximize <cost, Z> over Hermitian PSD Z with linear constraints.

    equalities: list of (A, b) meaning Re tr(A^H Z) == b;
    inequalities: list of (B, c) meaning Re tr(B^H Z) <= c.
    All constraint matrices must be Hermitian.
    """

    cost: np.ndarray
    equalities: list[tuple[np.ndarray, float]] = field(default_factory=list)
    inequalities: list[tuple[np.ndarray, float]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.cost.shape[0]


@dataclass
class SdpSolution:
    z: np.ndarray
    objective: float
    status: str          # "optimal", "max_iter", "infeasible"
    iterations: int
    primal_residual: float
    dual_residual: float
    constraint_residual: float


def _hip(a: np.ndarray, b: np.ndarray) -> float:
    """Real inner product on Hermitian matrices."""
    return float(np.real(np.sum(a.conj() * b)))


def _psd_project(z: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (z + z.conj().T))
    w = np.maximum(w, 0.0)
    return (v * w) @ v.conj().T


def rank_one_metric(z: np.ndarray) -> float:
    """sigma_max / trace of a PSD matrix; 1 certifies rank one."""
    w = np.linalg.eigvalsh(0.5 * (z + z.conj().T))
    tr = float(np.sum(np.maximum(w, 0.0)))
    if tr <= 0.0:
        return 0.0
    return float(w.max() / tr)


def solve_sdp(problem: SdpProblem, tolerance: float = DEFAULT_TOLERANCE,
              max_iter: int = DEFAULT_MAX_ITER) -> SdpSolution:
    """Operator-splitting solve of a small Hermitian SDP.

    Constraint rows are normalized to unit Frobenius norm up front; the
    penalty parameter adapts every 200 iterations to balance primal and
    dual progress. Status "infeasible" is reported when the primal
    residual stalls far above tolerance while the scaled dual variable
    keeps growing, the splitting scheme's divergence signature.
    """
    p = problem.dim
    eqs = [(0.5 * (a + a.conj().T), float(b)) for a, b in problem.equalities]
    ines = [(0.5 * (a + a.conj().T), float(c)) for a, c in problem.inequalities]
    n_eq, n_in = len(eqs), len(ines)
    n_con = n_eq + n_in

    # normalized constraint stack; slack variables attach to inequalities
    mats, rhs, scales = [], [], []
    for a, b in eqs + ines:
        s = max(float(np.linalg.norm(a)), 1e-300)
        mats.append(a / s)
        rhs.append(b / s)
        scales.append(s)
    rhs = np.array(rhs)
    slack_sc = np.array([1.0 / scales[n_eq + i] for i in range(n_in)])

    cost_norm = max(float(np.linalg.norm(problem.cost)), 1e-300)
    cost = problem.cost / cost_norm

    if n_con:
        gram = np.empty((n_con, n_con))
        for i in range(n_con):
            for j in range(n_con):
                gram[i, j] = _hip(mats[i], mats[j])
        for i in range(n_in):
            k = n_eq + i
            gram[k, k] += slack_sc[i] ** 2
        gram_chol = np.linalg.cholesky(gram + 1e-14 * np.eye(n_con))

    def affine_project(z0, s0):
        if not n_con:
            return z0, s0
        vals = np.array([_hip(m, z0) for m in mats])
        vals[n_eq:] += slack_sc * s0
        w = np.linalg.solve(gram_chol.conj().T, np.linalg.solve(gram_chol, vals - rhs))
        z = z0 - sum(w[k] * mats[k] for k in range(n_con))
        s = s0 - w[n_eq:] * slack_sc
        return z, s

    rho = 1.0
    z_y = np.eye(p, dtype=complex) / p
    s_y = np.zeros(n_in)
    z_u = np.zeros((p, p), dtype=complex)
    s_u = np.zeros(n_in)
    status = "max_iter"
    rp = rd = np.inf
    stall_rp, stall_unorm = np.inf, 0.0
    it = 0
    for it in range(1, max_iter + 1):
        z_x, s_x = affine_project(z_y - z_u + cost / rho, s_y - s_u)
        z_hat = OVER_RELAXATION * z_x + (1 - OVER_RELAXATION) * z_y
        s_hat = OVER_RELAXATION * s_x + (1 - OVER_RELAXATION) * s_y
        z_prev, s_prev = z_y, s_y
        z_y = _psd_project(z_hat + z_u)
        s_y = np.maximum(s_hat + s_u, 0.0)
        z_u = z_u + z_hat - z_y
        s_u = s_u + s_hat - s_y

        if it % 25 == 0 or it == max_iter:
            nx = np.sqrt(np.linalg.norm(z_x) ** 2 + np.linalg.norm(s_x) ** 2)
            ny = np.sqrt(np.linalg.norm(z_y) ** 2 + np.linalg.norm(s_y) ** 2)
            rp = np.sqrt(np.linalg.norm(z_x - z_y) ** 2
                         + np.linalg.norm(s_x - s_y) ** 2) / (1.0 + max(nx, ny))
            rd = rho * np.sqrt(np.linalg.norm(z_y - z_prev) ** 2
                               + np.linalg.norm(s_y - s_prev) ** 2) / (1.0 + ny)
            if rp <= tolerance and rd <= tolerance:
                status = "optimal"
                break
        if it % 200 == 0:
            if rp > 10.0 * rd:
                rho *= 2.0
                z_u /= 2.0
                s_u /= 2.0
            elif rd > 10.0 * rp:
                rho /= 2.0
                z_u *= 2.0
                s_u *= 2.0
        if it % 2000 == 0:
            unorm = rho * np.sqrt(np.linalg.norm(z_u) ** 2 + np.linalg.norm(s_u) ** 2)
            if (rp > max(1e3 * tolerance, 1e-6) and rp > 0.97 * stall_rp
                    and unorm > 1.5 * stall_unorm and stall_unorm > 0):
                status = "infeasible"
                break
            stall_rp, stall_unorm = rp, unorm

    z_final = z_y
    con_res = 0.0
    for (a, b) in eqs:
        con_res = max(con_res, abs(_hip(a, z_final) - b) / (1.0 + abs(b)))
    for (a, c) in ines:
        con_res = max(con_res, max(_hip(a, z_final) - c, 0.0) / (1.0 + abs(c)))
    return SdpSolution(
        z=z_final, objective=_hip(problem.cost, z_final), status=status,
        iterations=it, primal_residual=float(rp), dual_residual=float(rd),
        constraint_residual=float(con_res))


@dataclass
class PhasedSolveReport:
    objective: float
    upsilon: float
    si_value: float
    projected: bool
    status: str
    iterations: int


def _phased_batch(refs: np.ndarray, g: np.ndarray, eps: float,
                  tolerance: float, max_iter: int
                  ) -> tuple[np.ndarray, list[str], np.ndarray, np.ndarray]:
    """ADMM on a batch of phased-column SDPs sharing one Gram matrix.

    refs has shape (B, P); returns (Z of shape (B, P, P), statuses,
    iterations, primal residuals). The affine projection onto
    {diag(Z) = 1/P, <G, Z> + s = eps} is closed form: the correction lives
    in the span of the diagonal one-hot matrices and (G, 1).
    """
    b, p = refs.shape
    gscale = max(float(np.linalg.norm(g)), 1e-300)
    gn = g / gscale
    eps_n = eps / gscale
    gdiag = np.real(np.diag(gn))
    denom = float(np.linalg.norm(gn) ** 2 - np.sum(gdiag ** 2) + 1.0)

    costs = refs[:, :, None] * refs[:, None, :].conj()   # r r^H per column

    rho = np.ones((b, 1, 1))
    z_y = np.broadcast_to(np.eye(p, dtype=complex) / p, (b, p, p)).copy()
    s_y = np.full(b, max(eps_n - float(np.trace(gn).real) / p, 0.0))
    z_u = np.zeros((b, p, p), dtype=complex)
    s_u = np.zeros(b)
    statuses = ["max_iter"] * b
    rp = np.full(b, np.inf)
    rd = np.full(b, np.inf)
    iters = np.full(b, max_iter)
    done = np.zeros(b, dtype=bool)
    stall_rp = np.full(b, np.inf)
    stall_un = np.zeros(b)

    def project_affine(z0, s0):
        nu = (eps_n - s0 - np.real(np.einsum("pq,bpq->b", gn.conj(), z0))
              - (np.sum(gdiag) / p
                 - np.einsum("p,bp->b", gdiag, np.real(np.einsum("bpp->bp", z0))))) / denom
        diag0 = np.real(np.einsum("bpp->bp", z0))
        mu = 1.0 / p - diag0 - nu[:, None] * gdiag[None, :]
        z = z0 + nu[:, None, None] * gn[None, :, :]
        idx = np.arange(p)
        z[:, idx, idx] += mu
        return z, s0 + nu

    for it in range(1, max_iter + 1):
        z_x, s_x = project_affine(z_y - z_u + costs / rho, s_y - s_u)
        z_hat = OVER_RELAXATION * z_x + (1 - OVER_RELAXATION) * z_y
        s_hat = OVER_RELAXATION * s_x + (1 - OVER_RELAXATION) * s_y
        z_prev, s_prev = z_y, s_y
        w, v = np.linalg.eigh(z_hat + z_u)
        z_y = np.einsum("bpk,bk,bqk->bpq", v, np.maximum(w, 0.0), v.conj())
        s_y = np.maximum(s_hat + s_u, 0.0)
        z_u = z_u + z_hat - z_y
        s_u = s_u + s_hat - s_y

        if it % 25 == 0 or it == max_iter:
            nx = np.sqrt(np.linalg.norm(z_x, axis=(1, 2)) ** 2 + s_x ** 2)
            ny = np.sqrt(np.linalg.norm(z_y, axis=(1, 2)) ** 2 + s_y ** 2)
            rp = np.sqrt(np.linalg.norm(z_x - z_y, axis=(1, 2)) ** 2
                         + (s_x - s_y) ** 2) / (1.0 + np.maximum(nx, ny))
            rd = rho[:, 0, 0] * np.sqrt(
                np.linalg.norm(z_y - z_prev, axis=(1, 2)) ** 2
                + (s_y - s_prev) ** 2) / (1.0 + ny)
            newly = (~done) & (rp <= tolerance) & (rd <= tolerance)
            for k in np.nonzero(newly)[0]:
                statuses[k] = "optimal"
                iters[k] = it
            done |= newly
            if bool(np.all(done)):
                break
        if it % 200 == 0:
            up = (~done) & (rp > 10.0 * rd)
            dn = (~done) & (rd > 10.0 * rp)
            rho[up] *= 2.0
            z_u[up] /= 2.0
            s_u[up] /= 2.0
            rho[dn] /= 2.0
            z_u[dn] *= 2.0
            s_u[dn] *= 2.0
        if it % 2000 == 0:
            unorm = rho[:, 0, 0] * np.sqrt(
                np.linalg.norm(z_u, axis=(1, 2)) ** 2 + s_u ** 2)
            bad = ((~done) & (rp > max(1e3 * tolerance, 1e-6))
                   & (rp > 0.97 * stall_rp) & (unorm > 1.5 * stall_un)
                   & (stall_un > 0))
            for k in np.nonzero(bad)[0]:
                statuses[k] = "infeasible"
                iters[k] = it
            done |= bad
            if bool(np.all(done)):
                break
            stall_rp = np.where(done, stall_rp, rp)
            stall_un = np.where(done, stall_un, unorm)

    return z_y, statuses, iters, rp


def extract_phased_column(z_matrix: np.ndarray, r: np.ndarray
                          ) -> tuple[np.ndarray, float, bool]:
    """Leading-eigenvector extraction with phase alignment and projection.

    Returns (column, upsilon, projected). The global phase is chosen so
    r^H z is real nonnegative; entries are renormalized to modulus
    1/sqrt(P) only when they deviate by more than the projection tolerance
    (the flag reports it).
    """
    p = z_matrix.shape[0]
    w, v = np.linalg.eigh(0.5 * (z_matrix + z_matrix.conj().T))
    upsilon = rank_one_metric(z_matrix)
    z = np.sqrt(max(w[-1], 0.0)) * v[:, -1]
    inner = np.vdot(z, r)      # z^H r
    if abs(inner) > 0.0:
        z = z * (inner / abs(inner))
    target = 1.0 / np.sqrt(p)
    dev = float(np.abs(np.abs(z) - target).max())
    projected = dev > MODULUS_PROJECT_TOL
    if projected:
        mods = np.abs(z)
        phases = np.where(mods > 0.0, z / np.where(mods > 0.0, mods, 1.0), 1.0)
        z = target * phases
    else:
        # snap the tiny residual so the codebook invariant holds exactly
        mods = np.abs(z)
        z = target * np.where(mods > 0.0, z / np.where(mods > 0.0, mods, 1.0), 1.0)
    return z, upsilon, projected


def _reference_feasible(r: np.ndarray, g: np.ndarray, eps: float) -> bool:
    """True when r is itself constant modulus and within the SI cap.

    A feasible constant-modulus reference is exactly optimal
    (Re r^H z <= 1 with equality only at z = r), so the solvers copy it
    instead of running the relaxation.
    """
    p = r.shape[0]
    if np.abs(np.abs(r) - 1.0 / np.sqrt(p)).max() > 1e-12:
        return False
    return quadratic_form(g, r) <= eps


def solve_phased_column(r: np.ndarray, g: np.ndarray, eps: float,
                        tolerance: float = DEFAULT_TOLERANCE,
                        max_iter: int = DEFAULT_MAX_ITER
                        ) -> tuple[np.ndarray, PhasedSolveReport]:
    """Relax, solve and extract a single constant-modulus column.

    A reference that is already feasible is returned unchanged with
    status "reference".
    """
    r = np.asarray(r, dtype=complex)
    if _reference_feasible(r, g, eps):
        return r.copy(), PhasedSolveReport(
            objective=1.0, upsilon=1.0, si_value=quadratic_form(g, r),
            projected=False, status="reference", iterations=0)
    z_mats, statuses, iters, _ = _phased_batch(r[None, :], g, eps,
                                               tolerance, max_iter)
    z, upsilon, projected = extract_phased_column(z_mats[0], r)
    return z, PhasedSolveReport(
        objective=float(np.real(np.vdot(r, z))), upsilon=upsilon,
        si_value=quadratic_form(g, z), projected=projected,
        status=statuses[0], iterations=int(iters[0]))


class PhasedSolveError(RuntimeError):
    """Raised when a phased column SDP does not reach an optimal status."""

    def __init__(self, message: str, statuses: dict[str, list[str]]):
        super().__init__(message)
        self.statuses = statuses


def min_feasible_eps_phased(g: np.ndarray, tolerance: float = 1e-7,
                            max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Smallest achievable <G, Z> over the relaxed constant-modulus set."""
    p = g.shape[0]
    problem = SdpProblem(
        cost=-np.asarray(g, dtype=complex),
        equalities=[(_one_hot(p, i), 1.0 / p) for i in range(p)])
    sol = solve_sdp(problem, tolerance=tolerance, max_iter=max_iter)
    return float(-sol.objective)


def _one_hot(p: int, i: int) -> np.ndarray:
    e = np.zeros((p, p), dtype=complex)
    e[i, i] = 1.0
    return e


def optimize_codebooks_phased(
        reference_rx: Codebook, reference_tx: Codebook, grams: SplitGrams,
        eps: float, beta: float = 1.0,
        tolerance: float = DEFAULT_TOLERANCE,
        max_iter: int = DEFAULT_MAX_ITER
) -> tuple[Codebook, Codebook, dict[str, list[PhasedSolveReport]]]:
    """Solve every column of both codebooks through the SDP relaxation.

    Columns of one side share a Gram matrix, so they are iterated as one
    batch; already-feasible reference columns are copied exactly with
    status "reference". TX columns are capped at eps*beta, RX at
    eps/beta, mirroring the tapered driver. Raises PhasedSolveError when
    any column reports infeasible or exceeds the iteration cap; reports
    whose si_value lands above eps_side*(1+1e-3) keep projected=True as a
    bound-violation flag.
    """
    if eps <= 0.0 or beta <= 0.0:
        raise ValueError("eps and beta must be positive")
    sides = (("tx", reference_tx, grams.g_tx, eps * beta),
             ("rx", reference_rx, grams.g_rx, eps / beta))
    out: dict[str, np.ndarray] = {}
    reports: dict[str, list[PhasedSolveReport]] = {"tx": [], "rx": []}
    statuses: dict[str, list[str]] = {}
    for name, ref, g, side_eps in sides:
        refs = ref.entries.T.copy()        # (B, P)
        copy = np.array([_reference_feasible(refs[j], g, side_eps)
                         for j in range(ref.num_beams)])
        if np.all(copy):
            z_mats = None
            stats_solved: list[str] = []
            iters_solved = np.empty(0)
        else:
            z_mats, stats_solved, iters_solved, _ = _phased_batch(
                refs[~copy], g, side_eps, tolerance, max_iter)
        cols = np.empty_like(ref.entries)
        stats: list[str] = []
        solved = 0
        for j in range(ref.num_beams):
            if copy[j]:
                z = refs[j].copy()
                rep = PhasedSolveReport(
                    objective=1.0, upsilon=1.0,
                    si_value=quadratic_form(g, z), projected=False,
                    status="reference", iterations=0)
            else:
                z, upsilon, projected = extract_phased_column(
                    z_mats[solved], refs[j])
                rep = PhasedSolveReport(
                    objective=float(np.real(np.vdot(refs[j], z))),
                    upsilon=upsilon,
                    si_value=quadratic_form(g, z),
                    projected=(projected
                               or quadratic_form(g, z) > side_eps * (1 + 1e-3)),
                    status=stats_solved[solved],
                    iterations=int(iters_solved[solved]))
                solved += 1
            cols[:, j] = z
            stats.append(rep.status)
            reports[name].append(rep)
        statuses[name] = stats
        out[name] = cols
    bad = {side: [s for s in stats if s not in ("optimal", "reference")]
           for side, stats in statuses.items()}
    if any(bad.values()):
        kinds = {s for v in bad.values() for s in v}
        raise PhasedSolveError(
            f"phased solve failed with statuses {sorted(kinds)}", statuses)
    rx_cb = Codebook(entries=out["rx"], mode=Mode.PHASED)
    tx_cb = Codebook(entries=out["tx"], mode=Mode.PHASED)
    return rx_cb, tx_cb, reports
