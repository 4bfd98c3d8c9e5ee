"""Dense convex QP solver sized for per-tick MPC problems.

Solves

    min_u  1/2 u^T H u + f^T u
    s.t.   lower <= C u <= upper        (two-sided rows, +-inf allowed)
           D u = 0                      (optional homogeneous equalities)

with a primal active-set method: equalities are eliminated through a
null-space basis, a feasible point is found by cyclic projection onto the
halfspaces, then constraints enter and leave a working set until the KKT
conditions hold. Everything is deterministic: ties are broken by lowest
row index and no randomized pivoting is used.

Note the 1/2-convention: callers holding an objective written as
u^T a u + b^T u must pass H = 2a, f = b (see `from_uau_form`).

An ADMM variant is kept behind `method="admm"` for cross-validation only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class QpStatus(Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    C: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    D: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, float)
        self.f = np.asarray(self.f, float).ravel()
        n = self.f.size
        if self.H.shape != (n, n):
            raise ValueError(f"H must be {n}x{n}, got {self.H.shape}")
        if n > 256:
            raise ValueError("dense solver is limited to n <= 256")
        if self.C is None:
            self.C = np.zeros((0, n))
            self.lower = np.zeros(0)
            self.upper = np.zeros(0)
        else:
            self.C = np.asarray(self.C, float).reshape(-1, n)
            m = self.C.shape[0]
            self.lower = np.full(m, -np.inf) if self.lower is None else np.asarray(self.lower, float).ravel()
            self.upper = np.full(m, np.inf) if self.upper is None else np.asarray(self.upper, float).ravel()
            if self.lower.size != m or self.upper.size != m:
                raise ValueError("bound sizes must match number of C rows")
            if np.any(self.lower > self.upper):
                raise ValueError("lower must not exceed upper")
        if self.D is not None:
            self.D = np.asarray(self.D, float).reshape(-1, n)

    @property
    def n(self) -> int:
        return self.f.size


@dataclass
class QpSettings:
    tol: float = 1e-8
    max_iter: int = 4000
    validate_H: bool = True
    method: str = "active_set"  # or "admm" (cross-validation only)
    debug_monotone: bool = False


@dataclass
class QpSolution:
    u: np.ndarray
    status: QpStatus
    iterations: int
    primal_residual: float
    dual_residual: float
    active_rows: list = field(default_factory=list)  # [(row, side)] at the solution
    objective: float = np.nan


def from_uau_form(alpha: np.ndarray, beta: np.ndarray, **kw) -> QpProblem:
    """Adapter for objectives written as u^T alpha u + beta^T u."""
    return QpProblem(H=2.0 * np.asarray(alpha, float), f=beta, **kw)


def _objective(problem: QpProblem, u: np.ndarray) -> float:
    return 0.5 * u @ problem.H @ u + problem.f @ u


def _validate_H(H: np.ndarray, tol: float) -> None:
    if not np.allclose(H, H.T, atol=1e-9 * max(1.0, np.abs(H).max())):
        raise ValueError("H must be symmetric")
    w = np.linalg.eigvalsh(0.5 * (H + H.T))
    if w.min() < -1e3 * tol * max(1.0, abs(w.max())):
        raise ValueError(f"H is not positive semidefinite (min eig {w.min():.3e})")


def _feasible_point(C, lower, upper, u0, tol, sweeps=200):
    """Cyclic projection onto the constraint halfspaces.

    Returns (point, feasible_flag). Converges whenever the intersection is
    nonempty; on problems left infeasible after the sweep budget the flag
    is False.
    """
    u = u0.copy()
    if C.shape[0] == 0:
        return u, True
    norms2 = np.einsum("ij,ij->i", C, C)
    for _ in range(sweeps):
        worst = 0.0
        for j in range(C.shape[0]):
            if norms2[j] <= tol * tol:
                continue
            v = C[j] @ u
            if v < lower[j]:
                u += C[j] * ((lower[j] - v) / norms2[j])
                worst = max(worst, lower[j] - v)
            elif v > upper[j]:
                u += C[j] * ((upper[j] - v) / norms2[j])
                worst = max(worst, v - upper[j])
        if worst <= tol:
            return u, True
    return u, False


def _kkt_step(H, g, A):
    """Solve the equality-constrained step: min 1/2 p'Hp + g'p, A p = 0."""
    nW = A.shape[0]
    n = H.shape[0]
    K = np.zeros((n + nW, n + nW))
    K[:n, :n] = H
    if nW:
        K[:n, n:] = A.T
        K[n:, :n] = A
    rhs = np.concatenate([-g, np.zeros(nW)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        K[:n, :n] = H + 1e-12 * max(1.0, np.trace(H) / n) * np.eye(n)
        sol = np.linalg.solve(K, rhs)
    return sol[:n], sol[n:]


def _independent(A_rows: list, c_new: np.ndarray) -> bool:
    if not A_rows:
        return True
    A = np.array(A_rows)
    x, res, rank, _ = np.linalg.lstsq(A.T, c_new, rcond=None)
    r = c_new - A.T @ x
    return np.linalg.norm(r) > 1e-10 * max(1.0, np.linalg.norm(c_new))


def _active_set(H, f, C, lower, upper, u0, settings, seed_ws=None):
    """Primal active-set loop on an inequality-only problem."""
    tol = settings.tol
    n = f.size
    u, feasible = _feasible_point(C, lower, upper, u0, tol)
    if not feasible:
        return u, QpStatus.INFEASIBLE, 0, []

    # working set: list of (row, side) with side -1 for lower, +1 for upper
    work: list[tuple[int, int]] = []
    if seed_ws:
        for row, side in seed_ws:
            if row >= C.shape[0]:
                continue
            bound = lower[row] if side < 0 else upper[row]
            if not np.isfinite(bound):
                continue
            if abs(C[row] @ u - bound) <= 1e3 * tol and _independent([C[r] for r, _ in work], C[row]):
                work.append((row, side))

    prev_obj = np.inf
    stall = 0
    it = 0
    while it < settings.max_iter:
        it += 1
        g = H @ u + f
        A = np.array([C[r] for r, _ in work]).reshape(len(work), n)
        p, lam = _kkt_step(H, g, A)

        if settings.debug_monotone:
            obj = 0.5 * u @ H @ u + f @ u
            assert obj <= prev_obj + 1e-9 * max(1.0, abs(prev_obj)), "objective increased"
            prev_obj = obj

        if np.linalg.norm(p, np.inf) <= tol:
            if not work:
                return u, QpStatus.OPTIMAL, it, []
            # signed duals: >= 0 required at optimality
            signed = np.array([-l if side < 0 else l for (_, side), l in zip(work, lam)])
            worst = np.argmin(signed)
            if signed[worst] >= -tol:
                return u, QpStatus.OPTIMAL, it, list(work)
            work.pop(worst)
            continue

        # step length to the nearest blocking constraint
        alpha = 1.0
        block = None
        Cp = C @ p if C.shape[0] else np.zeros(0)
        Cu = C @ u if C.shape[0] else np.zeros(0)
        in_work = set(work)
        for j in range(C.shape[0]):
            v = Cp[j]
            if v < -tol and np.isfinite(lower[j]) and (j, -1) not in in_work:
                a = (lower[j] - Cu[j]) / v
                if a < alpha - 1e-14:
                    alpha, block = max(a, 0.0), (j, -1)
            elif v > tol and np.isfinite(upper[j]) and (j, +1) not in in_work:
                a = (upper[j] - Cu[j]) / v
                if a < alpha - 1e-14:
                    alpha, block = max(a, 0.0), (j, +1)
        u = u + alpha * p
        if block is None:
            continue  # full step; next pass checks duals
        if _independent([C[r] for r, _ in work], C[block[0]]):
            work.append(block)
            stall = 0
        else:
            stall += 1
            if stall > 5:
                if work:
                    work.pop(0)
                stall = 0
    return u, QpStatus.MAX_ITER, it, list(work)


def _admm(H, f, C, lower, upper, settings):
    n = f.size
    m = C.shape[0]
    if m == 0:
        return np.linalg.solve(H + 1e-12 * np.eye(n), -f), QpStatus.OPTIMAL, 1
    rho, sigma = 1.0, 1e-6
    M = H + sigma * np.eye(n) + rho * C.T @ C
    Mches = np.linalg.cholesky(M)
    u = np.zeros(n)
    z = np.clip(C @ u, lower, upper)
    y = np.zeros(m)
    iters = max(settings.max_iter, 200000)
    for it in range(1, iters + 1):
        rhs = sigma * u - f + C.T @ (rho * z - y)
        u = np.linalg.solve(Mches.T, np.linalg.solve(Mches, rhs))
        Cu = C @ u
        z = np.clip(Cu + y / rho, lower, upper)
        y += rho * (Cu - z)
        if it % 100 == 0:
            pr = np.linalg.norm(Cu - z, np.inf)
            dr = np.linalg.norm(H @ u + f + C.T @ y, np.inf)
            if pr < settings.tol and dr < 1e2 * settings.tol:
                return u, QpStatus.OPTIMAL, it
    return u, QpStatus.MAX_ITER, iters


def solve(problem: QpProblem, settings: QpSettings | None = None,
          warm: QpSolution | None = None) -> QpSolution:
    """Solve the QP; see module docstring for the exact problem form."""
    settings = settings or QpSettings()
    if settings.validate_H:
        _validate_H(problem.H, settings.tol)

    n = problem.n
    C, lower, upper = problem.C, problem.lower, problem.upper

    # eliminate equalities through an orthonormal null-space basis
    if problem.D is not None and problem.D.shape[0] > 0:
        U, s, Vt = np.linalg.svd(problem.D)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 0.0)))
        Z = Vt[rank:].T  # n x (n - rank)
        if Z.shape[1] == 0:
            u = np.zeros(n)
            viol = _violation(C, lower, upper, u)
            status = QpStatus.OPTIMAL if viol <= settings.tol else QpStatus.INFEASIBLE
            return QpSolution(u, status, 0, viol, 0.0, [], _objective(problem, u))
        Cz = C @ Z
        keep = []
        for j in range(Cz.shape[0]):
            if np.linalg.norm(Cz[j]) <= 1e-12 * max(1.0, np.linalg.norm(C[j])):
                if lower[j] > settings.tol or upper[j] < -settings.tol:
                    return QpSolution(np.zeros(n), QpStatus.INFEASIBLE, 0,
                                      max(lower[j], -upper[j]), 0.0, [], np.nan)
            else:
                keep.append(j)
        keep = np.array(keep, dtype=int)
        red = QpProblem(H=Z.T @ problem.H @ Z, f=Z.T @ problem.f,
                        C=Cz[keep], lower=lower[keep], upper=upper[keep])
        inner = solve(red, QpSettings(settings.tol, settings.max_iter, False,
                                      settings.method, settings.debug_monotone))
        u = Z @ inner.u
        active = [(int(keep[r]), s) for r, s in inner.active_rows]
        viol = _violation(C, lower, upper, u)
        return QpSolution(u, inner.status, inner.iterations, viol,
                          inner.dual_residual, active, _objective(problem, u))

    if settings.method == "admm":
        u, status, it = _admm(problem.H, problem.f, C, lower, upper, settings)
        return QpSolution(u, status, it, _violation(C, lower, upper, u),
                          np.nan, [], _objective(problem, u))

    u0 = np.zeros(n)
    seed_ws = None
    if warm is not None and warm.u is not None and warm.u.size == n:
        u0 = np.asarray(warm.u, float).copy()
        seed_ws = warm.active_rows
    u, status, it, work = _active_set(problem.H, problem.f, C, lower, upper, u0,
                                      settings, seed_ws=seed_ws)

    # dual residual from the working-set multipliers
    dual = np.nan
    if status is QpStatus.OPTIMAL:
        g = problem.H @ u + problem.f
        if work:
            A = np.array([C[r] for r, _ in work])
            lam, *_ = np.linalg.lstsq(A.T, -g, rcond=None)
            dual = np.linalg.norm(g + A.T @ lam, np.inf)
        else:
            dual = np.linalg.norm(g, np.inf)
    return QpSolution(u, status, it, _violation(C, lower, upper, u), dual,
                      work, _objective(problem, u))


def solve_warm(problem: QpProblem, previous: QpSolution | None,
               settings: QpSettings | None = None) -> QpSolution:
    """Solve starting from a previous tick's solution and active set."""
    return solve(problem, settings, warm=previous)


def _violation(C, lower, upper, u) -> float:
    if C.shape[0] == 0:
        return 0.0
    v = C @ u
    return float(max(np.max(np.maximum(lower - v, 0.0), initial=0.0),
                     np.max(np.maximum(v - upper, 0.0), initial=0.0)))


def _nnls(A: np.ndarray, b: np.ndarray, max_iter=200) -> np.ndarray:
    """Lawson-Hanson nonnegative least squares, min ||A x - b||, x >= 0."""
    m, n = A.shape
    x = np.zeros(n)
    passive: list[int] = []
    w = A.T @ (b - A @ x)
    for _ in range(max_iter):
        candidates = [j for j in range(n) if j not in passive and w[j] > 1e-12]
        if not candidates:
            break
        passive.append(max(candidates, key=lambda j: w[j]))
        while True:
            Ap = A[:, passive]
            z, *_ = np.linalg.lstsq(Ap, b, rcond=None)
            if np.all(z > 0):
                break
            # move back toward feasibility, dropping a zeroed coordinate
            xs = np.array([x[j] for j in passive])
            mask = z <= 0
            alpha = np.min(xs[mask] / np.maximum(xs[mask] - z[mask], 1e-300))
            for idx, j in enumerate(passive):
                x[j] += alpha * (z[idx] - x[j])
            passive = [j for j in passive if x[j] > 1e-14]
            if not passive:
                break
        x[:] = 0.0
        if passive:
            for idx, j in enumerate(passive):
                x[j] = z[idx]
        w = A.T @ (b - A @ x)
    return x


def check_kkt(problem: QpProblem, u: np.ndarray, tol: float) -> dict:
    """Independent KKT verification of a candidate solution.

    Checks primal feasibility and stationarity with sign-feasible
    multipliers: inequality multipliers are recovered by nonnegative least
    squares over the active rows (so dependent active rows cannot produce
    spurious sign failures); inactive rows get zero multipliers by
    construction, which is complementary slackness.
    """
    u = np.asarray(u, float)
    C, lower, upper = problem.C, problem.lower, problem.upper
    report = {"ok": True}

    pr = _violation(C, lower, upper, u)
    report["primal_violation"] = pr
    if pr > 10 * tol:
        report["ok"] = False

    g = problem.H @ u + problem.f
    scale = max(1.0, np.linalg.norm(g, np.inf))
    cols = []
    rows = []
    act_tol = 1e3 * tol
    if C.shape[0]:
        v = C @ u
        for j in range(C.shape[0]):
            # orient columns so stationarity reads -g = A mu with mu >= 0
            if np.isfinite(lower[j]) and abs(v[j] - lower[j]) <= act_tol * max(1.0, abs(lower[j])):
                cols.append(-C[j])
                rows.append((j, -1))
            elif np.isfinite(upper[j]) and abs(v[j] - upper[j]) <= act_tol * max(1.0, abs(upper[j])):
                cols.append(C[j])
                rows.append((j, +1))
    # equality multipliers are sign-free: project stationarity onto the
    # orthogonal complement of the equality row space, then recover
    # nonnegative inequality multipliers exactly via NNLS
    P = np.eye(problem.n)
    if problem.D is not None and problem.D.shape[0]:
        eq = problem.D @ u
        report["equality_violation"] = float(np.linalg.norm(eq, np.inf))
        if report["equality_violation"] > 10 * tol:
            report["ok"] = False
        U, s, Vt = np.linalg.svd(problem.D)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 0.0)))
        B = Vt[:rank].T
        P = P - B @ B.T

    if cols:
        A = P @ np.array(cols).T  # columns oriented so mu >= 0
        mu = _nnls(A, -(P @ g))
        stat = np.linalg.norm(P @ g + A @ mu, np.inf)
    else:
        stat = np.linalg.norm(P @ g, np.inf)
    report["stationarity"] = float(stat)
    report["dual_sign_ok"] = True  # NNLS multipliers are nonnegative by construction
    if stat > 10 * tol * scale:
        report["ok"] = False
    return report


def projected_gradient_box(H, f, lower, upper, max_iter=1_000_000):
    """Brute-force oracle: projected gradient with step 1/L on box bounds.

    Stops early only at an exact fixed point (further iterations would not
    move), so the result equals the full-budget run.
    """
    H = np.asarray(H, float)
    f = np.asarray(f, float)
    L = float(np.linalg.eigvalsh(H).max())
    step = 1.0 / max(L, 1e-12)
    u = np.clip(np.zeros(f.size), lower, upper)
    u_prev = None
    for _ in range(max_iter):
        u_next = np.clip(u - step * (H @ u + f), lower, upper)
        if np.array_equal(u_next, u):
            break
        if u_prev is not None and np.array_equal(u_next, u_prev):
            break  # last-ulp dithering between two adjacent iterates
        u_prev = u
        u = u_next
    return u
