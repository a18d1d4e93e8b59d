"""Bounded-variable simplex: a dual phase followed by a primal phase.

Every row gets a slack so the working system is ``[A | I] z = b`` with
``l <= z <= u``. Solves start with a bounded dual simplex (long-step ratio
test that flips boxed columns past their breakpoints) from the slack basis
or from a supplied basis; branch-and-bound children restart from the
parent's final basis this way. Whatever the dual phase leaves is finished by
the primal simplex, whose phase 1 minimizes the sum of bound violations of
the basic variables from any basis. Primal pricing is Dantzig's rule with a
switch to Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from typing import Sequence

from .instance import MilpInstance, Row, Sense
from .result import FEAS_TOL, Solution, Status

log = logging.getLogger(__name__)

BASIC, AT_LB, AT_UB, FREE = 0, 1, 2, 3

DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_RUN = 40


class SingularBasis(RuntimeError):
    pass


@dataclass
class BasisState:
    """Snapshot of a basis, reusable as a starting point."""

    basic: np.ndarray
    status: np.ndarray


class _Factor:
    """Sparse LU of a basis plus a product-form eta file."""

    def __init__(self, cols: sp.csc_matrix):
        try:
            self.lu = splu(cols, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise SingularBasis(str(exc)) from exc
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        z = self.lu.solve(v)
        for r, eta in self.etas:
            zr = z[r] / eta[r]
            z -= eta * zr
            z[r] = zr
        return z

    def btran(self, v: np.ndarray) -> np.ndarray:
        w = v.astype(float, copy=True)
        for r, eta in reversed(self.etas):
            w[r] = (w[r] - (w @ eta - w[r] * eta[r])) / eta[r]
        return self.lu.solve(w, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))


class LPEngine:
    """Reusable simplex workspace for one constraint matrix.

    Bounds may change between :meth:`solve` calls; the matrix, rhs and costs
    may not.
    """

    def __init__(self, instance: MilpInstance, *, feas_tol: float = FEAS_TOL, max_iter: int | None = None):
        self.n = instance.n_cols
        self.struct = instance.matrix.tocsr()
        self.b = instance.rhs.copy()
        self.cost = instance.cost.copy()
        self.offset = instance.obj_offset
        self.senses = list(instance.senses)
        self.struct_lb = instance.lb.copy()
        self.struct_ub = instance.ub.copy()
        self.feas_tol = feas_tol
        self._max_iter = max_iter
        self._assemble()

    def _assemble(self) -> None:
        m, n = self.struct.shape
        self.m = m
        self.A = sp.hstack([self.struct.tocsc(), sp.identity(m, format="csc")], format="csc")
        self.At = self.struct.T.tocsr()
        self.c = np.concatenate([self.cost, np.zeros(m)])
        self.slack_lb = np.zeros(m)
        self.slack_ub = np.zeros(m)
        for i, s in enumerate(self.senses):
            if s is Sense.LE:
                self.slack_ub[i] = np.inf
            elif s is Sense.GE:
                self.slack_lb[i] = -np.inf
        self.max_iter = self._max_iter or 50 * (m + n) + 1000

    def add_rows(self, rows: Sequence[Row]) -> None:
        """Append constraint rows; existing bases stay usable (new slacks enter basic)."""
        if not rows:
            return
        data, ri, ci = [], [], []
        for i, r in enumerate(rows):
            for j, a in r.coefs:
                ri.append(i)
                ci.append(j)
                data.append(a)
        extra = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), self.n))
        self.struct = sp.vstack([self.struct, extra], format="csr")
        self.b = np.concatenate([self.b, [r.rhs for r in rows]])
        self.senses.extend(r.sense for r in rows)
        self._assemble()

    def _extend(self, state: BasisState) -> BasisState:
        m_old = len(state.basic)
        if m_old == self.m:
            return BasisState(state.basic.copy(), state.status.copy())
        new = np.arange(self.n + m_old, self.n + self.m)
        status = np.concatenate([state.status, np.full(len(new), BASIC, dtype=np.int8)])
        return BasisState(np.concatenate([state.basic, new]), status)

    # -- helpers ---------------------------------------------------------

    def _box_only(self, lb: np.ndarray, ub: np.ndarray) -> Solution:
        """No rows: every column sits at its cheaper bound."""
        c = self.cost
        if np.any((c < 0) & np.isinf(ub)) or np.any((c > 0) & np.isinf(lb)):
            return Solution(Status.UNBOUNDED)
        x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))))
        obj = float(c @ x) + self.offset
        return Solution(Status.OPTIMAL, values=x, objective=obj, gap=0.0, bound=obj, duals=np.zeros(0),
                        reduced_costs=c.copy(), dual_bound=obj)

    def _column(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        v[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return v

    def _reduced_costs(self, y: np.ndarray, cost: np.ndarray | None) -> np.ndarray:
        d = np.empty(self.n + self.m)
        if cost is None:
            d[: self.n] = -(self.At @ y)
            d[self.n :] = -y
        else:
            d[: self.n] = cost[: self.n] - self.At @ y
            d[self.n :] = cost[self.n :] - y
        return d

    def _cold_start(self, lb: np.ndarray, ub: np.ndarray) -> BasisState:
        status = np.empty(self.n + self.m, dtype=np.int8)
        for j in range(self.n):
            if np.isfinite(lb[j]):
                status[j] = AT_LB
            elif np.isfinite(ub[j]):
                status[j] = AT_UB
            else:
                status[j] = FREE
        status[self.n :] = BASIC
        return BasisState(np.arange(self.n, self.n + self.m), status)

    @staticmethod
    def _nonbasic_values(status: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
        x = np.zeros(len(status))
        at_lb = status == AT_LB
        at_ub = status == AT_UB
        x[at_lb] = lb[at_lb]
        x[at_ub] = ub[at_ub]
        return x

    # -- main loop -------------------------------------------------------

    def solve(
        self,
        lb: np.ndarray | None = None,
        ub: np.ndarray | None = None,
        start: BasisState | None = None,
    ) -> tuple[Solution, BasisState | None]:
        lb_s = self.struct_lb if lb is None else lb
        ub_s = self.struct_ub if ub is None else ub
        if np.any(lb_s > ub_s + self.feas_tol):
            return Solution(Status.INFEASIBLE), None
        if self.m == 0:
            return self._box_only(lb_s, ub_s), None
        L = np.concatenate([lb_s, self.slack_lb])
        U = np.concatenate([ub_s, self.slack_ub])

        state = None
        if start is not None:
            state = self._extend(start)
            # a nonbasic column sitting at a bound that no longer exists
            bad_lb = (state.status == AT_LB) & ~np.isfinite(L)
            bad_ub = (state.status == AT_UB) & ~np.isfinite(U)
            state.status[bad_lb & np.isfinite(U)] = AT_UB
            state.status[bad_ub & np.isfinite(L)] = AT_LB
            state.status[(bad_lb | bad_ub) & ~np.isfinite(L) & ~np.isfinite(U)] = FREE
        try:
            self._dual_its = 0
            state = self._dual(L, U, state or self._cold_start(lb_s, ub_s))
            if state is None:
                return Solution(Status.INFEASIBLE, iterations=self._dual_its), None
            sol, basis = self._run(L, U, state)
            sol.iterations += self._dual_its
            return sol, basis
        except SingularBasis:
            if state is None:
                return Solution(Status.NUMERICAL, info={"reason": "singular slack basis"}), None
            log.debug("warm basis singular; restarting cold")
            try:
                return self._run(L, U, self._cold_start(lb_s, ub_s))
            except SingularBasis:
                return Solution(Status.NUMERICAL, info={"reason": "singular basis"}), None

    def _run(self, L: np.ndarray, U: np.ndarray, state: BasisState) -> tuple[Solution, BasisState | None]:
        m, n = self.m, self.n
        basic, status = state.basic, state.status
        tol = self.feas_tol
        factor = _Factor(self.A[:, basic])
        x = self._nonbasic_values(status, L, U)
        x[basic] = factor.ftran(self.b - self.A @ x)

        bland = False
        degenerate = 0
        it = 0
        final_checks = 0
        while True:
            if it >= self.max_iter:
                return Solution(Status.NUMERICAL, iterations=it, info={"reason": "iteration limit"}), None
            xb = x[basic]
            lb_b, ub_b = L[basic], U[basic]
            below = xb < lb_b - tol
            above = xb > ub_b + tol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = above.astype(float) - below.astype(float)
                y = factor.btran(cb)
                d = self._reduced_costs(y, None)
            else:
                y = factor.btran(self.c[basic])
                d = self._reduced_costs(y, self.c)
            d[basic] = 0.0

            q, direction = self._price(d, status, bland)
            if q < 0:
                if len(factor.etas) and final_checks < 3:
                    # confirm on a fresh factorization before declaring anything
                    final_checks += 1
                    factor = _Factor(self.A[:, basic])
                    x[basic] = factor.ftran(self.b - self.A @ np.where(status == BASIC, 0.0, x))
                    continue
                if phase1:
                    infeas = float(np.sum(np.maximum(lb_b - xb, 0)) + np.sum(np.maximum(xb - ub_b, 0)))
                    return Solution(Status.INFEASIBLE, iterations=it, info={"infeasibility": infeas}), None
                return self._finish(x, y, d, L, U, basic, status, it)

            alpha = factor.ftran(self._column(q))
            theta, r, leave_to = self._ratio(x, basic, alpha, direction, L, U, q, phase1, bland)
            if r == -2:
                if phase1:
                    return Solution(Status.NUMERICAL, iterations=it, info={"reason": "unbounded phase 1 ray"}), None
                return Solution(Status.UNBOUNDED, iterations=it), None

            it += 1
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False

            step = direction * theta
            x[q] += step
            x[basic] -= step * alpha
            if r == -1:
                # bound flip of the entering column
                status[q] = AT_UB if direction > 0 else AT_LB
                x[q] = U[q] if direction > 0 else L[q]
                continue

            leaving = basic[r]
            status[leaving] = leave_to
            x[leaving] = L[leaving] if leave_to == AT_LB else U[leaving]
            basic[r] = q
            status[q] = BASIC
            if len(factor.etas) >= REFACTOR_EVERY:
                factor = _Factor(self.A[:, basic])
                xn = np.where(status == BASIC, 0.0, x)
                x[basic] = factor.ftran(self.b - self.A @ xn)
            else:
                factor.update(r, alpha)
            final_checks = 0

    def _dual(self, L: np.ndarray, U: np.ndarray, state: BasisState) -> BasisState | None:
        """Dual simplex from a warm basis.

        Boxed nonbasic columns are put at the bound their reduced cost
        prefers; if some other column is dual infeasible the basis is handed
        back unchanged for the primal method. Returns the final basis, which
        the primal method then certifies, or None when the dual ratio test
        proves the bounds infeasible.
        """
        m, n = self.m, self.n
        basic, status = state.basic, state.status
        tol = self.feas_tol
        factor = _Factor(self.A[:, basic])
        d = self._reduced_costs(factor.btran(self.c[basic]), self.c)
        d[basic] = 0.0
        boxed = np.isfinite(L) & np.isfinite(U)
        nonbasic = status != BASIC
        to_ub = nonbasic & (status == AT_LB) & (d < -DUAL_TOL) & boxed
        to_lb = nonbasic & (status == AT_UB) & (d > DUAL_TOL) & boxed
        status[to_ub] = AT_UB
        status[to_lb] = AT_LB
        bad = nonbasic & (
            ((status == AT_LB) & (d < -DUAL_TOL))
            | ((status == AT_UB) & (d > DUAL_TOL))
            | ((status == FREE) & (np.abs(d) > DUAL_TOL))
        )
        if bad.any():
            return state
        x = self._nonbasic_values(status, L, U)
        x[basic] = factor.ftran(self.b - self.A @ x)

        for it in range(self.max_iter):
            self._dual_its = it
            xb = x[basic]
            viol = np.maximum(L[basic] - xb, xb - U[basic])
            r = int(np.argmax(viol))
            if viol[r] <= tol:
                return state
            p = basic[r]
            below = xb[r] < L[p]
            target = L[p] if below else U[p]
            rho = factor.btran(np.eye(1, m, r).ravel())
            alpha_r = np.concatenate([self.At @ rho, rho])
            sgn = alpha_r if below else -alpha_r
            at_lb = status == AT_LB
            at_ub = status == AT_UB
            free = status == FREE
            elig = (at_lb & (sgn < -PIVOT_TOL)) | (at_ub & (sgn > PIVOT_TOL)) | (free & (np.abs(sgn) > PIVOT_TOL))
            if not elig.any():
                if len(factor.etas):
                    factor = _Factor(self.A[:, basic])
                    x[basic] = factor.ftran(self.b - self.A @ np.where(status == BASIC, 0.0, x))
                    continue
                return None if self._unreachable(rho, alpha_r, status, L, U, p, below) else state
            # bound-flipping ratio test: walk the breakpoints in ratio order and
            # flip boxed columns while the row stays infeasible
            cand = np.flatnonzero(elig)
            a_abs = np.abs(alpha_r[cand])
            ratio = np.abs(d[cand]) / a_abs
            order = np.lexsort((-a_abs, ratio))
            slope = float(viol[r])
            span = (U - L)[cand]
            flips: list[int] = []
            q = -1
            for k in order:
                drop = a_abs[k] * span[k]
                if not np.isfinite(drop) or slope - drop <= tol:
                    q = int(cand[k])
                    break
                slope -= drop
                flips.append(int(cand[k]))
            if q < 0:
                # even with every candidate at its far bound the row stays infeasible
                return None if self._unreachable(rho, alpha_r, status, L, U, p, below) else state
            if flips:
                fl = np.array(flips)
                old = x[fl].copy()
                new_at_ub = status[fl] == AT_LB
                status[fl] = np.where(new_at_ub, AT_UB, AT_LB)
                x[fl] = np.where(new_at_ub, U[fl], L[fl])
                x[basic] -= factor.ftran(self.A[:, fl] @ (x[fl] - old))
                xb = x[basic]

            alpha_q = factor.ftran(self._column(q))
            if abs(alpha_q[r]) < PIVOT_TOL:
                return state  # numerically doubtful; let the primal method take over
            step = (xb[r] - target) / alpha_q[r]
            x[q] += step
            x[basic] -= step * alpha_q
            theta_d = d[q] / alpha_r[q]
            d -= theta_d * alpha_r
            d[q] = 0.0
            d[p] = -theta_d
            status[p] = AT_LB if below else AT_UB
            x[p] = target
            basic[r] = q
            status[q] = BASIC
            if len(factor.etas) >= REFACTOR_EVERY:
                factor = _Factor(self.A[:, basic])
                xn = np.where(status == BASIC, 0.0, x)
                x[basic] = factor.ftran(self.b - self.A @ xn)
                d = self._reduced_costs(factor.btran(self.c[basic]), self.c)
                d[basic] = 0.0
            else:
                factor.update(r, alpha_q)
        return state

    def _unreachable(self, rho, alpha_r, status, L, U, p, below) -> bool:
        """True when no point of the nonbasic box brings basic ``p`` to its bound."""
        nb = status != BASIC
        a = alpha_r[nb]
        lo, hi = L[nb], U[nb]
        with np.errstate(invalid="ignore"):
            if below:
                reach = rho @ self.b - np.sum(np.where(a < 0, a * hi, np.where(a > 0, a * lo, 0.0)))
                return bool(reach < L[p] - self.feas_tol)
            reach = rho @ self.b - np.sum(np.where(a > 0, a * hi, np.where(a < 0, a * lo, 0.0)))
            return bool(reach > U[p] + self.feas_tol)

    def _price(self, d: np.ndarray, status: np.ndarray, bland: bool) -> tuple[int, int]:
        inc = ((status == AT_LB) | (status == FREE)) & (d < -DUAL_TOL)
        dec = ((status == AT_UB) | (status == FREE)) & (d > DUAL_TOL)
        cand = inc | dec
        if not cand.any():
            return -1, 0
        if bland:
            q = int(np.flatnonzero(cand)[0])
        else:
            score = np.where(cand, np.abs(d), 0.0)
            q = int(np.argmax(score))
        return q, (1 if inc[q] else -1)

    def _ratio(self, x, basic, alpha, direction, L, U, q, phase1, bland):
        """Return (step, row, leaving status); row -1 = bound flip, -2 = unbounded."""
        tol = self.feas_tol
        rate = -direction * alpha  # d x_B / d step
        xb = x[basic]
        lb_b, ub_b = L[basic], U[basic]
        limit = np.full(len(basic), np.inf)
        target = np.zeros(len(basic), dtype=np.int8)

        dec = rate < -PIVOT_TOL
        inc = rate > PIVOT_TOL
        if phase1:
            above = xb > ub_b + tol
            below = xb < lb_b - tol
        else:
            above = below = np.zeros(len(basic), dtype=bool)

        # decreasing basics stop at ub if currently above it, else at lb
        m1 = dec & above
        limit[m1] = (xb[m1] - ub_b[m1]) / -rate[m1]
        target[m1] = AT_UB
        m2 = dec & ~above & ~below & np.isfinite(lb_b)
        limit[m2] = (xb[m2] - lb_b[m2]) / -rate[m2]
        target[m2] = AT_LB
        # increasing basics stop at lb if currently below it, else at ub
        m3 = inc & below
        limit[m3] = (lb_b[m3] - xb[m3]) / rate[m3]
        target[m3] = AT_LB
        m4 = inc & ~below & ~above & np.isfinite(ub_b)
        limit[m4] = (ub_b[m4] - xb[m4]) / rate[m4]
        target[m4] = AT_UB
        np.maximum(limit, 0.0, out=limit)

        own = U[q] - L[q] if np.isfinite(U[q]) and np.isfinite(L[q]) else np.inf
        best = float(limit.min()) if len(limit) else np.inf
        if own <= best:
            if not np.isfinite(own):
                return np.inf, -2, 0
            return own, -1, 0
        ties = np.flatnonzero(limit <= best + 1e-12)
        if bland:
            r = int(ties[np.argmin(basic[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
        return best, r, int(target[r])

    def _finish(self, x, y, d, L, U, basic, status, it) -> tuple[Solution, BasisState]:
        n = self.n
        xs = x[:n].copy()
        obj = float(self.c[:n] @ xs) + self.offset
        # Lagrangian bound from the final multipliers: b.y + sum_j min_{L<=z<=U} d_j z_j
        bound = float(self.b @ y) + self.offset
        # sub-tolerance reduced costs against an infinite bound count as zero
        d = np.where((np.abs(d) <= DUAL_TOL) & ~(np.isfinite(L) & np.isfinite(U)), 0.0, d)
        pos = d > 0
        neg = d < 0
        with np.errstate(invalid="ignore"):
            lo_terms = np.where(pos, d * L, 0.0)
            hi_terms = np.where(neg, d * U, 0.0)
        bound += float(np.sum(lo_terms) + np.sum(hi_terms))
        if not np.isfinite(bound):
            bound = -np.inf
        sol = Solution(
            Status.OPTIMAL,
            values=xs,
            objective=obj,
            gap=0.0,
            bound=obj,
            duals=y.copy(),
            reduced_costs=d[:n].copy(),
            dual_bound=bound,
            iterations=it,
        )
        return sol, BasisState(basic.copy(), status.copy())


def solve_lp(instance: MilpInstance, *, feas_tol: float = FEAS_TOL) -> Solution:
    """Solve the LP relaxation of ``instance`` (integrality ignored)."""
    sol, _ = LPEngine(instance, feas_tol=feas_tol).solve()
    sol.nodes = 1 if sol.status is Status.OPTIMAL else 0
    return sol
