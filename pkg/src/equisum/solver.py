"""Equioscillation, minimax and maximin solvers.

The interior equation is Delta(y) = 0, where Delta is the vector of
consecutive differences of arc maxima in traversal order.  The core solver
is a damped Newton iteration on Delta with projection into the ordering
cell; problems whose kernels have kinks or lack endpoint slope blow-up are
driven through a ladder of regularized kernels (warm-started homotopy) and
finished on the exact kernels, with a coordinate-secant polish as the last
resort.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .evaluator import (
    Problem,
    ArcProfile,
    TOL_Z,
    delta,
    jacobian_delta,
    jacobian_m,
    profile,
    sum_translates,
)
from .kernels import approximant, kernel_weight
from .torus import (
    TWO_PI,
    NodeSystem,
    Permutation,
    ValidationError,
    as_node_system,
    as_permutation,
    locate,
    min_gap,
)

INF = math.inf

CONVERGED = "converged"
BOUNDARY_SUSPECTED = "boundary_suspected"
MAX_ITER = "max_iter"
JACOBIAN_SINGULAR = "jacobian_singular"

# node separation below which the iteration is assumed to be leaving the cell
COLLAPSE_TOL = 1e-9


@dataclass
class SolveOptions:
    tol_residual: float = 1e-10
    max_iter: int = 200
    tol_z: float = TOL_Z
    homotopy_levels: tuple = (4, 16, 64, 256, None)
    homotopy_kind: str = "bump"
    start: object = "equidistant"  # "equidistant" | "coarse_grid" | node angles
    seed: int = 12345
    margin_fraction: float = 1e-3  # cell projection margin, fraction of min gap
    min_step: float = 2.0 ** -30
    cond_limit: float = 1e12
    probe_h: float = 1e-4
    certificate_slack: float = 1e-9
    multistart: int = 3
    secant_sweeps: int = 80


@dataclass
class SolveReport:
    status: str
    nodes: NodeSystem
    sigma: Permutation
    residual: float
    objective: float
    profile: ArcProfile
    iterations: int
    trace: list
    seed: int
    flags: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self):
        return {
            "status": self.status,
            "nodes": list(self.nodes.values),
            "sigma": list(self.sigma.sigma),
            "residual": self.residual,
            "objective": self.objective,
            "iterations": self.iterations,
            "seed": self.seed,
            "flags": dict(self.flags),
            "profile": self.profile.to_dict(),
            "trace": list(self.trace),
        }


def equidistant_nodes(n: int, sigma) -> NodeSystem:
    """Nodes at 2*pi*k/(n+1), assigned so slot k of sigma gets the k-th angle."""
    sig = as_permutation(sigma, n)
    y = np.empty(n)
    for k in range(1, n + 1):
        y[sig.sigma[k - 1] - 1] = TWO_PI * k / (n + 1)
    return NodeSystem(tuple(y))


def _sorted_slots(ns: NodeSystem, sig: Permutation) -> np.ndarray:
    return np.asarray([ns.values[i - 1] for i in sig.sigma])


def _from_slots(v, sig: Permutation) -> NodeSystem:
    out = np.empty(len(v))
    for k, idx in enumerate(sig.sigma):
        out[idx - 1] = v[k]
    return NodeSystem(tuple(out))


def _project_cell(y_vec: np.ndarray, sig: Permutation, margin: float) -> np.ndarray:
    """Clamp a free-node vector back into the open ordering cell."""
    n = len(y_vec)
    margin = min(margin, TWO_PI / (4.0 * (n + 1)))
    v = [float(y_vec[i - 1]) for i in sig.sigma]
    lo = 0.0
    for k in range(n):
        v[k] = max(v[k], lo + margin)
        lo = v[k]
    hi = TWO_PI
    for k in reversed(range(n)):
        v[k] = min(v[k], hi - margin)
        hi = v[k]
    out = np.empty(n)
    for k, idx in enumerate(sig.sigma):
        out[idx - 1] = v[k]
    return out


def _residual(p: Problem, sig: Permutation, y_vec: np.ndarray, tol_z: float):
    ns = NodeSystem(tuple(y_vec))
    prof = profile(p, ns, sig, tol_z=tol_z)
    d = delta(p, ns, sig, prof)
    if not np.all(np.isfinite(d)):
        return INF, d, prof
    return float(np.max(np.abs(d))), d, prof


def _settled(res: float, prof: ArcProfile, opts: SolveOptions) -> bool:
    """Converged means small consecutive differences AND small total spread."""
    if res > opts.tol_residual:
        return False
    spread = prof.m_bar - prof.m_under
    return math.isfinite(spread) and spread <= 2.0 * opts.tol_residual


def _newton_stage(p, sig, y_vec, opts: SolveOptions, label, max_iter):
    """Damped Newton on Delta inside one ordering cell.

    Returns (y, status, trace, profile).  The Jacobian uses midpoint slopes
    at kinks; singular or non-finite Jacobians end the stage.
    """
    trace = []
    y = np.asarray(y_vec, dtype=float).copy()
    res, d, prof = _residual(p, sig, y, opts.tol_z)
    for it in range(max_iter):
        trace.append({"stage": label, "iter": it, "residual": res})
        if _settled(res, prof, opts):
            return y, CONVERGED, trace, prof
        if not math.isfinite(res):
            return y, BOUNDARY_SUSPECTED, trace, prof
        J = jacobian_delta(p, NodeSystem(tuple(y)), sig, prof, relaxed=True)
        if not np.all(np.isfinite(J)):
            return y, JACOBIAN_SINGULAR, trace, prof
        try:
            cond = np.linalg.cond(J)
        except np.linalg.LinAlgError:
            cond = INF
        if not math.isfinite(cond) or cond > opts.cond_limit:
            return y, JACOBIAN_SINGULAR, trace, prof
        try:
            step = np.linalg.solve(J, -d)
        except np.linalg.LinAlgError:
            return y, JACOBIAN_SINGULAR, trace, prof

        margin = opts.margin_fraction * min_gap(NodeSystem(tuple(y)))
        alpha = 1.0
        accepted = False
        while alpha >= opts.min_step:
            y_try = _project_cell(y + alpha * step, sig, margin)
            res_try, d_try, prof_try = _residual(p, sig, y_try, opts.tol_z)
            if res_try < res * (1.0 - 1e-4 * alpha):
                y, res, d, prof = y_try, res_try, d_try, prof_try
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            trace.append({"stage": label, "iter": it + 1, "residual": res, "note": "stalled"})
            return y, MAX_ITER, trace, prof
        if min_gap(NodeSystem(tuple(y))) < COLLAPSE_TOL:
            return y, BOUNDARY_SUSPECTED, trace, prof
    trace.append({"stage": label, "iter": max_iter, "residual": res})
    status = CONVERGED if _settled(res, prof, opts) else MAX_ITER
    return y, status, trace, prof


def _secant_stage(p, sig, y_vec, opts: SolveOptions, label="secant"):
    """Cyclic one-dimensional secant on the components of Delta.

    Component k of Delta is decreasing in the k-th sorted node, so each
    coordinate solve is a monotone root find; no slopes are needed, which
    makes this the fallback for kernels whose Jacobian is unusable.
    """
    trace = []
    n = p.n
    y = np.asarray(y_vec, dtype=float).copy()
    res, d, prof = _residual(p, sig, y, opts.tol_z)
    for sweep in range(opts.secant_sweeps):
        trace.append({"stage": label, "iter": sweep, "residual": res})
        if _settled(res, prof, opts):
            return y, CONVERGED, trace, prof
        if not math.isfinite(res):
            return y, BOUNDARY_SUSPECTED, trace, prof
        improved = False
        for k in range(1, n + 1):
            idx = sig.sigma[k - 1] - 1
            slots = _sorted_slots(NodeSystem(tuple(y)), sig)
            lo = 0.0 if k == 1 else slots[k - 2]
            hi = TWO_PI if k == n else slots[k]
            gap = hi - lo
            pad = 1e-3 * gap
            v0 = y[idx]
            g0 = float(d[k - 1])
            if abs(g0) <= opts.tol_residual:
                continue
            dv = min(0.1 * gap, max(1e-8, 0.01 * abs(g0)))
            v1 = np.clip(v0 + (dv if g0 > 0 else -dv), lo + pad, hi - pad)
            if v1 == v0:
                continue
            y[idx] = v1
            res1, d1, prof1 = _residual(p, sig, y, opts.tol_z)
            g1 = float(d1[k - 1])
            if g1 != g0:
                v2 = v1 - g1 * (v1 - v0) / (g1 - g0)
                v2 = float(np.clip(v2, lo + pad, hi - pad))
                y[idx] = v2
                res2, d2, prof2 = _residual(p, sig, y, opts.tol_z)
                if res2 <= min(res, res1):
                    res, d, prof = res2, d2, prof2
                    improved = True
                    continue
            if res1 < res:
                res, d, prof = res1, d1, prof1
                improved = True
            else:
                y[idx] = v0
                res, d, prof = _residual(p, sig, y, opts.tol_z)[0], d, prof
        if not improved:
            break
    status = CONVERGED if _settled(res, prof, opts) else MAX_ITER
    return y, status, trace, prof


def _coarse_grid_start(p, sig, opts: SolveOptions) -> np.ndarray:
    """Pick the interior grid configuration with the smallest residual."""
    n = p.n
    rng = np.random.default_rng(opts.seed)
    candidates = []
    if n <= 3:
        grid = np.linspace(0.0, TWO_PI, 12, endpoint=False)[1:]
        for combo in itertools.combinations(grid, n):
            candidates.append(np.asarray(combo))
    else:
        for _ in range(80):
            v = np.sort(rng.uniform(0.05, TWO_PI - 0.05, n))
            if np.min(np.diff(np.concatenate(([0.0], v, [TWO_PI])))) > 0.05:
                candidates.append(v)
    best = None
    best_res = INF
    for v in candidates:
        y = _from_slots(v, sig)
        try:
            res, _, _ = _residual(p, sig, y.array, max(opts.tol_z, 1e-9))
        except ValidationError:
            continue
        if res < best_res:
            best_res = res
            best = y.array
    if best is None:
        return equidistant_nodes(n, sig).array
    return best


def _initial_nodes(p, sig, opts: SolveOptions) -> np.ndarray:
    start = opts.start
    if isinstance(start, str):
        if start == "equidistant":
            return equidistant_nodes(p.n, sig).array
        if start == "coarse_grid":
            return _coarse_grid_start(p, sig, opts)
        raise ValidationError(f"unknown start {start!r}")
    ns = as_node_system(start)
    if ns.n != p.n:
        raise ValidationError(f"start has {ns.n} nodes, problem expects {p.n}")
    return ns.array


def _spread_nodes(y_vec, sig) -> np.ndarray:
    """Open the tightest gap a little; boundary-collapse restart heuristic."""
    n = len(y_vec)
    slots = np.concatenate(([0.0], _sorted_slots(NodeSystem(tuple(np.maximum(y_vec, 1e-15))), sig), [TWO_PI]))
    gaps = np.diff(slots)
    k = int(np.argmin(gaps))  # tight gap between slots k and k+1
    v = slots.copy()
    h = 0.05 * float(np.max(gaps))
    lo_room = (v[k] - v[k - 1]) if k >= 1 else INF
    hi_room = (v[k + 2] - v[k + 1]) if k + 2 <= n + 1 else INF
    if 1 <= k:
        v[k] = v[k] - min(h, 0.45 * lo_room)
    if k + 1 <= n:
        v[k + 1] = v[k + 1] + min(h, 0.45 * hi_room)
    return _from_slots(v[1:-1], sig).array


def solve_equioscillation(p: Problem, sigma, opts: SolveOptions | None = None) -> SolveReport:
    """Find the node system in one ordering cell where all arc maxima agree.

    Strategy: Newton on the exact kernels when their slopes are usable;
    otherwise (or on failure) a warm-started ladder of regularized problems,
    finished on the exact kernels with Newton and a secant polish.  A
    collapse of two nodes is retried from a spread-apart restart before the
    boundary_suspected verdict is final.
    """
    opts = opts or SolveOptions()
    sig = as_permutation(sigma, p.n)
    cls = p.classifications()
    all_c1 = all(c.c1 for c in cls)

    trace = []
    iterations = 0

    def finish(y_vec, status):
        ns = NodeSystem(tuple(y_vec))
        prof = profile(p, ns, sig, tol_z=opts.tol_z)
        d = delta(p, ns, sig, prof)
        res = float(np.max(np.abs(d))) if np.all(np.isfinite(d)) else INF
        interior = min_gap(ns) >= COLLAPSE_TOL
        final = CONVERGED if (_settled(res, prof, opts) and interior) else status
        if final == CONVERGED and not interior:
            final = BOUNDARY_SUSPECTED
        return SolveReport(
            status=final,
            nodes=ns,
            sigma=sig,
            residual=res,
            objective=prof.m_bar,
            profile=prof,
            iterations=iterations,
            trace=trace,
            seed=opts.seed,
        )

    def pipeline(y):
        nonlocal iterations
        # exact problem first: catches smooth problems and already-solved starts
        y, status, tr, _ = _newton_stage(p, sig, y, opts, "direct", opts.max_iter)
        trace.extend(tr)
        iterations += len(tr)
        if status in (CONVERGED, BOUNDARY_SUSPECTED):
            return y, status
        # regularized ladder, warm-started
        levels = [lv for lv in opts.homotopy_levels if lv is not None and math.isfinite(lv)]
        for level in levels:
            ap = Problem(tuple(approximant(k, level, opts.homotopy_kind) for k in p.kernels))
            y, st, tr, _ = _newton_stage(ap, sig, y, opts, f"level:{level:g}", opts.max_iter)
            trace.extend(tr)
            iterations += len(tr)
            if st == BOUNDARY_SUSPECTED:
                return y, st
        # exact endgame
        if all_c1:
            y, st, tr, _ = _newton_stage(p, sig, y, opts, "exact", opts.max_iter)
            trace.extend(tr)
            iterations += len(tr)
            if st in (CONVERGED, BOUNDARY_SUSPECTED):
                return y, st
        y, st, tr, _ = _secant_stage(p, sig, y, opts)
        trace.extend(tr)
        iterations += len(tr)
        return y, st

    y = _initial_nodes(p, sig, opts)
    y, status = pipeline(y)
    restarts = 0
    while status == BOUNDARY_SUSPECTED and restarts < 2:
        restarts += 1
        trace.append({"stage": "restart", "iter": restarts, "note": "nodes spread apart"})
        y, status = pipeline(_spread_nodes(y, sig))
    return finish(y, status)


def _mbar_closure(p, sig, y_vec, opts):
    """m_bar at y projected onto the closed cell (degenerate arcs allowed)."""
    n = len(y_vec)
    v = [float(y_vec[i - 1]) for i in sig.sigma]
    lo = 0.0
    for k in range(n):
        v[k] = min(max(v[k], lo), TWO_PI)
        lo = v[k]
    ns = _from_slots(v, sig)
    return profile(p, ns, sig, tol_z=opts.tol_z).m_bar


def minimax(p: Problem, sigma, opts: SolveOptions | None = None) -> SolveReport:
    """Equioscillation solve plus a local-minimality certificate for m_bar.

    The certificate probes the 2n single-node displacements y +/- h e_r
    (projected onto the closed cell) and requires m_bar not to drop by more
    than the slack.  On certificate failure the report is flagged and a few
    seeded restarts are tried.
    """
    opts = opts or SolveOptions()
    sig = as_permutation(sigma, p.n)
    rep = solve_equioscillation(p, sig, opts)
    cls = p.classifications()
    rep.flags["preconditions_met"] = all(c.strictly_concave for c in cls) and (
        all(c.cond_inf_prime for c in cls) or all(c.c1 for c in cls)
    )

    def certify(r: SolveReport):
        base = r.profile.m_bar
        y = r.nodes.array
        failures = []
        for ridx in range(1, p.n + 1):
            for s in (+opts.probe_h, -opts.probe_h):
                y_p = y.copy()
                y_p[ridx - 1] += s
                mb = _mbar_closure(p, sig, y_p, opts)
                if mb < base - opts.certificate_slack:
                    failures.append({"node": ridx, "shift": s, "m_bar": mb})
        return failures

    failures = certify(rep)
    rep.flags["local_min_certified"] = not failures
    if failures:
        rep.flags["certificate_failures"] = failures
        # seeded multistart: maybe a different equioscillation point exists
        rng = np.random.default_rng(opts.seed)
        best = rep
        for _ in range(opts.multistart):
            v = np.sort(rng.uniform(0.02, TWO_PI - 0.02, p.n))
            try:
                alt = solve_equioscillation(
                    p, sig, replace(opts, start=_from_slots(v, sig).values)
                )
            except ValidationError:
                continue
            if alt.converged and alt.objective < best.objective - 1e-12:
                best = alt
        if best is not rep:
            best.flags["local_min_certified"] = not certify(best)
            best.flags["multistart_improved"] = True
            return best
    return rep


@dataclass
class GlobalReport:
    best: SolveReport
    per_sigma: list
    objective: float

    def to_dict(self):
        return {
            "objective": self.objective,
            "best_sigma": list(self.best.sigma.sigma),
            "best": self.best.to_dict(),
            "per_sigma": [
                {"sigma": list(r.sigma.sigma), "status": r.status,
                 "objective": r.objective, "nodes": list(r.nodes.values)}
                for r in self.per_sigma
            ],
        }


def minimax_global(p: Problem, opts: SolveOptions | None = None,
                   max_permutations: int = 6) -> GlobalReport:
    """Sweep the ordering cells and keep the smallest certified m_bar."""
    opts = opts or SolveOptions()
    perms = list(itertools.permutations(range(1, p.n + 1)))
    if len(perms) > max_permutations:
        raise ValidationError(
            f"{len(perms)} orderings exceed the cap {max_permutations}; raise it explicitly"
        )
    reports = [minimax(p, Permutation(sig), opts) for sig in perms]
    best = min(reports, key=lambda r: (not r.converged, r.objective))
    return GlobalReport(best=best, per_sigma=reports, objective=best.objective)


def _steepest_lp(G):
    """Direction maximizing the smallest row ascent rate, inf-norm box.

    maximize s  s.t.  G a >= s,  -1 <= a <= 1.  Returns (s*, a*).
    """
    from scipy.optimize import linprog

    mrows, n = G.shape
    # variables x = (a_1..a_n, s); minimize -s
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-G, np.ones((mrows, 1))])
    b_ub = np.zeros(mrows)
    bounds = [(-1.0, 1.0)] * n + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        return 0.0, np.zeros(n)
    return float(-res.fun), np.asarray(res.x[:n])


def maximin(p: Problem, sigma, opts: SolveOptions | None = None) -> SolveReport:
    """Maximize the smallest arc maximum over one ordering cell.

    Ascends m_under along directions that raise every nearly-active arc at
    once (a small linear program); when all arcs become active the iterate
    is polished by the equioscillation solver.  The LP value doubles as the
    stationarity certificate.
    """
    opts = opts or SolveOptions()
    sig = as_permutation(sigma, p.n)
    y = _initial_nodes(p, sig, opts)
    trace = []
    status = MAX_ITER
    polish_used = False
    for it in range(opts.max_iter):
        ns = NodeSystem(tuple(y))
        prof = profile(p, ns, sig, tol_z=opts.tol_z)
        m_ind = prof.m
        m_under = prof.m_under
        spread = prof.m_bar - m_under
        trace.append({"stage": "ascent", "iter": it, "m_under": m_under, "spread": spread})

        if not math.isfinite(m_under):
            status = BOUNDARY_SUSPECTED
            break

        # near-equioscillation accelerator: jump to the equioscillation
        # point when it loses no height; stationarity still decides below
        if not polish_used and 0.0 < spread <= max(100.0 * opts.tol_residual, 1e-7):
            polish_used = True
            cand = solve_equioscillation(p, sig, replace(opts, start=ns.values))
            if cand.converged and cand.profile.m_under >= m_under - 1e-12:
                y = cand.nodes.array
                continue

        act_tol = max(10.0 * opts.tol_residual, 0.25 * spread)
        active = [j for j in range(p.n + 1) if m_ind[j] <= m_under + act_tol]
        Jm = jacobian_m(p, ns, sig, prof, relaxed=True)
        G = Jm[active, :]
        if not np.all(np.isfinite(G)):
            status = JACOBIAN_SINGULAR
            break
        s_star, a = _steepest_lp(G)
        scale = max(1.0, abs(m_under))
        if s_star <= 1e-11 * scale:
            status = CONVERGED
            break
        alpha = min(0.49 * min_gap(ns), 0.5)
        margin = opts.margin_fraction * min_gap(ns)
        accepted = False
        while alpha >= 1e-14:
            y_try = _project_cell(y + alpha * a, sig, margin)
            prof_try = profile(p, NodeSystem(tuple(y_try)), sig, tol_z=opts.tol_z)
            if prof_try.m_under > m_under + 1e-6 * alpha * s_star:
                y = y_try
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # no line-search progress at a positive LP rate: numerical floor
            status = CONVERGED if spread <= 1e-6 else MAX_ITER
            break

    ns = NodeSystem(tuple(y))
    prof = profile(p, ns, sig, tol_z=opts.tol_z)
    d = delta(p, ns, sig, prof)
    res = float(np.max(np.abs(d))) if np.all(np.isfinite(d)) else INF
    return SolveReport(
        status=status,
        nodes=ns,
        sigma=sig,
        residual=res,
        objective=prof.m_under,
        profile=prof,
        iterations=len(trace),
        trace=trace,
        seed=opts.seed,
        flags={"objective_kind": "m_under"},
    )


class NoAdmissibleDirection(RuntimeError):
    """Every box direction violates some active constraint: equioscillation."""


@dataclass
class DescentDirection:
    a: np.ndarray
    active: list
    margins: np.ndarray
    neutral: bool

    def to_dict(self):
        return {
            "a": [float(v) for v in self.a],
            "active": list(self.active),
            "margins": [float(v) for v in self.margins],
            "neutral": self.neutral,
        }


def _supporting_slopes(p: Problem, positions, t):
    """Per-kernel slopes at t summing to zero (horizontal support at a max).

    Each slope is taken inside [D+ K_j, D- K_j] at t - y_j, interpolated with
    a common parameter; at a maximizer zero lies between the one-sided sums.
    """
    dplus = np.asarray([k.deriv(t - positions[j], "right") for j, k in enumerate(p.kernels)])
    dminus = np.asarray([k.deriv(t - positions[j], "left") for j, k in enumerate(p.kernels)])
    if not (np.all(np.isfinite(dplus)) and np.all(np.isfinite(dminus))):
        raise ValidationError("supporting slopes unavailable: t collides with a singular node")
    lo = float(np.sum(dplus))
    hi = float(np.sum(dminus))
    if lo > 1e-9 or hi < -1e-9:
        raise ValidationError(f"not a maximizer: slope interval [{lo}, {hi}] misses 0")
    lam = 0.0 if hi == lo else np.clip(-lo / (hi - lo), 0.0, 1.0)
    return dplus + lam * (dminus - dplus)


def descent_direction(
    p: Problem,
    y,
    sigma=None,
    active=None,
    frozen=None,
    opts: SolveOptions | None = None,
    tol_active: float = 1e-9,
) -> DescentDirection:
    """A box direction that does not raise any active arc maximum.

    Active arcs default to those attaining m_bar.  The direction a (with
    a_0 = 0 for the fixed node) satisfies sum_j a_j mu_ij >= 0 for each
    active maximizer t_i, plus any frozen linear constraints; moving the
    nodes to y + h a for small h > 0 then strictly lowers every active
    maximum.  Raises NoAdmissibleDirection at an equioscillation point
    with no slack.
    """
    opts = opts or SolveOptions()
    ns = as_node_system(y)
    if sigma is None:
        loc = locate(ns)
        if loc.kind != "interior":
            raise ValidationError("ambiguous ordering on a cell face: pass sigma")
        sig = loc.sigma
    else:
        sig = as_permutation(sigma, ns.n)
    prof = profile(p, ns, sig, tol_z=opts.tol_z)
    m_ind = prof.m
    if active is None:
        active = [j for j in range(p.n + 1) if m_ind[j] >= prof.m_bar - tol_active]
    active = sorted(int(j) for j in active)
    # the construction needs k <= n active arcs; full activity is an
    # equioscillation point and no direction can lower every maximum
    if len(active) == p.n + 1:
        raise NoAdmissibleDirection(
            "all arcs are active: the point equioscillates, descent is blocked"
        )
    onb = prof.z_on_boundary
    for j in active:
        if onb[j]:
            raise ValidationError(
                f"active maximizer of arc {j} sits on a node; no supporting slopes there"
            )
    positions = ns.full_positions()
    z_ind = prof.z
    M = np.empty((len(active), p.n))
    for i, j in enumerate(active):
        mu = _supporting_slopes(p, positions, float(z_ind[j]))
        M[i, :] = mu[1:]

    F = None
    if frozen is not None:
        F = np.atleast_2d(np.asarray(frozen, dtype=float))
        if F.shape[1] != p.n:
            raise ValidationError("frozen constraint rows must have length n")

    from scipy.optimize import linprog

    c = -np.sum(M, axis=0)
    A_ub = -M
    b_ub = np.zeros(M.shape[0])
    bounds = [(-1.0, 1.0)] * p.n
    kwargs = {}
    if F is not None:
        kwargs = {"A_eq": F, "b_eq": np.zeros(F.shape[0])}
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs", **kwargs)
    if res.success and -res.fun > 1e-11:
        a = np.asarray(res.x)
        a = a / np.max(np.abs(a))
        return DescentDirection(a=a, active=active, margins=M @ a, neutral=False)

    # no direction with positive total slack: look for a neutral one
    rows = [M, -M]
    if F is not None:
        rows += [F, -F]
    A = np.vstack(rows)
    _, s, vt = np.linalg.svd(A)
    null_mask = np.concatenate([s, np.zeros(vt.shape[0] - len(s))]) <= 1e-10
    if np.any(null_mask):
        a = vt[null_mask][0]
        a = a / np.max(np.abs(a))
        return DescentDirection(a=a, active=active, margins=M @ a, neutral=True)
    raise NoAdmissibleDirection(
        "no nonzero direction keeps all active maxima non-increasing"
    )


def pull_apart(p: Problem, y, j: int, k: int, h: float) -> NodeSystem:
    """Spread two nodes apart with weight-reciprocal speeds.

    Node j (the lower) moves down by h / r_j, node k (the upper) moves up by
    h / r_k, where r is the kernel weight.  Valid while the moved nodes stay
    inside (0, 2*pi); the sum of the two weighted kernels strictly drops
    outside the straddled region.
    """
    ns = as_node_system(y)
    if not (1 <= j <= ns.n and 1 <= k <= ns.n and j != k):
        raise ValidationError(f"node indices out of range: j={j}, k={k}")
    yj = ns.values[j - 1]
    yk = ns.values[k - 1]
    if yj > yk:
        raise ValidationError(f"pull_apart needs y_j <= y_k, got {yj} > {yk}")
    if not (h > 0):
        raise ValidationError("h must be positive")
    b = 1.0 / kernel_weight(p.kernels[j])
    a = 1.0 / kernel_weight(p.kernels[k])
    if yj - b * h <= 0:
        raise ValidationError(f"step too large: node {j} would leave (0, 2*pi)")
    if yk + a * h >= TWO_PI:
        raise ValidationError(f"step too large: node {k} would leave (0, 2*pi)")
    vals = list(ns.values)
    vals[j - 1] = yj - b * h
    vals[k - 1] = yk + a * h
    return NodeSystem(tuple(vals))
