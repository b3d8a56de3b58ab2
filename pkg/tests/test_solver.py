import math

import numpy as np
import pytest

from equisum.evaluator import Problem, profile, jacobian_delta
from equisum.kernels import approximant, log_sine, parabola, tent, weighted
from equisum.oracle import check_mmatrix, grid_minimax
from equisum.solver import (
    CONVERGED,
    NoAdmissibleDirection,
    SolveOptions,
    descent_direction,
    equidistant_nodes,
    maximin,
    minimax,
    minimax_global,
    pull_apart,
    solve_equioscillation,
)
from equisum.torus import TWO_PI, Permutation, ValidationError, node_dist

PI = math.pi

EX_KERNELS = (tent(), tent(), weighted(parabola(), 0.1), weighted(parabola(), 0.1))
EX_P = Problem(EX_KERNELS)
E_POINT = (PI, PI / 2, 3 * PI / 2)
E_SIGMA = Permutation((2, 1, 3))
E_VALUE = PI + 0.15 * PI**2


def unit_problem(count):
    return Problem(tuple(log_sine() for _ in range(count)))


def test_equidistant_nodes_respects_sigma():
    ns = equidistant_nodes(3, E_SIGMA)
    # slot order 2,1,3 at angles pi/2, pi, 3pi/2
    assert np.allclose(ns.values, E_POINT)


def test_solve_example_from_equidistant():
    rep = solve_equioscillation(EX_P, E_SIGMA)
    assert rep.status == CONVERGED
    assert node_dist(rep.nodes, E_POINT) < 1e-7
    assert math.isclose(rep.objective, E_VALUE, abs_tol=1e-9)
    assert rep.residual <= 1e-10


def test_solve_example_perturbed_starts():
    # the tent mix has a quadratically-flat direction at the solution, so
    # node accuracy is capped near sqrt(residual) along it
    rng = np.random.default_rng(2024)
    for _ in range(5):
        start = np.asarray(E_POINT) + rng.uniform(-0.2, 0.2, size=3)
        opts = SolveOptions(start=tuple(start))
        rep = solve_equioscillation(EX_P, E_SIGMA, opts)
        assert rep.status == CONVERGED
        assert node_dist(rep.nodes, E_POINT) < 1e-4
        assert math.isclose(rep.objective, E_VALUE, abs_tol=1e-9)


def test_solve_log_sine_perturbed_starts():
    p = unit_problem(4)
    sig = Permutation((1, 2, 3))
    target = equidistant_nodes(3, sig)
    rng = np.random.default_rng(77)
    for _ in range(5):
        start = target.array + rng.uniform(-0.3, 0.3, size=3)
        rep = solve_equioscillation(p, sig, SolveOptions(start=tuple(start)))
        assert rep.status == CONVERGED
        assert node_dist(rep.nodes, target) < 1e-7
        assert math.isclose(rep.objective, -3 * math.log(2.0), abs_tol=1e-10)


def test_solution_jacobian_is_m_matrix():
    p = unit_problem(4)
    sig = Permutation((1, 2, 3))
    rep = solve_equioscillation(p, sig)
    J = jacobian_delta(p, rep.nodes, sig)
    assert check_mmatrix(J).ok


def test_report_to_dict_round_trip():
    rep = solve_equioscillation(EX_P, E_SIGMA)
    d = rep.to_dict()
    for key in ("status", "nodes", "sigma", "residual", "objective",
                "iterations", "flags"):
        assert key in d
    assert d["sigma"] == [2, 1, 3]


def test_solver_is_deterministic():
    opts = SolveOptions(seed=5)
    a = solve_equioscillation(EX_P, E_SIGMA, opts)
    b = solve_equioscillation(EX_P, E_SIGMA, opts)
    assert a.nodes.values == b.nodes.values
    assert a.trace == b.trace


def test_solve_flat_cell_is_honest():
    """sigma=(3,2,1) has its equalizer on the cell boundary; the solver must
    not claim an interior equioscillation point there."""
    opts = SolveOptions(max_iter=40, homotopy_levels=(), secant_sweeps=20)
    rep = solve_equioscillation(EX_P, Permutation((3, 2, 1)), opts)
    assert rep.status != CONVERGED
    assert math.isfinite(rep.residual)


def test_minimax_smooth_certifies():
    p = unit_problem(3)
    sig = Permutation((1, 2))
    rep = minimax(p, sig)
    assert rep.status == CONVERGED
    assert rep.flags["preconditions_met"]
    assert rep.flags["local_min_certified"]
    assert math.isclose(rep.objective, -2 * math.log(2.0), abs_tol=1e-10)
    target = equidistant_nodes(2, sig)
    assert node_dist(rep.nodes, target) < 1e-8


def test_minimax_preconditions_flag_for_tent_mix():
    rep = minimax(EX_P, E_SIGMA)
    assert not rep.flags["preconditions_met"]
    # e is a genuine local minimum inside this cell
    assert rep.flags["local_min_certified"]


def test_minimax_equals_maximin_smooth():
    for count in (3, 4):
        p = unit_problem(count)
        sig = Permutation.identity(count - 1)
        lo = maximin(p, sig)
        hi = minimax(p, sig)
        assert lo.status == CONVERGED
        assert hi.status == CONVERGED
        assert math.isclose(lo.objective, hi.objective, abs_tol=1e-8)


def test_maximin_from_bad_start():
    p = unit_problem(3)
    sig = Permutation((1, 2))
    opts = SolveOptions(start=(0.4, 5.9))
    rep = maximin(p, sig, opts)
    assert rep.status == CONVERGED
    assert math.isclose(rep.objective, -2 * math.log(2.0), abs_tol=1e-8)
    assert rep.flags["objective_kind"] == "m_under"


def test_maximin_example_exceeds_minimax():
    """In the Example's cell the maximin value sits strictly above the
    minimax value; the equioscillation value lower-bounds the former."""
    rep = maximin(EX_P, E_SIGMA)
    assert rep.objective >= E_VALUE - 1e-9
    gm = grid_minimax(EX_P, E_SIGMA, node_resolution=60)
    assert gm.value < rep.objective


def test_minimax_global_sweeps_cells():
    p = unit_problem(3)
    glob = minimax_global(p)
    assert len(glob.per_sigma) == 2
    assert math.isclose(glob.objective, -2 * math.log(2.0), abs_tol=1e-10)
    assert glob.best.converged


def test_minimax_global_cap():
    p = unit_problem(6)
    with pytest.raises(ValidationError):
        minimax_global(p, max_permutations=10)


def test_descent_direction_strictly_improves():
    p = unit_problem(3)
    y = np.array([1.7, 4.9])  # away from the optimum
    sig = Permutation((1, 2))
    d = descent_direction(p, y, sig)
    assert not d.neutral
    base = profile(p, y, sig).m_bar
    step = 1e-4
    moved = profile(p, y + step * d.a, sig).m_bar
    assert moved < base - 1e-9


def test_descent_direction_infeasible_at_equioscillation():
    with pytest.raises(NoAdmissibleDirection):
        descent_direction(EX_P, E_POINT, E_SIGMA)


def test_descent_direction_respects_frozen():
    p = unit_problem(4)
    y = np.array([1.2, 2.9, 4.8])
    sig = Permutation((1, 2, 3))
    d = descent_direction(p, y, sig, frozen=[[0.0, 1.0, 0.0]])
    assert abs(d.a[1]) <= 1e-12


def test_pull_apart_increases_gap():
    p = unit_problem(3)
    y = np.array([2.0, 2.05])
    out = pull_apart(p, y, 1, 2, 0.1)
    assert out.values[1] - out.values[0] > 0.05
    with pytest.raises(ValidationError):
        pull_apart(p, y, 1, 1, 0.1)
    with pytest.raises(ValidationError):
        pull_apart(p, y, 0, 2, 0.1)  # the anchor never moves


def test_smoothed_example_solver_matches_grid():
    """Bump-smoothed Example, sigma=(2,1,3): interior minimax from the solver
    agrees with the brute-force oracle at grid accuracy."""
    level = 50
    p = Problem(tuple(approximant(k, level, "bump") for k in EX_KERNELS))
    rep = minimax(p, E_SIGMA)
    assert rep.status == CONVERGED
    gm = grid_minimax(p, E_SIGMA, node_resolution=40)
    assert rep.objective <= gm.value + 1e-9
    assert math.isclose(rep.objective, gm.value, abs_tol=1e-4)
