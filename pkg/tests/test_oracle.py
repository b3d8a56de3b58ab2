import math

import numpy as np
import pytest

from equisum.evaluator import Problem, profile
from equisum.kernels import log_sine, parabola, tent, weighted
from equisum.oracle import (
    check_majorization,
    check_mmatrix,
    check_sandwich,
    convergence_probe,
    grid_minimax,
    grid_profile,
    grid_sup,
    interval_gap_minimax,
)
from equisum.torus import Permutation, ValidationError

PI = math.pi
SQRT2 = math.sqrt(2.0)

EX_KERNELS = (tent(), tent(), weighted(parabola(), 0.1), weighted(parabola(), 0.1))
EX_P = Problem(EX_KERNELS)
E_POINT = (PI, PI / 2, 3 * PI / 2)
E_SIGMA = Permutation((2, 1, 3))
E_VALUE = PI + 0.15 * PI**2

# sup of F over the whole circle at the cell-boundary configuration of the
# running example: y = (pi + (3-2*sqrt2)*eps*pi^2, (2*sqrt2-2)*pi, 0), eps=0.1
STEP2_POINT = (PI + (3 - 2 * SQRT2) * 0.1 * PI**2, (2 * SQRT2 - 2) * PI, 0.0)
STEP2_SUP = PI + 0.1 * PI**2 * (6 * SQRT2 - 7)

LOGSINE_3 = Problem((log_sine(), log_sine(), log_sine()))
EQ_2 = (2 * PI / 3, 4 * PI / 3)


def test_grid_sup_matches_equioscillation_value():
    v = grid_sup(EX_P, E_POINT, 4096)
    assert math.isclose(v, E_VALUE, abs_tol=1e-12)


def test_grid_sup_boundary_configuration_closed_form():
    # the sup sits off the raw grid here; per-arc refinement must find it
    raw = grid_sup(EX_P, STEP2_POINT, 4096, refine=False)
    v = grid_sup(EX_P, STEP2_POINT, 4096)
    assert raw <= v
    assert math.isclose(v, STEP2_SUP, abs_tol=1e-9)


def test_grid_sup_equidistant_log_sine():
    # n+1 unit log-sine kernels at equidistant nodes: sup F = -n log 2
    for n in (2, 3, 4):
        p = Problem(tuple(log_sine() for _ in range(n + 1)))
        y = [2 * PI * k / (n + 1) for k in range(1, n + 1)]
        v = grid_sup(p, y, 8192)
        assert math.isclose(v, -n * math.log(2.0), abs_tol=1e-9)


def test_grid_sup_resolution_contract():
    with pytest.raises(ValidationError):
        grid_sup(EX_P, E_POINT, 30)  # below 10 * (n + 1)


def test_grid_profile_traversal_order():
    labels, z, m = grid_profile(EX_P, E_POINT, E_SIGMA)
    assert labels == (0, 2, 1, 3)
    assert np.allclose(m, E_VALUE, atol=1e-9)
    assert np.allclose(z, [0.0, PI, PI, 2 * PI], atol=1e-6)


def test_grid_profile_log_sine_midpoints():
    labels, z, m = grid_profile(LOGSINE_3, EQ_2, (1, 2))
    assert labels == (0, 1, 2)
    assert np.allclose(m, -2 * math.log(2.0), atol=1e-9)
    assert np.allclose(z, [PI / 3, PI, 5 * PI / 3], atol=1e-6)


def test_grid_profile_rejects_incompatible_sigma():
    with pytest.raises(ValidationError):
        grid_profile(EX_P, E_POINT, (1, 2, 3))  # e lies in the (2,1,3) cell


def test_grid_profile_agrees_with_evaluator():
    """Independent arc maxima agree with the analytic profile on a
    generic interior configuration."""
    y = (2.3, 1.1, 4.9)
    prof = profile(EX_P, y, (2, 1, 3))
    _, _, m = grid_profile(EX_P, y, (2, 1, 3), resolution=2048)
    assert np.allclose(m, prof.m_trav, atol=1e-8)


def test_grid_minimax_log_sine_pair():
    gm = grid_minimax(LOGSINE_3, (1, 2), node_resolution=40)
    assert math.isclose(gm.value, -2 * math.log(2.0), abs_tol=5e-7)
    assert np.allclose(gm.nodes.values, EQ_2, atol=1e-5)
    assert gm.value <= gm.coarse_value + 1e-12
    assert gm.tolerance <= 1e-3


def test_grid_minimax_single_node():
    p = Problem((log_sine(), log_sine()))
    gm = grid_minimax(p, (1,), node_resolution=24)
    assert math.isclose(gm.value, -math.log(2.0), abs_tol=1e-9)
    assert math.isclose(gm.nodes.values[0], PI, abs_tol=1e-6)
    # tuple protocol and serialization
    value, nodes = gm
    assert value == gm.value and nodes is gm.nodes
    d = gm.to_dict()
    assert set(d) == {"value", "nodes", "coarse_value", "coarse_nodes",
                      "tolerance", "node_resolution"}


def test_grid_minimax_validates():
    with pytest.raises(ValidationError):
        grid_minimax(Problem(tuple(tent() for _ in range(5))), (1, 2, 3, 4))
    with pytest.raises(ValidationError):
        grid_minimax(LOGSINE_3, (1, 2), node_resolution=2)


def test_sandwich_clean_on_smooth_problem():
    rep = check_sandwich(LOGSINE_3, (1, 2), m_estimate=-2 * math.log(2.0),
                         samples=50)
    assert rep.ok
    assert rep.violations == []
    assert rep.samples == 50


def test_sandwich_self_estimate_widens_tol():
    # without an m_estimate the check grounds M on grid_minimax; its grid
    # tolerance must absorb the estimate error, or the true optimum itself
    # gets flagged (the equidistant point sits exactly at M here)
    rep = check_sandwich(LOGSINE_3, (1, 2), samples=20)
    assert rep.ok
    assert rep.violations == []
    assert rep.tol >= 1e-4


def test_sandwich_witness_at_example_point():
    """The running example's equioscillation point has its minimal arc max
    strictly above the cell minimax value: a sandwich violation."""
    rep = check_sandwich(EX_P, E_SIGMA, m_estimate=STEP2_SUP, samples=10,
                         include=[E_POINT])
    assert not rep.ok
    kinds = {v["kind"] for v in rep.violations}
    assert kinds == {"min_arc_max_above_M"}
    witness = [v for v in rep.violations if v["point"] == "include[0]"]
    assert witness
    assert math.isclose(witness[0]["margin"], E_VALUE - STEP2_SUP, abs_tol=1e-6)


def test_majorization_classification():
    assert check_majorization([1.0, 2.0], [0.5, 1.5]) == "strict"
    assert check_majorization([1.0, 1.0], [1.0, 0.5]) == "weak"
    assert check_majorization([1.0, 0.0], [0.0, 1.0]) == "none"
    prof = profile(EX_P, E_POINT, E_SIGMA)
    assert check_majorization(prof, prof) == "weak"
    with pytest.raises(ValidationError):
        check_majorization([1.0, 2.0], [1.0, 2.0, 3.0])


def test_mmatrix_hand_cases():
    ok = check_mmatrix([[-2.0, 1.0], [1.0, -2.0]])
    assert ok and ok.diag_ok and ok.offdiag_ok and ok.colsum_ok
    assert ok.failures == []
    bad = check_mmatrix([[-1.0, -1.0], [1.0, -1.0]])
    assert not bad
    assert not bad.offdiag_ok
    assert any("entry" in f for f in bad.failures)
    with pytest.raises(ValidationError):
        check_mmatrix([[1.0, 2.0, 3.0]])


def test_mmatrix_colsum_failure():
    # diagonally sound but a column sums to zero
    rep = check_mmatrix([[-1.0, 1.0], [1.0, -1.0]])
    assert rep.diag_ok and rep.offdiag_ok and not rep.colsum_ok
    assert any("column" in f for f in rep.failures)


def test_convergence_probe_decreasing_and_bounded():
    tab = convergence_probe(EX_P, E_POINT)
    assert tab.kind == "sqrt_cusp"
    assert tab.decreasing
    devs = tab.deviations()
    assert len(devs) == 4
    n = len(E_POINT)
    for row in tab.rows:
        assert row.deviation <= (n + 1) / row.level + 1e-7
    assert devs[-1] < 1e-9
    d = tab.to_dict()
    assert d["decreasing"] and len(d["rows"]) == 4


def test_interval_gap_chebyshev():
    norm, (x1, x2) = interval_gap_minimax(-1.0, 1.0, (1, 1))
    assert math.isclose(norm, 0.5, abs_tol=1e-9)
    assert math.isclose(x1, -1 / SQRT2, abs_tol=1e-6)
    assert math.isclose(x2, 1 / SQRT2, abs_tol=1e-6)


def test_interval_gap_translation_invariance():
    norm, (x1, x2) = interval_gap_minimax(0.0, 2.0, (1, 1))
    assert math.isclose(norm, 0.5, abs_tol=1e-9)
    assert math.isclose(x1, 1 - 1 / SQRT2, abs_tol=1e-6)
    assert math.isclose(x2, 1 + 1 / SQRT2, abs_tol=1e-6)


def test_interval_gap_unequal_exponents():
    norm, (x1, x2) = interval_gap_minimax(-1.0, 1.0, (1, 2))
    xs = np.linspace(-1.0, 1.0, 400001)
    dense = float(np.max(np.abs(xs - x1) * np.abs(xs - x2) ** 2))
    assert math.isclose(dense, norm, rel_tol=1e-9)
    # nearby node pairs never do better
    for d1, d2 in ((0.01, 0.0), (-0.01, 0.0), (0.0, 0.01), (0.0, -0.01),
                   (0.007, -0.007)):
        y1, y2 = x1 + d1, x2 + d2
        sup = float(np.max(np.abs(xs - y1) * np.abs(xs - y2) ** 2))
        assert sup >= norm - 1e-6


def test_interval_gap_validates():
    with pytest.raises(ValidationError):
        interval_gap_minimax(-1.0, 1.0, (1, 1, 1))
    with pytest.raises(ValidationError):
        interval_gap_minimax(1.0, -1.0, (1, 1))
    with pytest.raises(ValidationError):
        interval_gap_minimax(-1.0, 1.0, (1, -1))
