import numpy as np
import pytest

from deconviv import condist, estimators, oracle
from deconviv.errors import AllPointsTrimmed, DegenerateDenominator
from deconviv.estimators import RhoEstimate, WeightSpec

SPEC = WeightSpec(0.25, 0.35, 0.70, 0.90)


def test_reassembly(ctx500):
    est = estimators.structural_derivative(0.0, 0.0, 0.7, ctx500)
    assert RhoEstimate.assemble(est.components) == pytest.approx(est.value, abs=1e-12)
    assert est.wstar_used == 0.7


def test_representation_equivalence(ctx500):
    for y in (-0.2, 0.0, 0.15):
        rho = estimators.structural_derivative(y, 0.0, 0.7, ctx500).value
        delta = condist.cond_cdf_y(y, 0.0, 0.7, ctx500).F
        dqx, dqw = condist.quantile_derivs_at(y, delta, 0.0, 0.7, ctx500)
        m = condist.marginal_cdf_x(0.0, 0.7, ctx500)
        assert dqx - dqw * m.dF_dx / m.dF_dw == pytest.approx(rho, abs=1e-6)


def test_linear_design_invariance(ctx10k):
    vals = [estimators.structural_derivative(*p, ctx10k).value
            for p in [(0.0, 0.0, 0.7), (0.2, 0.3, 0.5), (-0.2, -0.3, 0.9)]]
    assert max(vals) - min(vals) < 0.1


def test_averaged_single_point(ctx500):
    one = estimators.structural_derivative_averaged(0.0, 0.0, [0.7], ctx500)
    assert one.value == estimators.structural_derivative(0.0, 0.0, 0.7, ctx500).value
    assert one.dropped == 0


def test_averaged_linear_design(ctx10k):
    avg = estimators.structural_derivative_averaged(0.0, 0.0, [0.5, 0.7, 0.9], ctx10k)
    assert avg.value == pytest.approx(0.25, abs=0.05)


def test_averaged_drops_trimmed_points(ctx500):
    avg = estimators.structural_derivative_averaged(0.0, 0.0, [0.5, 0.9, 50.0], ctx500)
    assert avg.dropped == 1
    assert avg.used == (0.5, 0.9)
    both = [estimators.structural_derivative(0.0, 0.0, w, ctx500).value for w in (0.5, 0.9)]
    assert avg.value == pytest.approx(np.mean(both), abs=1e-15)


def test_all_points_trimmed(ctx500):
    with pytest.raises(AllPointsTrimmed):
        estimators.structural_derivative_averaged(0.0, 0.0, [50.0, 80.0], ctx500)


def test_trimmed_point_raises(ctx500):
    with pytest.raises(DegenerateDenominator):
        estimators.structural_derivative(0.0, 0.0, 50.0, ctx500)


def test_wlar_grid_refinement(ctx500):
    a = estimators.wlar(0.0, SPEC, ctx500)
    b = estimators.wlar(0.0, WeightSpec(0.25, 0.35, 0.70, 0.90, 21, 21), ctx500)
    assert abs(a - b) < 1e-3


def test_wlar_degenerate_band_collapses(ctx500):
    spec = WeightSpec(0.3, 0.3 + 1e-6, 0.70, 0.90, 2, 11)
    ws = spec.wstars
    tw = np.full(11, 0.02)
    tw[[0, -1]] = 0.01
    dens = np.array([condist.joint_density_xw(0.0, w, ctx500) for w in ws])
    integrand = np.array([estimators.wlar_integrand(0.3, 0.0, w, ctx500) for w in ws])
    expected = (tw * dens * integrand).sum() / (tw * dens).sum()
    assert estimators.wlar(0.0, spec, ctx500) == pytest.approx(expected, abs=1e-3)


def test_wlar_linear_design_large_sample(ctx10k):
    assert estimators.wlar(0.0, SPEC, ctx10k) == pytest.approx(0.25, abs=0.1)


def test_wlar_trimmed_window(ctx500):
    with pytest.raises(DegenerateDenominator):
        estimators.wlar(0.0, WeightSpec(0.25, 0.35, 60.0, 61.0), ctx500)


@pytest.mark.parametrize("args", [(0.4, 0.3, 0, 1), (0.1, 0.2, 1, 0), (0.0, 0.2, 0, 1),
                                  (0.1, 0.2, 0, 1, 1, 5)])
def test_weight_spec_validation(args):
    with pytest.raises(ValueError):
        WeightSpec(*args)


def test_oracle_inputs_reproduce_truth():
    for p in oracle.validation_grid(3):
        assert RhoEstimate.assemble(oracle.exact_functionals(*p)) == pytest.approx(0.25, abs=1e-10)
