import math

import numpy as np
import pytest

from levyid.core import (
    ConvSpec,
    ExpDecayKernel,
    IndicatorKernel,
    JumpLaw,
    JumpLawSpec,
    LevyFunctionalPanel,
    PanelEntry,
    PoissonSpec,
    PowerCutoffKernel,
    SatoSpec,
    TabulatedKernel,
    TemperedStableSpec,
    TimeGrid,
)
from levyid.identities import (
    companion_values,
    hidden_values,
    sample_hidden_component,
    sample_tilt_companion,
    sample_visible_component,
    tilted_ensemble,
    verify_decomposition_identity,
    verify_tilting_identity,
    visible_values,
)
from levyid.randkit import RngStream

GRID = TimeGrid((0.5, 1.0, 1.5, 2.0))
PANEL = LevyFunctionalPanel(
    (
        PanelEntry(alphas=(1.0,), times=(1.0,)),
        PanelEntry(alphas=(0.5, 0.8), times=(0.5, 2.0)),
    )
)


class TestTiltedEnsemble:
    def test_weights_mean_one(self, rng):
        ens = tilted_ensemble(rng.substream(0), PoissonSpec(rate=1.0), 1.0, GRID, 100_000)
        se = ens.weights.std() / math.sqrt(ens.weights.size)
        assert abs(ens.weights.mean() - 1.0) <= 4 * se

    def test_tilted_mean_is_second_moment_ratio(self, rng):
        # E[N w] with w = N / E N equals E N^2 / E N = 2 for Poisson(1) at t = a = 1
        ens = tilted_ensemble(rng.substream(1), PoissonSpec(rate=1.0), 1.0, GRID, 200_000)
        ia = GRID.index_of([1.0])[0]
        x = ens.values[:, ia] * ens.weights
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - 2.0) <= 4 * se

    def test_rejects_tilt_point_off_grid(self, rng):
        with pytest.raises(ValueError):
            tilted_ensemble(rng.substream(2), PoissonSpec(rate=1.0), 0.77, GRID, 100)


class TestCompanionStructure:
    def test_poisson_companion_is_unit_step(self, rng):
        # one jump of size 1 at a uniform location in [0, a]
        vals = companion_values(rng.substream(3), PoissonSpec(rate=2.0), 1.0, GRID.points, 20_000)
        assert set(np.unique(vals)) <= {0.0, 1.0}
        assert np.all(np.diff(vals, axis=1) >= 0)
        assert np.all(vals[:, GRID.index_of([1.0])[0] :] == 1.0)
        # jump location uniform on [0, a]: value at a/2 is Bernoulli(1/2)
        frac = vals[:, GRID.index_of([0.5])[0]].mean()
        assert abs(frac - 0.5) <= 4 * math.sqrt(0.25 / vals.shape[0])

    def test_ts_companion_height(self, rng):
        # single jump of Gamma(1 - alpha, 1) size; at t >= a the step is complete
        al = 0.5
        vals = companion_values(
            rng.substream(4), TemperedStableSpec(al), 1.0, GRID.points, 100_000
        )
        h = vals[:, GRID.index_of([2.0])[0]]
        se = h.std() / math.sqrt(h.size)
        assert abs(h.mean() - (1 - al)) <= 4 * se
        assert np.all(h > 0)

    def test_sato_companion_scaling(self, rng):
        spec = SatoSpec(H=1.0, bdlp=JumpLawSpec(rate=1.0, law=JumpLaw.exponential(1.0)))
        vals = companion_values(rng.substream(5), spec, 1.0, GRID.points, 50_000)
        assert np.all(np.diff(vals, axis=1) >= 0)
        h = vals[:, GRID.index_of([2.0])[0]]
        # height a^H U V with V size-biased Exp(1), so E = 1 * (1/2) * 2 = 1
        se = h.std() / math.sqrt(h.size)
        assert abs(h.mean() - 1.0) <= 4 * se

    def test_conv_companion_single_bump(self, rng):
        spec = ConvSpec(
            kernel=IndicatorKernel(length=0.75),
            z=JumpLawSpec(rate=1.0, law=JumpLaw.exponential(1.0)),
        )
        vals = companion_values(rng.substream(6), spec, 1.0, GRID.points, 20_000)
        assert np.all(vals >= 0)
        # bump location R has density f / I(a) on [0, a], so f(R) > 0 a.s.
        # and the value at the tilt point is the size-biased jump V, here
        # Gamma(2, 1) with mean 2
        at_a = vals[:, GRID.index_of([1.0])[0]]
        assert np.all(at_a > 0)
        se = at_a.std() / math.sqrt(at_a.size)
        assert abs(at_a.mean() - 2.0) <= 4 * se
        # indicator of reach 0.75: at t = 2 the argument 1 + R exceeds the
        # cutoff for every R >= 0; at t = 0.5 it lands inside iff R >= 1/2
        assert np.all(vals[:, GRID.index_of([2.0])[0]] == 0.0)
        pos = (vals[:, GRID.index_of([0.5])[0]] > 0).mean()
        want = 1.0 / 3.0
        assert abs(pos - want) <= 4 * math.sqrt(want * (1 - want) / vals.shape[0])


class TestComponentStructure:
    def test_hidden_zero_before_pin_poisson(self, rng):
        hid = hidden_values(rng.substream(7), PoissonSpec(rate=1.0), 1.0, GRID.points, 5000)
        upto = GRID.index_of([1.0])[0]
        assert np.all(hid[:, : upto + 1] == 0.0)
        assert np.any(hid[:, -1] > 0)

    def test_visible_flat_after_pin_poisson(self, rng):
        vis = visible_values(rng.substream(8), PoissonSpec(rate=1.0), 1.0, GRID.points, 5000)
        ia = GRID.index_of([1.0])[0]
        assert np.all(vis[:, ia:] == vis[:, ia][:, None])

    def test_hidden_plus_visible_nonnegative_monotone_ts(self, rng):
        hid = hidden_values(rng.substream(9), TemperedStableSpec(0.5), 1.0, GRID.points, 3000)
        vis = visible_values(rng.substream(10), TemperedStableSpec(0.5), 1.0, GRID.points, 3000)
        assert np.all(np.diff(hid + vis, axis=1) >= 0)

    def test_path_helpers(self, rng):
        spec = PoissonSpec(rate=1.0)
        for fn in (sample_tilt_companion, sample_visible_component, sample_hidden_component):
            p = fn(rng.substream(11), spec, 1.0, GRID)
            assert len(p.values) == len(GRID)


def _spec_cases():
    cases = [
        ("poisson", PoissonSpec(rate=1.0)),
        ("ts", TemperedStableSpec(alpha=0.5)),
        ("sato-h1", SatoSpec(H=1.0, bdlp=JumpLawSpec(rate=1.0, law=JumpLaw.exponential(1.0)))),
        ("sato-h05", SatoSpec(H=0.5, bdlp=JumpLawSpec(rate=2.0, law=JumpLaw.gamma(1.5, 2.0)))),
        ("conv-ind", ConvSpec(kernel=IndicatorKernel(2.0), z=JumpLawSpec(rate=1.0, law=JumpLaw.exponential(1.0)))),
        ("conv-exp", ConvSpec(kernel=ExpDecayKernel(1.0), z=JumpLawSpec(rate=1.5, law=JumpLaw.gamma(0.7, 1.0)))),
        ("conv-pow", ConvSpec(kernel=PowerCutoffKernel(power=0.5, length=3.0), z=JumpLawSpec(rate=1.0, law=JumpLaw.constant(0.8)))),
        ("conv-tab", ConvSpec(
            kernel=TabulatedKernel(knots=(0.0, 1.0, 2.0, 3.0), values=(1.0, 0.5, 0.25, 0.0)),
            z=JumpLawSpec(rate=1.0, law=JumpLaw.exponential(0.5)),
        )),
    ]
    return [(i, name, spec) for i, (name, spec) in enumerate(cases)]


@pytest.mark.parametrize("idx,name,spec", _spec_cases(), ids=[c[1] for c in _spec_cases()])
class TestVerifiersAcrossFamilies:
    def test_tilting(self, idx, name, spec):
        rep = verify_tilting_identity(
            RngStream(101, idx), spec, 1.0, GRID, PANEL, n=40_000, b=200
        )
        assert rep.overall_pass, rep.to_dict()

    def test_decomposition(self, idx, name, spec):
        rep = verify_decomposition_identity(
            RngStream(102, idx), spec, 1.0, GRID, PANEL, n=40_000, b=200
        )
        assert rep.overall_pass, rep.to_dict()


class TestReportContents:
    def test_tilting_report_fields(self):
        rep = verify_tilting_identity(
            RngStream(103), PoissonSpec(rate=1.0), 1.0, GRID, PANEL, n=10_000, b=100
        )
        assert rep.label == "tilting"
        assert rep.n == 10_000
        assert len(rep.z) == len(PANEL)
        assert np.all(np.isfinite(rep.z))

    def test_decomposition_rejects_pin_off_grid(self):
        with pytest.raises(ValueError):
            verify_decomposition_identity(
                RngStream(104), PoissonSpec(rate=1.0), 0.3, GRID, PANEL, n=100
            )

    def test_deterministic_given_stream(self):
        r1 = verify_tilting_identity(
            RngStream(105), TemperedStableSpec(0.5), 1.0, GRID, PANEL, n=5000, b=100
        )
        r2 = verify_tilting_identity(
            RngStream(105), TemperedStableSpec(0.5), 1.0, GRID, PANEL, n=5000, b=100
        )
        assert np.array_equal(r1.lhs, r2.lhs)
        assert np.array_equal(r1.z, r2.z)
