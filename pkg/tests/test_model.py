import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfit.errors import GridOutOfRange, InvalidSpectrum
from nsfit.model import (
    PARAM_NAMES_FIVE,
    PARAM_NAMES_FOUR,
    EdgeParams,
    GaussianBand,
    ModelParams,
    ReferenceOrigin,
    ReferenceSpectrum,
    builtin_reference,
    components,
    eval_gaussian,
    eval_model,
    eval_ramp,
    jacobian,
)
from nsfit.spectrum import Convention, Quantity, Spectrum
from nsfit.synth import SynthSpec, generate_absorption, random_truth

from oracles import brute_force_model, central_difference_jacobian, max_column_rel_error


def zero_params(five=True, ref_weight=0.0):
    band = GaussianBand(0.0, 300.0, 20.0)
    return ModelParams(band, band, band if five else None, 0.0, ref_weight)


class TestGaussian:
    def test_peak_equals_amplitude(self):
        assert eval_gaussian(GaussianBand(5.9, 270.0, 20.0), 270.0) == 5.9

    def test_one_width_from_centre(self):
        value = eval_gaussian(GaussianBand(1.0, 270.0, 20.0), 290.0)
        assert value == pytest.approx(math.exp(-0.5), rel=1e-15)
        assert value == pytest.approx(0.6065, abs=5e-5)

    def test_zero_amplitude(self):
        assert np.all(eval_gaussian(GaussianBand(0.0, 270.0, 20.0), np.linspace(200, 800, 11)) == 0)

    def test_invalid_band(self):
        with pytest.raises(ValueError):
            GaussianBand(-1.0, 270.0, 20.0)
        with pytest.raises(ValueError):
            GaussianBand(1.0, 270.0, 0.0)


class TestRamp:
    def test_values(self):
        assert eval_ramp(8e6, 200.0) == 1.0
        assert eval_ramp(8e6, 400.0) == 0.125
        assert eval_ramp(0.0, 321.0) == 0.0

    def test_decreasing(self):
        v = eval_ramp(3e7, np.linspace(190, 1000, 200))
        assert np.all(np.diff(v) < 0)


class TestModelParams:
    def test_vector_round_trip(self, rng):
        p = random_truth(rng)
        assert ModelParams.from_vector(p.to_vector()) == p
        assert p.names == PARAM_NAMES_FIVE
        assert p.four_component().names == PARAM_NAMES_FOUR

    def test_dict_round_trip(self, rng):
        p = random_truth(rng, five_component=False)
        assert ModelParams.from_dict(p.as_dict()) == p

    def test_negative_ramp_rejected(self):
        with pytest.raises(ValueError):
            ModelParams(GaussianBand(1, 270, 20), GaussianBand(1, 360, 40), None, -1.0, 0.0)


class TestReference:
    def test_builtin_shape(self):
        ref = builtin_reference()
        assert ref.origin is ReferenceOrigin.BUILT_IN_PARAMETRIC
        v = ref.on_grid([200.0, 230.0, 500.0])
        assert v[0] == pytest.approx(20.0, rel=1e-4)
        assert v[1] == pytest.approx(10.0, rel=1e-12)
        assert v[2] < 1e-30

    def test_builtin_natural_is_scaled(self):
        dec = builtin_reference().on_grid([225.0, 231.0])
        nat = builtin_reference(convention=Convention.NATURAL).on_grid([225.0, 231.0])
        np.testing.assert_allclose(nat, dec * math.log(10), rtol=1e-14)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("NSFIT_BUILTIN_REF_PARAMS", "240,5,2,0.1")
        assert EdgeParams.from_env() == EdgeParams(240.0, 5.0, 2.0, 0.1)
        ref = builtin_reference()
        assert ref.on_grid([240.0])[0] == pytest.approx(1.1)
        assert ref.on_grid([800.0])[0] == pytest.approx(0.1)

    def test_env_override_malformed(self, monkeypatch):
        monkeypatch.setenv("NSFIT_BUILTIN_REF_PARAMS", "240,5")
        with pytest.raises(ValueError):
            EdgeParams.from_env()

    def test_rejects_transmission(self):
        with pytest.raises(InvalidSpectrum):
            ReferenceSpectrum(Spectrum([200, 300], [0.5, 0.5], Quantity.TRANSMISSION_FRACTION))

    def test_rejects_negative(self):
        with pytest.raises(InvalidSpectrum):
            ReferenceSpectrum(Spectrum([200, 300], [-0.1, 0.5], Quantity.ABSORPTION_DECADIC))


class TestEvalModel:
    def test_only_offset(self, grid, ref):
        out = eval_model(zero_params(ref_weight=1.0), grid, ref)
        np.testing.assert_array_equal(out, ref.on_grid(grid))

    def test_all_zero(self, grid, ref):
        assert np.all(eval_model(zero_params(), grid, ref) == 0.0)

    def test_matches_brute_force(self, grid, ref, rng):
        for _ in range(20):
            p = random_truth(rng, five_component=bool(rng.integers(2)))
            expected = brute_force_model(p, grid, ref.on_grid(grid))
            np.testing.assert_allclose(eval_model(p, grid, ref), expected, rtol=1e-13, atol=1e-13)

    def test_matches_noiseless_synth(self, grid, ref, rng):
        p = random_truth(rng)
        synth = generate_absorption(SynthSpec(p, ref, grid))
        np.testing.assert_allclose(eval_model(p, grid, ref), synth.values, rtol=1e-12, atol=0)

    def test_reference_must_cover_grid(self, ref):
        with pytest.raises(GridOutOfRange):
            eval_model(zero_params(), np.linspace(150, 800, 50), ref)

    def test_four_equals_five_with_zero_520(self, grid, ref, rng):
        p = random_truth(rng)
        five = p.with_g520(GaussianBand(0.0, p.g520.center_b, p.g520.width_c))
        np.testing.assert_array_equal(
            eval_model(p.four_component(), grid, ref), eval_model(five, grid, ref)
        )

    @pytest.mark.parametrize("name", ["a270", "a360", "a520", "R", "ref_weight"])
    def test_linear_in_amplitudes(self, grid, ref, rng, name):
        p = random_truth(rng)
        d = p.as_dict()
        doubled = dict(d, **{name: 2 * d[name]})
        zeroed = dict(d, **{name: 0.0})
        base = eval_model(p, grid, ref)
        part = base - eval_model(ModelParams.from_dict(zeroed), grid, ref)
        np.testing.assert_allclose(
            eval_model(ModelParams.from_dict(doubled), grid, ref), base + part,
            rtol=1e-12, atol=1e-12,
        )

    def test_components_sum(self, grid, ref, rng):
        p = random_truth(rng)
        parts = components(p, grid, ref)
        np.testing.assert_allclose(sum(parts.values()), eval_model(p, grid, ref), rtol=1e-13)
        four = components(p.four_component(), grid, ref)
        assert np.all(four["g520"] == 0)


class TestJacobian:
    def test_ref_weight_column_is_reference(self, grid, ref, rng):
        J = jacobian(random_truth(rng), grid, ref)
        np.testing.assert_array_equal(J[:, -1], ref.on_grid(grid))

    def test_unit_gaussian_at_centre(self, ref):
        p = ModelParams(
            GaussianBand(3.0, 270.0, 20.0), GaussianBand(1.0, 360.0, 40.0), None, 1e7, 1.0
        )
        J = jacobian(p, [260.0, 270.0, 280.0], ref)
        assert J[1, 0] == 1.0
        assert J.shape == (3, 8)

    def test_column_order(self, grid, ref, rng):
        p = random_truth(rng)
        J = jacobian(p, grid, ref)
        assert J.shape == (grid.size, 11)
        np.testing.assert_allclose(J[:, 9], grid**-3.0, rtol=1e-15)

    @pytest.mark.parametrize("five", [True, False])
    def test_matches_finite_differences(self, grid, ref, rng, five):
        for _ in range(10):
            p = random_truth(rng, five_component=five)
            err = max_column_rel_error(jacobian(p, grid, ref), central_difference_jacobian(p, grid, ref))
            assert err <= 1e-6


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_jacobian_finite_difference_property(seed):
    rng = np.random.default_rng(seed)
    grid = np.arange(200.0, 801.0, 1.0)
    ref = builtin_reference()
    p = random_truth(rng, five_component=bool(seed % 2))
    err = max_column_rel_error(jacobian(p, grid, ref), central_difference_jacobian(p, grid, ref))
    assert err <= 1e-6
