"""Unit tests for model.py: factorized evaluation, baselines and cost accounting."""

import numpy as np
import pytest
from pydantic import ValidationError

from finr.backends.subnetwork import ActivationSpec, EncodingSpec, SubNetworkSpec, normalizer
from finr.errors import CapabilityError, InputError, ShapeError
from finr.model import (
    FieldEvaluation,
    FInrModel,
    FInrSpec,
    MonolithicModel,
    MonolithicSpec,
    clamp_coords,
    eval_grid,
    eval_indexed,
    eval_points,
    initialize_model,
    monolithic_equivalent,
    param_count,
    predict_cost,
)

BACKENDS = [
    {"activation": "sine", "encoding": "none", "omega0": 5.0},
    {"activation": "gabor", "encoding": "none", "omega0": 5.0, "scale": 2.0},
    {"activation": "finer", "encoding": "none", "omega0": 5.0},
    {"activation": "tanh", "encoding": "fourier", "levels": 3},
    {"activation": "relu", "encoding": "fourier", "levels": 3},
    {"activation": "sine", "encoding": "featuregrid", "levels": 2, "base_resolution": 4},
]


def mesh_points(coords):
    mesh = np.meshgrid(*coords, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


class TestSpec:
    """FInrSpec validation and derived shapes."""

    @pytest.mark.unit
    def test_uniform_rank_counts(self, tiny_network):
        net = tiny_network()
        domains = [(0.0, 1.0)] * 4

        assert FInrSpec.uniform("CP", 5, net, domains).ranks == (5,)
        assert FInrSpec.uniform("TT", 5, net, domains).ranks == (5, 5, 5)
        assert FInrSpec.uniform("TU", 5, net, domains).ranks == (5, 5, 5, 5)

    @pytest.mark.unit
    def test_tt_axis_outputs(self, tiny_network):
        spec = FInrSpec(
            mode="TT", ranks=(2, 3), channels=1, networks=(tiny_network(),) * 3, domains=((0.0, 1.0),) * 3
        )

        assert spec.axis_outputs() == [2, 6, 3]
        assert spec.mixer_shape() == (3, 1)
        assert spec.core_shape() is None

    @pytest.mark.unit
    def test_tucker_core_shape(self, tiny_network):
        spec = FInrSpec(mode="TU", ranks=(2, 3), channels=4, networks=(tiny_network(),) * 2, domains=((0, 1),) * 2)

        assert spec.core_shape() == (2, 3, 4)
        assert spec.mixer_shape() is None

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "mode,ranks,d",
        [("CP", (2, 2), 2), ("TT", (2, 2), 2), ("TU", (2,), 2), ("CP", (2,), 1), ("CP", (2,), 6)],
    )
    def test_invalid_specs(self, tiny_network, mode, ranks, d):
        with pytest.raises(ValidationError):
            FInrSpec(mode=mode, ranks=ranks, networks=(tiny_network(),) * d, domains=((0.0, 1.0),) * d)

    @pytest.mark.unit
    def test_degenerate_domain(self, tiny_network):
        with pytest.raises(ValidationError):
            FInrSpec.uniform("CP", 2, tiny_network(), [(0.0, 1.0), (1.0, 1.0)])


class TestInitialization:
    """Parameter layout and determinism."""

    @pytest.mark.unit
    def test_same_seed_same_parameters(self, tiny_model):
        a, b = tiny_model(seed=4), tiny_model(seed=4)

        for p, q in zip(a.params(), b.params()):
            assert p.name == q.name
            np.testing.assert_array_equal(p.value, q.value)

    @pytest.mark.unit
    def test_different_seed_differs(self, tiny_model):
        a, b = tiny_model(seed=1), tiny_model(seed=2)

        assert not np.array_equal(a.channel_mix.value, b.channel_mix.value)

    @pytest.mark.unit
    def test_param_count_cp(self, tiny_model):
        model = tiny_model(mode="CP", rank=3, d=2, channels=2, layers=1, width=4)
        # per axis: (1*4 + 4) + (4*3 + 3); mixer 3 x 2
        assert param_count(model) == 2 * 23 + 6

    @pytest.mark.unit
    def test_param_count_tt(self, tiny_model):
        model = tiny_model(mode="TT", rank=2, d=3, channels=1, layers=1, width=4)
        # outputs 2, 4, 2 columns; mixer 2 x 1
        assert param_count(model) == (8 + 10) + (8 + 20) + (8 + 10) + 2

    @pytest.mark.unit
    def test_param_count_tucker(self, tiny_model):
        model = tiny_model(mode="TU", rank=2, d=2, channels=3, layers=1, width=4)
        assert param_count(model) == 2 * (8 + 10) + 2 * 2 * 3

    @pytest.mark.unit
    def test_dtype(self, tiny_network):
        spec = FInrSpec.uniform("CP", 2, tiny_network(), [(0, 1), (0, 1)])
        model = FInrModel.initialize(spec, 0, np.float32)

        assert model.dtype == np.float32
        assert all(p.value.dtype == np.float32 for p in model.params())


class TestEvaluation:
    """Grid, point and indexed evaluation agree."""

    @pytest.mark.unit
    @pytest.mark.parametrize("mode", ["CP", "TT", "TU"])
    @pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: f"{b['activation']}-{b['encoding']}")
    def test_grid_matches_points(self, tiny_model, mode, backend):
        model = tiny_model(mode=mode, rank=3, d=3, channels=2, **backend)
        coords = [np.linspace(-1.0, 1.0, 8)] * 3

        grid = eval_grid(model, coords).value
        points = eval_points(model, mesh_points(coords)).value

        assert grid.shape == (8, 8, 8, 2)
        assert np.max(np.abs(grid.reshape(-1, 2) - points)) <= 1e-10

    @pytest.mark.unit
    @pytest.mark.parametrize("mode", ["CP", "TT", "TU"])
    def test_indexed_matches_grid(self, tiny_model, mode):
        model = tiny_model(mode=mode, d=3)
        coords = [np.linspace(-1.0, 1.0, n) for n in (3, 4, 5)]
        indices = np.array([[0, 0, 0], [2, 3, 4], [1, 2, 3], [1, 2, 3]])

        grid = eval_grid(model, coords, 1)
        picked = eval_indexed(model, coords, indices, 1)

        np.testing.assert_allclose(picked.value, grid.value[tuple(indices.T)], atol=1e-12)
        for k in range(3):
            np.testing.assert_allclose(picked.grads[k], grid.grads[k][tuple(indices.T)], atol=1e-12)

    @pytest.mark.unit
    def test_identity_factors_follow_product_rule(self, tiny_model):
        domains = [(0.0, 5.0), (0.0, 5.0)]
        model = tiny_model(
            mode="CP", rank=1, d=2, channels=1, domains=domains, activation="relu", layers=1, width=2
        )
        for net, (lo, hi) in zip(model.nets, domains):
            slope, offset = normalizer((lo, hi))
            # relu(u) - relu(-u) recovers the normalized coordinate u
            net.weights[0].value = np.array([[1.0, -1.0]])
            net.biases[0].value = np.zeros(2)
            net.weights[1].value = np.array([[1.0 / slope], [-1.0 / slope]])
            net.biases[1].value = np.array([-offset / slope])
        model.channel_mix.value = np.ones((1, 1))

        field = eval_points(model, np.array([[2.0, 3.0]]), 2)

        np.testing.assert_allclose(field.value, [[6.0]], rtol=1e-12)
        np.testing.assert_allclose(field.grads[0], [[3.0]], rtol=1e-12)
        np.testing.assert_allclose(field.grads[1], [[2.0]], rtol=1e-12)
        np.testing.assert_array_equal(field.second[0], [[0.0]])

    @pytest.mark.unit
    @pytest.mark.parametrize("mode", ["CP", "TT", "TU"])
    def test_partials_match_finite_differences(self, tiny_model, mode):
        domains = [(0.0, 1.0), (0.0, 2.0 * np.pi), (-2.0, 3.0)]
        model = tiny_model(mode=mode, d=3, channels=2, domains=domains, activation="tanh")
        points = np.array([[0.3, 2.0, 0.5], [0.7, 4.1, -1.2]])
        h = 1e-4

        field = eval_points(model, points, 2)
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            upper = eval_points(model, points + step).value
            lower = eval_points(model, points - step).value
            fd1 = (upper - lower) / (2 * h)
            fd2 = (upper - 2 * field.value + lower) / (h * h)
            np.testing.assert_allclose(field.grads[k], fd1, rtol=1e-4, atol=1e-7)
            np.testing.assert_allclose(field.second[k], fd2, rtol=1e-4, atol=1e-5)

    @pytest.mark.unit
    def test_grid_partials_are_factor_substitutions(self, tiny_model):
        model = tiny_model(mode="CP", d=2, channels=1)
        coords = [np.linspace(-1, 1, 4), np.linspace(-1, 1, 5)]

        grid = eval_grid(model, coords, 2)
        points = eval_points(model, mesh_points(coords), 2)

        for k in range(2):
            np.testing.assert_allclose(grid.grads[k].reshape(-1, 1), points.grads[k], atol=1e-10)
            np.testing.assert_allclose(grid.second[k].reshape(-1, 1), points.second[k], atol=1e-10)
        np.testing.assert_allclose(grid.laplacian(), grid.second[0] + grid.second[1])

    @pytest.mark.unit
    def test_featuregrid_rejects_second_order(self, tiny_model):
        model = tiny_model(encoding="featuregrid", levels=2, base_resolution=4)
        with pytest.raises(CapabilityError):
            eval_grid(model, [np.zeros(2)] * 3, 2)

    @pytest.mark.unit
    def test_out_of_domain_rejected(self, tiny_model):
        model = tiny_model(d=2)
        with pytest.raises(InputError):
            eval_grid(model, [np.array([0.0, 1.5]), np.zeros(1)])

    @pytest.mark.unit
    def test_non_finite_rejected(self, tiny_model):
        model = tiny_model(d=2)
        with pytest.raises(InputError):
            eval_points(model, np.array([[np.inf, 0.0]]))

    @pytest.mark.unit
    def test_wrong_point_width(self, tiny_model):
        with pytest.raises(ShapeError):
            eval_points(tiny_model(d=3), np.zeros((4, 2)))

    @pytest.mark.unit
    def test_clamp_coords_counts_moved(self, tiny_model):
        model = tiny_model(d=2)
        clipped, moved = clamp_coords(model, [np.array([-2.0, 0.0, 2.0]), np.array([0.5])])

        assert moved == 2
        np.testing.assert_array_equal(clipped[0], [-1.0, 0.0, 1.0])

    @pytest.mark.unit
    def test_laplacian_needs_second_derivatives(self):
        with pytest.raises(CapabilityError):
            FieldEvaluation(np.zeros(2)).laplacian()

    @pytest.mark.unit
    def test_tensor_export(self, tiny_model):
        model = tiny_model(d=2, channels=1)
        tensor = eval_grid(model, [np.linspace(-1, 1, 3)] * 2).tensor()

        assert tensor.shape == (3, 3, 1)


class TestMonolithic:
    """The coordinate-MLP baseline."""

    @pytest.mark.unit
    def test_grid_matches_points(self):
        spec = MonolithicSpec(
            network=SubNetworkSpec(encoding=EncodingSpec(kind="fourier", levels=2), layers=2, width=8),
            channels=2,
            domains=((0.0, 1.0), (0.0, 2.0)),
        )
        model = MonolithicModel.initialize(spec, 0)
        coords = [np.linspace(0, 1, 3), np.linspace(0, 2, 4)]

        grid = np.asarray(model.eval_grid(coords))
        points = model.eval_points(mesh_points(coords))

        assert grid.shape == (3, 4, 2)
        np.testing.assert_allclose(grid.reshape(-1, 2), points, atol=1e-12)

    @pytest.mark.unit
    def test_featuregrid_rejected(self):
        with pytest.raises(ValidationError):
            MonolithicSpec(
                network=SubNetworkSpec(encoding=EncodingSpec(kind="featuregrid")), domains=((0, 1), (0, 1))
            )

    @pytest.mark.unit
    def test_equivalent_has_summed_width(self, tiny_network):
        spec = FInrSpec.uniform("CP", 4, tiny_network(width=8), [(0, 1)] * 3, channels=2)
        baseline = monolithic_equivalent(spec)

        assert baseline.network.width == 24
        assert baseline.channels == 2
        assert baseline.layer_dims()[0] == (3, 24)

    @pytest.mark.unit
    def test_factorized_has_fewer_parameters_than_equivalent(self, tiny_network):
        spec = FInrSpec.uniform("CP", 64, tiny_network(width=256, layers=4), [(0, 1)] * 3)
        factorized = FInrModel.initialize(spec, 0)
        baseline = MonolithicModel.initialize(monolithic_equivalent(spec), 0)

        assert param_count(factorized) < param_count(baseline)

    @pytest.fixture
    def baseline(self):
        spec = MonolithicSpec(
            network=SubNetworkSpec(
                encoding=EncodingSpec(kind="fourier", levels=2),
                layers=2,
                width=8,
                activation=ActivationSpec(kind="tanh"),
                output_dim=2,
            ),
            channels=2,
            domains=((0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)),
        )
        return MonolithicModel.initialize(spec, 3)

    @pytest.mark.unit
    def test_partials_match_finite_differences(self, baseline):
        points = np.array([[0.3, 1.1, 0.2], [0.8, 0.4, -0.6]])
        h = 1e-4

        field = eval_points(baseline, points, 2)
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            upper = eval_points(baseline, points + step).value
            lower = eval_points(baseline, points - step).value
            np.testing.assert_allclose(field.grads[k], (upper - lower) / (2 * h), rtol=1e-4, atol=1e-7)
            np.testing.assert_allclose(
                field.second[k], (upper - 2 * field.value + lower) / (h * h), rtol=1e-4, atol=1e-5
            )

    @pytest.mark.unit
    def test_module_evaluators_accept_the_baseline(self, baseline):
        coords = [np.linspace(0, 1, 3), np.linspace(0, 2, 4), np.linspace(-1, 1, 2)]
        indices = np.array([[0, 0, 0], [2, 3, 1], [1, 2, 0]])

        grid = eval_grid(baseline, coords, 1)
        picked = eval_indexed(baseline, coords, indices, 1)

        assert grid.value.shape == (3, 4, 2, 2)
        np.testing.assert_allclose(picked.value, grid.value[tuple(indices.T)], atol=1e-12)
        np.testing.assert_allclose(picked.grads[1], grid.grads[1][tuple(indices.T)], atol=1e-12)

    @pytest.mark.unit
    def test_baseline_rejects_out_of_domain_points(self, baseline):
        with pytest.raises(InputError):
            eval_points(baseline, np.array([[0.5, 3.0, 0.0]]))

    @pytest.mark.unit
    def test_initialize_model_dispatches_on_spec(self, tiny_network):
        spec = FInrSpec.uniform("CP", 2, tiny_network(), [(0, 1)] * 2)

        assert isinstance(initialize_model(spec, 0), FInrModel)
        assert isinstance(initialize_model(monolithic_equivalent(spec), 0), MonolithicModel)

class TestPredictCost:
    """Forward multiply-accumulate estimates."""

    @pytest.mark.unit
    def test_formulas(self):
        n, m, l, r = 64, 32, 2, 8
        assert predict_cost("monolithic", n, m, l, r).macs == m * m * l * n**3
        assert predict_cost("CP", n, m, l, r).macs == m * m * l * n * r + n**2 * r * r
        assert predict_cost("TT", n, m, l, r).macs == m * m * l * n * r * r + n**2 * r * r
        assert predict_cost("TU", n, m, l, r).macs == m * m * l * n * r + r * n**3

    @pytest.mark.unit
    def test_cp_cheaper_than_monolithic(self):
        assert predict_cost("CP", 256, 256, 4, 64).macs < predict_cost("monolithic", 256, 256, 4, 64).macs

    @pytest.mark.unit
    def test_spec_sets_dimension(self, tiny_network):
        spec = FInrSpec.uniform("CP", 4, tiny_network(), [(0, 1)] * 2)
        estimate = predict_cost(spec, 16, 8, 2, 4)

        assert estimate.d == 2
        assert estimate.macs == 64 * 2 * 16 * 4 + 16 * 16

    @pytest.mark.unit
    def test_unknown_mode(self):
        with pytest.raises(ShapeError):
            predict_cost("HT", 4, 4, 1, 1)
