"""Unit tests for the image, SDF and PINN tasks."""

import numpy as np
import pytest
from matplotlib import image as mpimg

from finr.autodiff import grad_check
from finr.errors import CapabilityError, InputError, ShapeError
from finr.model import FieldEvaluation
from finr.tasks.image import ImageTask, image_loss, load_image, synthetic_image
from finr.tasks.pinn import (
    DOMAINS,
    OMEGA,
    PinnTask,
    PinnWeights,
    field_errors,
    ns_residual,
    observation_coords,
    observe,
    pinn_loss,
    sample_collocation,
    taylor_green_field,
    taylor_green_reference,
)
from finr.tasks.sdf import SdfTask, analytic_sdf, sdf_loss, truncate_sdf
from finr.trainer.loop import TrainConfig, train
from finr.trainer.rng import generator


class TestImageTask:
    """Image fitting targets, loss and gradients."""

    @pytest.mark.unit
    def test_synthetic_image_is_normalized_and_seeded(self):
        a = synthetic_image(12, 10, 3, seed=2)
        b = synthetic_image(12, 10, 3, seed=2)

        assert a.shape == (12, 10, 3)
        assert a.min() == pytest.approx(0.0)
        assert a.max() == pytest.approx(1.0)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.unit
    def test_synthetic_component_limit(self):
        with pytest.raises(InputError):
            synthetic_image(4, 4, components=9)

    @pytest.mark.unit
    def test_load_png_drops_alpha(self, tmp_path):
        image = synthetic_image(6, 7, 3)
        mpimg.imsave(tmp_path / "in.png", image)

        loaded = load_image(tmp_path / "in.png")

        assert loaded.shape == (6, 7, 3)
        np.testing.assert_allclose(loaded, image, atol=1.0 / 255 + 1e-6)

    @pytest.mark.unit
    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_image(tmp_path / "missing.png")

    @pytest.mark.unit
    def test_target_range_checked(self):
        with pytest.raises(InputError):
            ImageTask(np.full((2, 2, 1), 1.5))

    @pytest.mark.unit
    def test_target_layout_checked(self):
        with pytest.raises(ShapeError):
            ImageTask(np.zeros((2, 2, 2)))

    @pytest.mark.unit
    def test_loss_shape_checked(self):
        with pytest.raises(ShapeError):
            image_loss(np.zeros((2, 2, 1)), np.zeros((2, 3, 1)))

    @pytest.mark.unit
    def test_model_channels_checked(self, tiny_model):
        task = ImageTask(synthetic_image(4, 5, 3))
        model = tiny_model(d=2, channels=1, domains=task.domains)
        with pytest.raises(ShapeError):
            task.check(model)

    @pytest.mark.unit
    def test_perfect_prediction_metrics(self):
        target = synthetic_image(16, 16, 1)
        metrics = ImageTask(target).evaluate(None, prediction=target)

        assert metrics["psnr"] == float("inf")
        assert metrics["ssim"] == pytest.approx(1.0)
        assert metrics["mse"] == 0.0

    @pytest.mark.unit
    def test_small_images_skip_ssim(self):
        target = synthetic_image(4, 5, 1)
        assert "ssim" not in ImageTask(target).evaluate(None, prediction=target)

    @pytest.mark.unit
    def test_batched_loss_is_finite(self, tiny_model):
        target = synthetic_image(3, 4, 1)
        full = ImageTask(target)
        batched = ImageTask(target, batch_size=11)
        model = tiny_model(d=2, channels=1, domains=full.domains)

        assert full.full_grid and not batched.full_grid
        loss, _ = batched.training_loss(model, None, generator(0))
        assert np.isfinite(float(loss))

    @pytest.mark.unit
    def test_gradients_match_finite_differences(self, tiny_model):
        task = ImageTask(synthetic_image(4, 5, 1, seed=1))
        model = tiny_model(mode="CP", rank=2, d=2, channels=1, domains=task.domains, activation="tanh", layers=2, width=8)

        error = grad_check(lambda tape: task.training_loss(model, tape, generator(0))[0], model.params())

        assert error < 1e-5


class TestSdfTask:
    """Signed distance targets and the Eikonal loss."""

    @pytest.mark.unit
    def test_truncation(self):
        np.testing.assert_array_equal(truncate_sdf(np.array([0.5, -0.5, 0.05])), [0.1, -0.1, 0.05])

    @pytest.mark.unit
    def test_truncation_rejects_nan(self):
        with pytest.raises(InputError):
            truncate_sdf(np.array([np.nan]))

    @pytest.mark.unit
    def test_shapes(self):
        origin = np.zeros((1, 3))

        assert analytic_sdf("sphere", origin)[0] == pytest.approx(-0.5)
        assert analytic_sdf("torus", np.array([[0.5, 0.0, 0.0]]))[0] == pytest.approx(-0.2)
        assert analytic_sdf("union", np.array([[0.35, 0.0, 0.0]]))[0] == pytest.approx(-0.3)
        with pytest.raises(InputError):
            analytic_sdf("cube", origin)

    @pytest.mark.unit
    def test_loss_vanishes_on_exact_unit_gradient_fit(self):
        target = np.array([0.2, -0.1, 0.0])
        grads = [np.array([1.0, 0.0, 0.6]), np.zeros(3), np.array([0.0, 1.0, 0.8])]
        total, parts = sdf_loss(target.copy(), grads, target, np.array([False, False, True]))

        assert float(total) == pytest.approx(0.0)
        assert set(parts) == {"eikonal", "data", "surface"}

    @pytest.mark.unit
    def test_loss_weights_components(self):
        target = np.zeros(2)
        value = np.array([0.1, -0.3])
        grads = [np.array([2.0, 0.5]), np.zeros(2)]
        total, parts = sdf_loss(value, grads, target, np.array([True, False]))

        assert float(parts["eikonal"]) == pytest.approx(0.5 * (1.0 + 0.5))
        assert float(parts["data"]) == pytest.approx(0.2)
        assert float(parts["surface"]) == pytest.approx(0.1)
        assert float(total) == pytest.approx(0.1 * 0.75 + 0.2 + 3.0 * 0.1)

    @pytest.mark.unit
    def test_empty_band_contributes_nothing(self):
        total, parts = sdf_loss(np.ones(2), [np.ones(2)], np.ones(2), np.zeros(2, dtype=bool))

        assert float(parts["surface"]) == 0.0
        assert float(total) == pytest.approx(0.0)

    @pytest.mark.unit
    def test_loss_needs_gradients(self):
        with pytest.raises(CapabilityError):
            sdf_loss(np.zeros(2), [], np.zeros(2), np.zeros(2, dtype=bool))

    @pytest.mark.unit
    def test_oracle_scores_perfectly(self):
        task = SdfTask(shape="sphere", resolution=16)
        metrics = task.evaluate(field=task.oracle_field())

        assert metrics["iou"] == 1.0
        assert metrics["mse"] == pytest.approx(0.0, abs=1e-20)
        assert metrics["eikonal"] < 1e-6

    @pytest.mark.unit
    def test_band_follows_surface(self):
        task = SdfTask(shape="sphere", resolution=5)

        assert task.band[2, 2, 3, 0]
        assert not task.band[2, 2, 2, 0]

    @pytest.mark.unit
    def test_featuregrid_rejected(self, tiny_model):
        model = tiny_model(d=3, channels=1, encoding="featuregrid", levels=2, base_resolution=4)
        with pytest.raises(CapabilityError):
            SdfTask(resolution=4).check(model)

    @pytest.mark.unit
    def test_gradients_match_finite_differences(self, tiny_model):
        task = SdfTask(shape="sphere", resolution=5)
        model = tiny_model(mode="CP", rank=2, d=3, channels=1, domains=task.domains, layers=1, width=4, omega0=3.0)

        error = grad_check(lambda tape: task.training_loss(model, tape, generator(0))[0], model.params())

        assert error < 1e-4


class TestPinnTask:
    """Taylor-Green reference, residuals and the PINN loss."""

    @pytest.mark.unit
    def test_reference_vorticity_at_origin(self):
        _, _, omega = taylor_green_reference(0.0, 0.0, 0.0)
        assert float(omega) == pytest.approx(-2.0)

    @pytest.mark.unit
    def test_exact_solution_has_tiny_residuals(self):
        points = sample_collocation(DOMAINS, 200, 3)
        for residual in ns_residual(taylor_green_field(points, 0.01), 0.01):
            assert np.max(np.abs(residual)) < 1e-8

    @pytest.mark.unit
    def test_closed_form_partials(self):
        points = np.array([[0.4, 1.1, 2.3]])
        field = taylor_green_field(points)
        h = 1e-5
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            upper = taylor_green_field(points + step).value
            lower = taylor_green_field(points - step).value
            np.testing.assert_allclose(field.grads[k], (upper - lower) / (2 * h), atol=1e-8)

    @pytest.mark.unit
    def test_zero_fields_have_zero_residuals(self):
        zeros = np.zeros((5, 3))
        field = FieldEvaluation(zeros, [zeros] * 3, [zeros] * 3)

        for residual in ns_residual(field):
            np.testing.assert_array_equal(residual, np.zeros(5))

    @pytest.mark.unit
    def test_vorticity_growing_in_time_adds_unit_momentum_residual(self):
        t = np.array([0.0, 0.3, 0.7, 1.0])
        value = np.zeros((4, 3))
        value[:, OMEGA] = t
        d_t = np.zeros((4, 3))
        d_t[:, OMEGA] = 1.0
        zeros = np.zeros((4, 3))

        momentum, divergence, definition = ns_residual(FieldEvaluation(value, [d_t, zeros, zeros], [zeros] * 3))

        np.testing.assert_array_equal(momentum, np.ones(4))
        np.testing.assert_array_equal(divergence, np.zeros(4))
        np.testing.assert_array_equal(definition, t)

    @pytest.mark.unit
    def test_exact_solution_loss(self):
        points = sample_collocation(DOMAINS, 100, 5)
        observations = observe(observation_coords((2, 4, 4)), 0.01)

        total, parts = pinn_loss(taylor_green_field(points), observations.copy(), observations, 0.01)

        assert float(parts["data"]) == 0.0
        assert float(parts["pde"]) < 1e-12
        assert float(total) < 1e-12

    @pytest.mark.unit
    def test_zero_model_against_zero_observations(self, tiny_model):
        task = PinnTask(observation_shape=(2, 3, 3), collocation=8, collocation_batch=8)
        task.observations = np.zeros_like(task.observations)
        model = tiny_model(mode="CP", rank=2, d=3, channels=3, domains=list(DOMAINS), layers=1, width=4)
        model.channel_mix.value[:] = 0.0

        total, parts = task.training_loss(model, None, generator(0))

        assert float(total) == 0.0
        assert float(parts["data"]) == 0.0 and float(parts["pde"]) == 0.0

    @pytest.mark.unit
    def test_zero_pde_weight_is_plain_regression(self, tiny_model):
        task = PinnTask(
            observation_shape=(3, 6, 6),
            collocation=8,
            collocation_batch=8,
            weights=PinnWeights(data=1.0, pde=0.0),
            eval_shape=(3, 6, 6),
        )
        model = tiny_model(mode="CP", rank=4, d=3, channels=3, domains=list(DOMAINS), activation="tanh", layers=1, width=8)

        result = train(model, task, TrainConfig(steps=40, learning_rate=1e-2, log_interval=40))
        start, end = result.reports

        assert end.loss == end.components["data"]
        assert end.loss < start.loss
        assert end.mse < start.mse

    @pytest.mark.unit
    def test_residuals_need_second_order(self):
        with pytest.raises(CapabilityError):
            ns_residual(FieldEvaluation(np.zeros((1, 3)), [np.zeros((1, 3))] * 3))

    @pytest.mark.unit
    def test_collocation_inside_domain(self):
        points = sample_collocation(DOMAINS, 500, 0)

        assert points.shape == (500, 3)
        assert points[:, 0].min() >= 0.0 and points[:, 0].max() <= 1.0
        assert points[:, 1:].max() <= 2 * np.pi

    @pytest.mark.unit
    def test_collocation_count(self):
        with pytest.raises(InputError):
            sample_collocation(DOMAINS, 0, 0)

    @pytest.mark.unit
    def test_field_errors(self):
        truth = np.zeros((2, 2, 3))
        pred = truth.copy()
        pred[..., OMEGA] = 0.5
        errors = field_errors(pred, truth)

        assert errors["mse"] == pytest.approx(0.25)
        assert errors["mse_velocity"] == 0.0

    @pytest.mark.unit
    def test_featuregrid_rejected(self, tiny_model):
        model = tiny_model(d=3, channels=3, domains=list(DOMAINS), encoding="featuregrid", levels=2)
        with pytest.raises(CapabilityError):
            PinnTask(collocation=4, observation_shape=(2, 3, 3)).check(model)

    @pytest.mark.unit
    def test_viscosity_must_be_positive(self):
        with pytest.raises(InputError):
            PinnTask(nu=0.0)

    @pytest.mark.unit
    @pytest.mark.parametrize("layout", ["points", "grid"])
    def test_gradients_match_finite_differences(self, tiny_model, layout):
        task = PinnTask(
            observation_shape=(2, 3, 3),
            collocation=6,
            collocation_batch=4,
            collocation_layout=layout,
            grid_shape=(2, 2, 2),
        )
        model = tiny_model(mode="CP", rank=2, d=3, channels=3, domains=list(DOMAINS), activation="tanh", layers=1, width=3)

        error = grad_check(lambda tape: task.training_loss(model, tape, generator(0))[0], model.params())

        assert error < 1e-3
