"""Unit tests for core/dense.py and core/factors.py."""

import numpy as np
import pytest

from finr.core import (
    DenseTensor,
    FactorSet,
    compose_grid,
    compose_points,
    contract_point,
    cp_compose,
    factor_rows,
    read_ftnr,
    reference_compose,
    tt_compose,
    tucker_compose,
)
from finr.errors import CheckpointError, ShapeError


def random_factor_set(rng, mode, d, extents, rank, channels):
    if mode == "CP":
        factors = [rng.normal(size=(n, rank)) for n in extents]
        return FactorSet("CP", factors, channel_mix=rng.normal(size=(rank, channels)))
    if mode == "TT":
        factors = [rng.normal(size=(extents[0], rank))]
        factors += [rng.normal(size=(rank, n, rank)) for n in extents[1:-1]]
        factors.append(rng.normal(size=(extents[-1], rank)))
        return FactorSet("TT", factors, channel_mix=rng.normal(size=(rank, channels)))
    factors = [rng.normal(size=(n, rank)) for n in extents]
    return FactorSet("TU", factors, core=rng.normal(size=(rank,) * d + (channels,)))


class TestDenseTensor:
    """Tests for DenseTensor and the FTNR codec."""

    @pytest.mark.unit
    def test_copies_and_freezes_input(self):
        source = np.arange(6, dtype=np.float64).reshape(2, 3)
        tensor = DenseTensor(source)
        source[0, 0] = 99.0

        assert tensor.array[0, 0] == 0.0
        assert not tensor.array.flags.writeable

    @pytest.mark.unit
    def test_integer_input_becomes_float64(self):
        assert DenseTensor(np.arange(4)).array.dtype == np.float64

    @pytest.mark.unit
    def test_rejects_too_many_modes(self):
        with pytest.raises(ShapeError):
            DenseTensor(np.zeros((1,) * 7))

    @pytest.mark.unit
    def test_from_flat_checks_length(self):
        with pytest.raises(ShapeError):
            DenseTensor.from_flat((2, 3), np.zeros(5))

    @pytest.mark.unit
    def test_ftnr_header_layout(self):
        payload = DenseTensor(np.ones((2, 3), dtype=np.float32)).to_bytes()

        assert payload[:4] == b"FTNR"
        assert payload[4:6] == (1).to_bytes(2, "little")
        assert payload[6] == 0
        assert payload[7] == 2
        assert int.from_bytes(payload[8:16], "little") == 2
        assert int.from_bytes(payload[16:24], "little") == 3
        assert len(payload) == 24 + 6 * 4

    @pytest.mark.unit
    def test_save_and_load(self, tmp_path, rng):
        original = DenseTensor(rng.normal(size=(3, 4, 2)))
        original.save(tmp_path / "t.ftnr")

        loaded = DenseTensor.load(tmp_path / "t.ftnr")

        assert loaded.shape == (3, 4, 2)
        assert loaded.array.dtype == np.float64
        np.testing.assert_array_equal(loaded.array, original.array)

    @pytest.mark.unit
    def test_read_ftnr_reports_end_offset(self):
        payload = DenseTensor(np.zeros(3)).to_bytes() + b"tail"
        tensor, end = read_ftnr(payload)

        assert tensor.shape == (3,)
        assert payload[end:] == b"tail"

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "mutate",
        [
            lambda b: b"XXXX" + b[4:],
            lambda b: b[:4] + (7).to_bytes(2, "little") + b[6:],
            lambda b: b[:6] + bytes([9]) + b[7:],
            lambda b: b[:-1],
            lambda b: b + b"\x00",
        ],
    )
    def test_rejects_corrupt_payloads(self, mutate):
        payload = DenseTensor(np.ones((2, 2))).to_bytes()
        with pytest.raises(CheckpointError):
            DenseTensor.from_bytes(mutate(payload))


class TestComposition:
    """Composition kernels against the brute-force oracle."""

    @pytest.mark.unit
    def test_random_cases_match_reference(self):
        rng = np.random.default_rng(7)
        composers = {"CP": cp_compose, "TT": tt_compose, "TU": tucker_compose}
        for case in range(50):
            mode = ("CP", "TT", "TU")[case % 3]
            d = int(rng.integers(2, 4))
            extents = tuple(int(n) for n in rng.integers(1, 9, size=d))
            rank = int(rng.integers(1, 5))
            channels = int(rng.choice([1, 3]))
            fs = random_factor_set(rng, mode, d, extents, rank, channels)

            fast = composers[mode](fs).array
            slow = reference_compose(fs).array

            assert fast.shape == extents + (channels,)
            assert np.max(np.abs(fast - slow)) < 1e-12

    @pytest.mark.unit
    @pytest.mark.parametrize("mode", ["CP", "TT", "TU"])
    def test_scaling_one_factor_scales_output(self, mode, rng):
        composers = {"CP": cp_compose, "TT": tt_compose, "TU": tucker_compose}
        fs = random_factor_set(rng, mode, 3, (4, 3, 5), 2, 2)
        base = composers[mode](fs).array
        alpha = 2.5

        for k in range(fs.d):
            factors = list(fs.axis_factors)
            factors[k] = alpha * factors[k]
            scaled = FactorSet(mode, factors, channel_mix=fs.channel_mix, core=fs.core)

            np.testing.assert_allclose(composers[mode](scaled).array, alpha * base, rtol=1e-12, atol=1e-12)

    @pytest.mark.unit
    def test_rank_one_cp_is_outer_product(self):
        a, b = np.array([1.0, 2.0]), np.array([3.0, 4.0, 5.0])
        fs = FactorSet("CP", [a[:, None], b[:, None]], channel_mix=np.ones((1, 1)))

        np.testing.assert_allclose(cp_compose(fs).array[..., 0], np.outer(a, b))

    @pytest.mark.unit
    def test_tucker_identity_core_is_cp(self, rng):
        factors = [rng.normal(size=(4, 3)) for _ in range(3)]
        mix = rng.normal(size=(3, 2))
        core = np.zeros((3, 3, 3, 2))
        for r in range(3):
            core[r, r, r] = mix[r]

        tucker = tucker_compose(FactorSet("TU", factors, core=core)).array
        cp = cp_compose(FactorSet("CP", factors, channel_mix=mix)).array

        np.testing.assert_allclose(tucker, cp, atol=1e-12)

    @pytest.mark.unit
    def test_mode_guard(self, rng):
        fs = random_factor_set(rng, "CP", 2, (2, 2), 2, 1)
        with pytest.raises(ShapeError):
            tt_compose(fs)

    @pytest.mark.unit
    def test_cp_rank_mismatch(self, rng):
        with pytest.raises(ShapeError):
            FactorSet("CP", [rng.normal(size=(3, 2)), rng.normal(size=(3, 4))], channel_mix=np.ones((2, 1)))

    @pytest.mark.unit
    def test_tt_bond_mismatch(self, rng):
        factors = [rng.normal(size=(3, 2)), rng.normal(size=(3, 4, 2)), rng.normal(size=(3, 2))]
        with pytest.raises(ShapeError):
            FactorSet("TT", factors, channel_mix=np.ones((2, 1)))

    @pytest.mark.unit
    def test_tucker_core_mismatch(self, rng):
        factors = [rng.normal(size=(3, 2)), rng.normal(size=(3, 3))]
        with pytest.raises(ShapeError):
            FactorSet("TU", factors, core=np.ones((2, 2, 1)))

    @pytest.mark.unit
    def test_too_many_axes(self, rng):
        factors = [rng.normal(size=(2, 1)) for _ in range(6)]
        with pytest.raises(ShapeError):
            compose_grid("CP", factors, np.ones((1, 1)))


class TestPointContraction:
    """contract_point and compose_points agree with the full grid."""

    @pytest.mark.unit
    @pytest.mark.parametrize("mode", ["CP", "TT", "TU"])
    def test_every_entry_matches_grid(self, mode, rng):
        fs = random_factor_set(rng, mode, 3, (3, 4, 2), 3, 2)
        grid = reference_compose(fs).array
        for index in np.ndindex(3, 4, 2):
            value = contract_point(fs, factor_rows(fs, index))
            np.testing.assert_allclose(value, grid[index], atol=1e-12)

    @pytest.mark.unit
    def test_batched_rows_tt(self, rng):
        fs = random_factor_set(rng, "TT", 3, (3, 4, 2), 2, 1)
        indices = np.array([[0, 0, 0], [2, 3, 1], [1, 2, 0]])
        rows = [
            fs.axis_factors[0][indices[:, 0]],
            np.transpose(fs.axis_factors[1][:, indices[:, 1], :], (1, 0, 2)),
            fs.axis_factors[2][indices[:, 2]],
        ]
        values = compose_points("TT", rows, fs.channel_mix)
        grid = tt_compose(fs).array

        np.testing.assert_allclose(values, grid[tuple(indices.T)], atol=1e-12)

    @pytest.mark.unit
    def test_row_count_mismatch(self, rng):
        with pytest.raises(ShapeError):
            compose_points("CP", [rng.normal(size=(2, 2)), rng.normal(size=(3, 2))], np.ones((2, 1)))

    @pytest.mark.unit
    def test_wrong_row_count(self, rng):
        fs = random_factor_set(rng, "CP", 2, (2, 2), 2, 1)
        with pytest.raises(ShapeError):
            contract_point(fs, [fs.axis_factors[0][0]])
