"""Metric tests: hand values, laws, and brute-force oracle equivalence."""

import warnings

import numpy as np
import pytest

from tests import oracles


def _pair(rng, size=16):
    from models import AlphaMatte

    gt = rng.uniform(size=(size, size))
    pred = np.clip(gt + rng.normal(0.0, 0.2, size=(size, size)), 0.0, 1.0)
    # Shared opaque block so Conn has a source region
    gt[:5, :5] = 1.0
    pred[:5, :5] = 1.0
    return AlphaMatte(values=pred), AlphaMatte(values=gt)


# ── SAD / MSE ─────────────────────────────────────────────────────────────────


class TestSadMse:

    def test_two_pixel_sad(self):
        from metrics import sad
        from models import AlphaMatte

        value = sad(AlphaMatte(values=[[0.5, 0.25]]), AlphaMatte(values=[[0.0, 0.5]]))
        assert value == pytest.approx(0.00075)

    def test_constant_difference_mse(self):
        from metrics import mse
        from models import AlphaMatte

        value = mse(AlphaMatte(values=np.full((4, 4), 0.3)), AlphaMatte(values=np.full((4, 4), 0.2)))
        assert value == pytest.approx(10.0)

    def test_region_restricts(self):
        from metrics import mse, sad
        from models import AlphaMatte, BinaryMask

        pred = AlphaMatte(values=[[1.0, 0.0]])
        gt = AlphaMatte(values=[[0.0, 0.0]])
        region = BinaryMask(values=[[0.0, 1.0]])
        assert sad(pred, gt, region) == 0.0
        assert mse(pred, gt, region) == 0.0

    def test_empty_region_mse_is_zero(self, random_matte):
        from metrics import mse
        from models import BinaryMask

        assert mse(random_matte(4, 4), random_matte(4, 4), BinaryMask(values=np.zeros((4, 4)))) == 0.0

    def test_sad_scales_with_area_mse_does_not(self):
        from metrics import mse, sad
        from models import AlphaMatte, BinaryMask

        pred = AlphaMatte(values=np.full((4, 4), 0.5))
        gt = AlphaMatte(values=np.zeros((4, 4)))
        small = np.zeros((4, 4))
        small[:2] = 1.0
        half, full = BinaryMask(values=small), BinaryMask(values=np.ones((4, 4)))
        assert sad(pred, gt, full) == pytest.approx(2 * sad(pred, gt, half))
        assert mse(pred, gt, full) == pytest.approx(mse(pred, gt, half))

    def test_larger_error_never_decreases(self, rng):
        from metrics import mse, sad
        from models import AlphaMatte

        gt = AlphaMatte(values=np.full((6, 6), 0.5))
        pred = rng.uniform(0.5, 0.8, size=(6, 6))
        worse = pred.copy()
        worse[2, 3] = 1.0
        assert sad(AlphaMatte(values=worse), gt) >= sad(AlphaMatte(values=pred), gt)
        assert mse(AlphaMatte(values=worse), gt) >= mse(AlphaMatte(values=pred), gt)

    def test_shape_mismatch(self, random_matte):
        from errors import ShapeMismatch
        from metrics import sad

        with pytest.raises(ShapeMismatch):
            sad(random_matte(4, 4), random_matte(5, 5))

    def test_scale_from_settings(self):
        from config import MetricsSettings
        from metrics import sad
        from models import AlphaMatte

        value = sad(AlphaMatte(values=[[1.0]]), AlphaMatte(values=[[0.0]]), settings=MetricsSettings(sad_scale=1.0))
        assert value == 1.0


# ── Grad ──────────────────────────────────────────────────────────────────────


class TestGradError:

    def test_constant_images(self):
        from metrics import grad_error
        from models import AlphaMatte

        a = AlphaMatte(values=np.full((16, 16), 0.2))
        b = AlphaMatte(values=np.full((16, 16), 0.9))
        assert grad_error(a, b) < 1e-9

    def test_step_edge_matches_direct_convolution(self):
        from metrics import grad_error
        from models import AlphaMatte

        gt = np.zeros((32, 32))
        gt[:, 16:] = 1.0
        pred = np.zeros((32, 32))
        pred[:, 19:] = 0.8
        expected = oracles.grad(pred, gt)
        value = grad_error(AlphaMatte(values=pred), AlphaMatte(values=gt))
        assert value > 0
        assert value == pytest.approx(expected, rel=1e-6)

    def test_too_small(self, random_matte):
        from errors import ImageTooSmall
        from metrics import grad_error

        with pytest.raises(ImageTooSmall):
            grad_error(random_matte(12, 12), random_matte(12, 12))

    def test_symmetric(self, rng):
        from metrics import grad_error

        pred, gt = _pair(rng)
        assert grad_error(pred, gt) == pytest.approx(grad_error(gt, pred), rel=1e-12)


# ── Conn ──────────────────────────────────────────────────────────────────────


class TestConnError:

    def test_solid_square_is_zero(self):
        from metrics import conn_error
        from models import AlphaMatte

        values = np.zeros((12, 12))
        values[3:9, 3:9] = 1.0
        m = AlphaMatte(values=values)
        assert conn_error(m, m) == 0.0

    def test_detached_blob_matches_flood_fill(self):
        from metrics import conn_error
        from models import AlphaMatte

        gt = np.zeros((12, 12))
        gt[1:6, 1:6] = 1.0
        gt[6, 1:6] = 0.5
        pred = gt.copy()
        pred[8:11, 8:11] = 0.6  # not connected to the opaque square
        pred[6, 3] = 0.35
        expected = oracles.conn(pred, gt)
        value = conn_error(AlphaMatte(values=pred), AlphaMatte(values=gt))
        assert value > 0
        assert value == pytest.approx(expected, rel=1e-9)

    def test_hand_computed_half_plane(self):
        """Opaque left half in both; pred 0.2 on the right, gt 0 there."""
        from metrics import conn_error
        from models import AlphaMatte

        gt = np.zeros((16, 16))
        gt[:, :8] = 1.0
        pred = gt.copy()
        pred[:, 8:] = 0.2
        value = conn_error(AlphaMatte(values=pred), AlphaMatte(values=gt))
        assert value == pytest.approx(128 * 0.2 / 1000)

    def test_no_opaque_region_warns(self, random_matte):
        from errors import NoFullyOpaqueRegionWarning
        from metrics import conn_error

        with pytest.warns(NoFullyOpaqueRegionWarning):
            value = conn_error(random_matte(8, 8, opaque=False), random_matte(8, 8, opaque=False))
        assert value == 0.0

    def test_largest_component_tie_goes_first(self):
        from metrics import largest_component

        binary = np.zeros((3, 5), dtype=bool)
        binary[0, 0:2] = True
        binary[2, 3:5] = True
        out = largest_component(binary)
        assert out[0, 0] and out[0, 1] and not out[2, 3]

    def test_thresholds(self):
        from metrics import thresholds

        assert thresholds(0.1) == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


# ── Oracle Equivalence & Laws ─────────────────────────────────────────────────


class TestOracleEquivalence:
    """Random pairs against the brute-force implementations."""

    def test_random_pairs(self, rng):
        from metrics import conn_error, grad_error, mse, sad

        for _ in range(200):
            pred, gt = _pair(rng)
            p, g = pred.values, gt.values
            assert sad(pred, gt) == pytest.approx(oracles.sad(p, g), rel=1e-6)
            assert mse(pred, gt) == pytest.approx(oracles.mse(p, g), rel=1e-6)
            assert grad_error(pred, gt) == pytest.approx(oracles.grad(p, g), rel=1e-6)
            assert conn_error(pred, gt) == pytest.approx(oracles.conn(p, g), rel=1e-6, abs=1e-12)

    def test_random_pairs_in_region(self, rng, random_mask):
        from metrics import conn_error, grad_error, mse, sad

        for _ in range(20):
            pred, gt = _pair(rng)
            region = random_mask(16, 16)
            p, g, r = pred.values, gt.values, region.bool_values
            assert sad(pred, gt, region) == pytest.approx(oracles.sad(p, g, r), rel=1e-6)
            assert mse(pred, gt, region) == pytest.approx(oracles.mse(p, g, r), rel=1e-6)
            assert grad_error(pred, gt, region) == pytest.approx(oracles.grad(p, g, r), rel=1e-6)
            assert conn_error(pred, gt, region) == pytest.approx(oracles.conn(p, g, r), rel=1e-6, abs=1e-12)

    def test_zero_law(self, random_matte):
        from metrics import conn_error, grad_error, mse, sad

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for _ in range(50):
                m = random_matte(16, 16)
                assert sad(m, m) < 1e-9
                assert mse(m, m) < 1e-9
                assert grad_error(m, m) < 1e-9
                assert conn_error(m, m) < 1e-9

    def test_full_region_equals_whole_image(self, rng):
        from metrics import conn_error, grad_error, mse, sad
        from models import BinaryMask

        pred, gt = _pair(rng)
        full = BinaryMask(values=np.ones((16, 16)))
        for fn in (sad, mse, grad_error, conn_error):
            assert fn(pred, gt, full) == fn(pred, gt)

    def test_symmetry(self, rng):
        from metrics import conn_error, mse, sad

        pred, gt = _pair(rng)
        for fn in (sad, mse, conn_error):
            assert fn(pred, gt) == pytest.approx(fn(gt, pred), rel=1e-12)
