import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import pdmp_verify as pv
from conftest import make_frozen_chars

UNIT_SQUARE = pv.ModeBoxSet((0,), np.array([0.0, 0.0]), np.array([1.0, 1.0]))


class TestCappedDistance:
    def test_inside_is_zero(self):
        assert pv.capped_distance(UNIT_SQUARE, pv.HybridState(0, [0.5, 0.5])) == 0.0

    def test_face_distance_capped(self):
        assert pv.capped_distance(UNIT_SQUARE, pv.HybridState(0, [2.0, 0.5])) == 1.0

    def test_corner_distance_capped(self):
        # true corner distance sqrt(2) caps at 1
        assert pv.capped_distance(UNIT_SQUARE, pv.HybridState(0, [2.0, 2.0])) == 1.0
        near = pv.capped_distance(UNIT_SQUARE, pv.HybridState(0, [1.3, 1.4]))
        assert near == pytest.approx(0.5)

    def test_excluded_mode_is_one(self):
        assert pv.capped_distance(UNIT_SQUARE, pv.HybridState(3, [0.5, 0.5])) == 1.0

    @given(
        st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3)
    )
    @settings(max_examples=200, deadline=None)
    def test_lipschitz_within_mode(self, a, b, c, d):
        x = np.array([[a, b]])
        y = np.array([[c, d]])
        m = np.zeros(1, dtype=int)
        dx = UNIT_SQUARE.capped_distance_batch(m, x)[0]
        dy = UNIT_SQUARE.capped_distance_batch(m, y)[0]
        assert abs(dx - dy) <= np.linalg.norm(x - y) + 1e-12


class TestComplementGap:
    def test_outside_interior_is_zero(self):
        m = np.zeros(2, dtype=int)
        xs = np.array([[1.0, 0.5], [1.5, 0.5]])
        assert (UNIT_SQUARE.complement_gap_batch(m, xs) == 0).all()

    def test_inside_gap_capped(self):
        box = pv.ModeBoxSet((0,), np.array([0.0]), np.array([10.0]))
        m = np.zeros(1, dtype=int)
        assert box.complement_gap_batch(m, np.array([[5.0]]))[0] == 1.0
        assert box.complement_gap_batch(m, np.array([[0.3]]))[0] == pytest.approx(0.3)

    def test_everything_set_has_gap_one(self):
        allspace = pv.ModeBoxSet((0, 1), np.array([-math.inf]), np.array([math.inf]))
        m = np.array([0, 1])
        xs = np.array([[0.0], [123.0]])
        assert (allspace.complement_gap_batch(m, xs) == 1.0).all()


class TestNormalCone:
    def test_interior_point_has_empty_cone(self):
        cone = pv.normal_cone(UNIT_SQUARE, pv.HybridState(0, [0.5, 0.5]))
        assert cone.generators == ()

    def test_corner_of_invariant_box(self, phage_params):
        box = phage_params.invariant_box(0.2)
        cone = pv.normal_cone(box, pv.HybridState(0, [0.0, 0.2]))
        gens = {tuple(g) for g in cone.generators}
        assert gens == {(-1.0, 0.0), (0.0, 1.0)}

    def test_face_of_invariant_box(self, phage_params):
        box = phage_params.invariant_box(0.2)
        x1 = 2 * phage_params.km1 * 0.2 / phage_params.kd
        cone = pv.normal_cone(box, pv.HybridState(0, [x1, 0.1]))
        gens = {tuple(g) for g in cone.generators}
        assert gens == {(1.0, 0.0)}

    def test_unit_norm_generators_and_corner_count(self):
        cone = pv.normal_cone(UNIT_SQUARE, pv.HybridState(0, [0.0, 0.0]))
        assert len(cone.generators) == 2
        for g in cone.generators:
            assert np.linalg.norm(g) == pytest.approx(1.0)

    def test_point_outside_rejected(self):
        with pytest.raises(ValueError):
            pv.normal_cone(UNIT_SQUARE, pv.HybridState(0, [2.0, 0.0]))


class TestEscapeMass:
    def test_zero_rate(self):
        chars = make_frozen_chars(dim=2, mode_count=1)
        assert pv.jump_escape_mass(chars, UNIT_SQUARE, pv.HybridState(0, [0.5, 0.5])) == 0.0

    def test_onoff_band_never_leaks(self, cook_chars, cook_band):
        for mode in (0, 1):
            for x in (0.0, 0.5, 2.0):
                s = pv.HybridState(mode, [x])
                assert pv.jump_escape_mass(cook_chars, cook_band, s) == 0.0

    def test_phage_binding_leaves_single_mode_set(self, phage_chars, phage_params):
        box = phage_params.invariant_box(0.2)
        x2 = 1.5  # gate fully open
        s = pv.HybridState(0, [0.2, x2])
        expected = (phage_params.k2 + phage_params.k3) * x2
        assert pv.jump_escape_mass(phage_chars, box, s) == pytest.approx(expected)


class TestCheckInvariance:
    def test_canonical_band_passes(self, onoff_pinned):
        chars = pv.build_onoff(onoff_pinned)
        report = pv.check_invariance(chars, onoff_pinned.canonical_set(), 33)
        assert report.passed

    def test_outward_consumption_fails_at_lower_face(self, cook_chars):
        box = pv.ModeBoxSet((0, 1), np.array([0.3]), np.array([2.0]))
        report = pv.check_invariance(cook_chars, box, 33)
        assert not report.passed
        worst = report.worst
        assert worst["condition"] == "flow"
        assert worst["point"] == [0.3]
        assert worst["direction"] == [-1.0]
        assert worst["value"] == pytest.approx(0.3)  # consumption rate at the face

    def test_phage_corner_box_passes(self, phage_chars, phage_params):
        report = pv.check_invariance(phage_chars, phage_params.invariant_box(0.2), 33)
        assert report.passed

    def test_phage_box_above_threshold_fails(self, phage_params):
        chars = pv.build_phage(phage_params)
        eps = 0.6  # above the 0.25 threshold: the dimer face leaks outward
        box = pv.ModeBoxSet(
            (0,), np.array([0.0, 0.0]),
            np.array([2 * phage_params.km1 * eps / phage_params.kd, eps]),
        )
        report = pv.check_invariance(chars, box, 33)
        assert not report.passed

    def test_unbounded_box_rejected(self, cook_chars):
        box = pv.ModeBoxSet((0, 1), np.array([0.0]), np.array([math.inf]))
        with pytest.raises(ValueError):
            pv.check_invariance(cook_chars, box, 33)

    def test_report_serializes(self, cook_chars, cook_band):
        report = pv.check_invariance(cook_chars, cook_band, 17)
        payload = report.to_json()
        assert payload["pass"] is True
        assert payload["grid"]["density"] == 17
        assert payload["tolerance"] == 1e-9


class TestCheckViability:
    def test_invariance_implies_viability(self, onoff_pinned):
        chars = pv.build_onoff(onoff_pinned)
        band = onoff_pinned.canonical_set()
        assert pv.check_invariance(chars, band, 17).passed
        assert pv.check_viability(chars, band, 17).passed

    def test_frozen_model_passes_everywhere(self):
        chars = make_frozen_chars(dim=2, mode_count=1)
        assert pv.check_viability(chars, UNIT_SQUARE, 9).passed

    def test_cook_band_viable(self, cook_chars, cook_band):
        assert pv.check_viability(cook_chars, cook_band, 33).passed

    def test_conic_sampling_catches_corner_violation(self):
        # outward diagonal drift at the corner defeats both face normals alone
        def flow_batch(m, x, u):
            return np.full_like(x, 1.0)

        chars = pv.PdmpCharacteristics(
            1, 2,
            flow=lambda s, u: np.ones(2),
            rate=lambda s, u: 0.0,
            kernel=lambda s, u: [],
            flow_batch=flow_batch,
            rate_batch=lambda m, x, u: np.zeros(len(m)),
        )
        report = pv.check_viability(chars, UNIT_SQUARE, 9)
        assert not report.passed
        assert report.worst["condition"] == "boundary-inf"
