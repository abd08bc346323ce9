"""Cell-level coarse-graining tests."""

import warnings

import numpy as np
import pytest

from conftest import UNIT_CUBE, box_mesh, random_hex
from hexflow.coarsen import (
    CoarseningConfig,
    coarsen_cell,
    coarsen_sweep,
    face_area_weights,
    resolve_weights,
    uniform_weights,
)
from hexflow.hexmesh import build_mesh
from hexflow.state import FieldState


def single_cell_mesh(verts):
    return build_mesh(verts, [list(range(8))], [(0, f, "b") for f in range(6)])


def ported_state(nc, rng=None):
    """Fresh-port state (nodes stale), as seen right before a cell sweep."""
    s = FieldState.uniform(nc)
    if rng is not None:
        s.cell_T = rng.normal(size=nc)
        s.cell_u = rng.normal(size=(nc, 3))
        s.cell_p = rng.normal(size=nc)
        s.face_T = rng.normal(size=(nc, 6))
        s.face_u = rng.normal(size=(nc, 6, 3))
        s.face_p = rng.normal(size=(nc, 6))
    s.advance_ports()
    return s


def quiet_config(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return CoarseningConfig(**kw)


class TestWeights:
    def test_unit_cube_face_area_weights(self):
        mesh = single_cell_mesh(UNIT_CUBE)
        assert np.array_equal(face_area_weights(mesh), np.full((1, 6), 1.0 / 6.0))

    def test_stretched_box_weights(self):
        # 2x1x1 cell: x faces have area 1, the other four area 2, total 10
        mesh = single_cell_mesh(UNIT_CUBE * np.array([2.0, 1.0, 1.0]))
        want = np.array([[0.1, 0.1, 0.2, 0.2, 0.2, 0.2]])
        assert np.array_equal(face_area_weights(mesh), want)

    def test_random_hex_weights_match_norm_ratios(self):
        rng = np.random.default_rng(11)
        mesh = single_cell_mesh(random_hex(rng))
        w = face_area_weights(mesh)
        norms = np.array([np.linalg.norm(mesh.face_vecs[0, f]) for f in range(6)])
        assert np.allclose(w[0], norms / norms.sum(), rtol=1e-14, atol=0.0)
        assert abs(w.sum() - 1.0) < 1e-14
        assert w.min() > 0.0

    def test_uniform_weights(self):
        mesh = box_mesh(2, 1, 1)
        assert np.array_equal(uniform_weights(mesh), np.full((2, 6), 1.0 / 6.0))

    def test_custom_weights_resolution_and_validation(self):
        mesh = box_mesh(2, 1, 1)
        flat = np.array([0.5, 0.5, 0.0, 0.0, 0.0, 0.0])
        w = resolve_weights(mesh, quiet_config(scheme="custom", weights=flat))
        assert w.shape == (2, 6)
        assert np.array_equal(w[0], flat)
        with pytest.raises(ValueError, match="sum to 1"):
            resolve_weights(mesh, quiet_config(scheme="custom", weights=flat * 1.5))
        with pytest.raises(ValueError, match=">= 0"):
            bad = np.array([1.5, -0.5, 0.0, 0.0, 0.0, 0.0])
            resolve_weights(mesh, quiet_config(scheme="custom", weights=bad))
        with pytest.raises(ValueError, match="shape"):
            resolve_weights(mesh, quiet_config(scheme="custom", weights=np.ones((3, 6)) / 6))


class TestConfig:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError, match="period"):
            quiet_config(period=0)
        with pytest.raises(ValueError, match="period"):
            quiet_config(period=2.5)
        with pytest.raises(ValueError, match="scheme"):
            quiet_config(scheme="gaussian")
        with pytest.raises(ValueError, match="target"):
            quiet_config(targets=("vorticity",))
        with pytest.raises(ValueError, match="targets"):
            quiet_config(targets=())
        with pytest.raises(ValueError, match="custom"):
            quiet_config(scheme="custom")
        with pytest.raises(ValueError, match="custom"):
            quiet_config(scheme="uniform", weights=np.full(6, 1 / 6))

    def test_short_period_warns_but_builds(self):
        with pytest.warns(UserWarning, match="safety factor"):
            cfg = CoarseningConfig(period=3)
        assert cfg.period == 3
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            CoarseningConfig(period=10)  # at the factor: no warning


class TestCoarsenCell:
    def test_arithmetic_mean_example(self):
        ports = np.arange(1.0, 7.0)
        got = coarsen_cell(ports, np.full(6, 1.0 / 6.0))
        assert got == 3.5

    def test_constant_ports_exact_for_any_weights(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            c = rng.uniform(-1e3, 1e3)
            w = rng.dirichlet(np.ones(6))
            assert coarsen_cell(np.full(6, c), w) == c

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(6)
        ports = rng.normal(size=(40, 6))
        mesh = single_cell_mesh(random_hex(rng))
        w = np.broadcast_to(face_area_weights(mesh)[0], (40, 6))
        got = coarsen_cell(ports, w)
        want = np.array([np.dot(w[i], ports[i]) for i in range(40)])
        assert np.allclose(got, want, rtol=1e-13, atol=1e-15)

    def test_convexity(self):
        rng = np.random.default_rng(7)
        ports = rng.uniform(-50.0, 50.0, size=(500, 6))
        w = rng.dirichlet(np.ones(6), size=500)
        got = coarsen_cell(ports, w)
        assert (got >= ports.min(axis=1)).all()
        assert (got <= ports.max(axis=1)).all()


class TestSweep:
    def test_off_cycle_steps_are_bytewise_noops(self):
        rng = np.random.default_rng(8)
        mesh = box_mesh(2, 2, 1)
        cfg = CoarseningConfig(period=10)
        s = ported_state(mesh.n_cells, rng)
        before = s.copy()
        for step in range(1, 10):
            assert coarsen_sweep(mesh, s, cfg, step) is False
        for name in ("cell_T", "cell_u", "cell_p", "face_T", "face_u", "face_p"):
            assert np.array_equal(getattr(s, name), getattr(before, name))

    def test_due_step_replaces_velocity_and_preserves_skeleton(self):
        rng = np.random.default_rng(9)
        mesh = box_mesh(3, 2, 1)
        cfg = CoarseningConfig(period=10)
        s = ported_state(mesh.n_cells, rng)
        faces_before = (s.face_T.copy(), s.face_u.copy(), s.face_p.copy())
        T_before = s.cell_T.copy()
        p_before = s.cell_p.copy()
        assert coarsen_sweep(mesh, s, cfg, 20) is True
        w = face_area_weights(mesh)
        for k in range(3):
            want = coarsen_cell(s.face_u[:, :, k], w)
            assert np.array_equal(s.cell_u[:, k], want)
        # ports bit-identical, untargeted nodal fields untouched
        assert np.array_equal(s.face_T, faces_before[0])
        assert np.array_equal(s.face_u, faces_before[1])
        assert np.array_equal(s.face_p, faces_before[2])
        assert np.array_equal(s.cell_T, T_before)
        assert np.array_equal(s.cell_p, p_before)

    def test_temperature_target_and_spike_removal(self):
        mesh = single_cell_mesh(UNIT_CUBE)
        s = ported_state(1)
        s.face_T = np.array([[2.0, 2.0, 2.0, 2.0, 2.0, 2.0]])
        s.cell_T = np.array([900.0])  # synthetic spike the ports never saw
        cfg = quiet_config(period=1, targets=("temperature",))
        assert coarsen_sweep(mesh, s, cfg, 1) is True
        assert s.cell_T[0] == 2.0

    def test_constant_state_unchanged(self):
        mesh = box_mesh(2, 2, 2)
        s = FieldState.uniform(mesh.n_cells, T=4.25, u=(1.5, -2.0, 0.75), p=3.0)
        s.advance_ports()
        cfg = quiet_config(period=1, targets=("velocity", "temperature", "pressure"))
        assert coarsen_sweep(mesh, s, cfg, 7) is True
        assert np.array_equal(s.cell_u, np.tile([1.5, -2.0, 0.75], (8, 1)))
        assert np.array_equal(s.cell_T, np.full(8, 4.25))
        assert np.array_equal(s.cell_p, np.full(8, 3.0))

    def test_idempotent_once_ports_fixed(self):
        rng = np.random.default_rng(10)
        mesh = box_mesh(2, 1, 1)
        cfg = quiet_config(period=1)
        s = ported_state(mesh.n_cells, rng)
        coarsen_sweep(mesh, s, cfg, 1)
        first = s.cell_u.copy()
        coarsen_sweep(mesh, s, cfg, 2)
        assert np.array_equal(s.cell_u, first)

    def test_requires_fresh_ports(self):
        mesh = box_mesh(2, 1, 1)
        s = FieldState.uniform(mesh.n_cells)  # nodes ahead of ports
        with pytest.raises(ValueError, match="fresh ports"):
            coarsen_sweep(mesh, s, quiet_config(period=1), 1)
