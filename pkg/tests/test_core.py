# tests/test_core.py
# 공유 모델: 물리 상수/격자 검증, Chebyshev 격자, 스펙트럴 변환, 표면·유속장 타입

import json

import numpy as np
import pytest

from core import (
    BeltramiWaveError,
    ChebyshevGrid,
    ClassViolationError,
    ConfigError,
    DegenerateDomainError,
    Discretization,
    Field3D,
    Lattice,
    LaminarFlow,
    OutOfRangeError,
    PhysicalParams,
    ResonanceError,
    SurfaceProfile,
    bernoulli_Q,
    eval_field,
    flatten_geometry,
    laminar_eval,
    lattice_enumerate,
)


# ── PhysicalParams ───────────────────────────────────────────────────────────
@pytest.mark.parametrize("field", ["g", "sigma", "d"])
def test_params_reject_nonpositive(field):
    values = {"g": 1.0, "sigma": 1.0, "d": 1.0, "alpha": 0.5}
    values[field] = 0.0
    with pytest.raises(ConfigError):
        PhysicalParams(**values)


def test_params_accept_any_alpha():
    for alpha in (-2.0, 0.0, 3.0):
        assert PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=alpha).alpha == alpha


def test_restoring_coefficient(ref_params):
    assert ref_params.restoring(2.0) == pytest.approx(5.0)


# ── Lattice ──────────────────────────────────────────────────────────────────
def test_lattice_duality_from_periods():
    lat = Lattice.from_periods([2.0, 0.5], [0.3, 1.7])
    gram = np.vstack([lat.k1, lat.k2]) @ np.vstack([lat.lambda1, lat.lambda2]).T
    assert np.allclose(gram, 2.0 * np.pi * np.eye(2), atol=1e-12)


def test_lattice_from_dual_roundtrip():
    lat = Lattice.from_dual([1.0, 0.2], [-0.4, 1.3])
    again = Lattice.from_periods(lat.lambda1, lat.lambda2)
    assert np.allclose(again.k1, lat.k1, atol=1e-13)
    assert np.allclose(again.k2, lat.k2, atol=1e-13)


def test_symmetric_lattice_generators(ref_lattice):
    assert np.allclose(ref_lattice.k1, [1.0, np.sqrt(3.0)])
    assert np.allclose(ref_lattice.k2, [1.0, -np.sqrt(3.0)])


def test_parallel_generators_rejected():
    with pytest.raises(ConfigError):
        Lattice.from_dual([1.0, 1.0], [2.0, 2.0])


@pytest.mark.parametrize("omega", [0.0, np.pi / 2, 2.0])
def test_symmetric_lattice_omega_range(omega):
    with pytest.raises(ConfigError):
        Lattice.symmetric(2.0, omega)


def test_lattice_enumerate_is_complete_and_sorted(ref_lattice):
    entries = lattice_enumerate(ref_lattice, 4.5)
    norms = [np.linalg.norm(k) for _, _, k in entries]
    assert np.all(np.diff(norms) > -1e-12)
    pairs = {(a, b) for a, b, _ in entries}
    assert len(pairs) == len(entries)
    assert (0, 0) in pairs and (1, 0) in pairs and (-1, 1) in pairs
    # 반대 부호 대칭
    assert all((-a, -b) in pairs for a, b in pairs)
    assert max(norms) <= 4.5 + 1e-12


# ── 예외 레코드 ───────────────────────────────────────────────────────────────
def test_error_record_is_json_serializable():
    err = ResonanceError("공명", offending=[(1, 0)], k_norm=np.array([1.5]))
    record = err.to_record()
    assert record["error"] == "resonance"
    json.dumps(record)
    assert isinstance(err, BeltramiWaveError)


# ── ChebyshevGrid ─────────────────────────────────────────────────────────────
def test_grid_orientation():
    grid = ChebyshevGrid(16, 2.0)
    assert grid.nodes[0] == pytest.approx(0.0)
    assert grid.nodes[-1] == pytest.approx(-2.0)


def test_grid_differentiation_and_integration():
    grid = ChebyshevGrid(24, 1.0)
    z = grid.nodes
    f = np.sin(3.0 * z) + z ** 3
    df = 3.0 * np.cos(3.0 * z) + 3.0 * z ** 2
    assert np.max(np.abs(grid.diff @ f - df)) < 1e-10
    exact = (-np.cos(0.0) + np.cos(-3.0)) / 3.0 + (0.0 - 1.0) / 4.0
    assert grid.integrate(f) == pytest.approx(exact, abs=1e-13)
    cum = grid.cumulative @ f
    assert cum[-1] == pytest.approx(0.0, abs=1e-14)
    assert cum[0] == pytest.approx(exact, abs=1e-13)


def test_grid_interpolation():
    grid = ChebyshevGrid(20, 1.0)
    values = np.exp(grid.nodes)
    assert float(grid.interpolate(values, -0.37)) == pytest.approx(np.exp(-0.37), abs=1e-13)


def test_grid_minimum_nodes():
    with pytest.raises(ConfigError):
        ChebyshevGrid(3, 1.0)


# ── Discretization / 변환 ─────────────────────────────────────────────────────
def test_spectral_roundtrip(small_setup, rng):
    s = small_setup
    coeffs = rng.standard_normal((s.size, s.size)) + 1j * rng.standard_normal((s.size, s.size))
    back = s.to_spectral(s.to_physical(coeffs))
    assert np.max(np.abs(back - coeffs)) < 1e-13


def test_product_is_dealiased(small_setup):
    s = small_setup
    eta = SurfaceProfile.from_modes(s, {(1, 0): 0.5})
    square = s.to_spectral(eta.physical() ** 2).real
    # cos² = ½ + ½cos(2k₁·x) → 계수 ¼ 씩
    assert square[s.zero_index] == pytest.approx(0.5)
    assert square[s.index(2, 0)] == pytest.approx(0.25)
    assert square[s.index(1, 0)] == pytest.approx(0.0, abs=1e-15)


def test_index_out_of_range(small_setup):
    with pytest.raises(OutOfRangeError):
        small_setup.index(small_setup.N + 1, 0)


def test_truncation_validation(ref_params, ref_lattice):
    with pytest.raises(ConfigError):
        Discretization(ref_params, ref_lattice, N=0, M=16)


# ── SurfaceProfile ───────────────────────────────────────────────────────────
def test_surface_from_modes_is_cosine(small_setup):
    s = small_setup
    eta = SurfaceProfile.from_modes(s, {(0, 1): 0.25})
    k2 = s.lattice.k2
    assert eta.evaluate(0.3, -0.2) == pytest.approx(0.5 * np.cos(k2 @ [0.3, -0.2]))
    gx, gy = eta.gradient_at(0.3, -0.2)
    assert gx == pytest.approx(-0.5 * k2[0] * np.sin(k2 @ [0.3, -0.2]))
    assert gy == pytest.approx(-0.5 * k2[1] * np.sin(k2 @ [0.3, -0.2]))


def test_surface_rejects_odd_coefficients(small_setup):
    s = small_setup
    arr = np.zeros((s.size, s.size))
    arr[s.index(1, 0)] = 1.0
    with pytest.raises(ClassViolationError):
        SurfaceProfile(arr, s)


def test_surface_domain_check(small_setup):
    eta = SurfaceProfile.from_modes(small_setup, {(0, 0): -1.2})
    with pytest.raises(DegenerateDomainError):
        eta.ensure_domain()


def test_surface_arithmetic(small_setup):
    a = SurfaceProfile.from_modes(small_setup, {(1, 0): 0.1})
    b = SurfaceProfile.from_modes(small_setup, {(0, 1): 0.2})
    total = (a + b).scaled(2.0) - b
    assert total.coefficient(1, 0) == pytest.approx(0.2)
    assert total.coefficient(0, 1) == pytest.approx(0.2)


# ── LaminarFlow / Field3D ────────────────────────────────────────────────────
def test_laminar_profile_and_Q(ref_params):
    flow = LaminarFlow(1.5, -0.5)
    assert np.allclose(laminar_eval(flow, ref_params, 0.0), [1.5, -0.5, 0.0])
    assert bernoulli_Q(flow) == pytest.approx(1.25)
    u1, u2 = flow.profiles(ref_params.alpha, -0.7)
    assert u1 ** 2 + u2 ** 2 == pytest.approx(2.5)


def test_field_from_laminar_evaluates(small_setup):
    flow = LaminarFlow(1.0, 2.0)
    field = Field3D.from_laminar(small_setup, flow)
    value = eval_field(field, 0.4, 0.1, -0.3)
    expected = laminar_eval(flow, small_setup.params, -0.3)
    assert np.allclose(value, expected, atol=1e-12)
    assert field.class_leakage() == 0.0


def test_eval_field_range(small_setup):
    field = Field3D.zeros(small_setup)
    with pytest.raises(OutOfRangeError):
        eval_field(field, 0.0, 0.0, 0.5)


def test_flatten_geometry_jacobian(small_setup):
    eta = SurfaceProfile.from_modes(small_setup, {(0, 0): 0.1})
    geom = flatten_geometry(eta, 1.0, (0.0, 0.0, -0.5))
    assert geom.J == pytest.approx(1.1)
    assert np.allclose(geom.f3, [0.0, 0.0, 1.1])
