# tests/test_linear_modes.py
# 수직 프로파일, 경우 분류, 핵 모드와 선형 방정식 잔차, 핵 차원

import numpy as np
import pytest

from core import (
    ChebyshevGrid,
    DispersionMismatchError,
    Lattice,
    NotCaseOneError,
    PhysicalParams,
    ResonanceError,
    ZeroWaveVectorError,
)
from modules.dispersion import kappa
from modules.linear_modes import (
    build_case3_mode,
    build_kernel_mode,
    case4_eta_hat,
    classify_case,
    kernel_dimension,
    mode_profiles,
    phi_profile,
    vertical_profile,
)

# 경우 III: α² − |k|² = π² (d = 1, |k| = 1)
CASE3_PARAMS = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=float(np.sqrt(np.pi ** 2 + 1.0)))


@pytest.fixture(scope="module")
def grid():
    return ChebyshevGrid(24, 1.0)


# ── 수직 프로파일 ─────────────────────────────────────────────────────────────
@pytest.mark.parametrize("alpha, k_norm", [
    (0.5, 2.0),        # 지수 감쇠 가지
    (2.0, 1.0),        # 진동 가지
    (0.5, 0.5),        # 분기점 (급수)
    (0.0, 1.3),        # 비회전
])
def test_vertical_profile_boundary_values_and_ode(grid, alpha, k_norm):
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=alpha)
    phi, dphi, ddphi = vertical_profile(grid.nodes, k_norm, params)
    assert phi[0] == pytest.approx(1.0, abs=1e-13)
    assert phi[-1] == pytest.approx(0.0, abs=1e-13)
    assert np.max(np.abs(grid.diff @ phi - dphi)) < 1e-9
    assert np.allclose(ddphi, (k_norm ** 2 - alpha ** 2) * phi, atol=1e-13)


def test_profile_slope_at_surface_is_kappa(ref_params):
    _, dphi, _ = vertical_profile(np.array([0.0]), 2.0, ref_params)
    assert dphi[0] == pytest.approx(kappa(2.0, ref_params), rel=1e-12)


def test_phi_profile_scalar(ref_params):
    assert isinstance(phi_profile(-0.5, 2.0, ref_params), float)


def test_vertical_profile_resonance():
    with pytest.raises(ResonanceError):
        vertical_profile(np.array([-0.5]), 1.0, CASE3_PARAMS)


# ── 경우 분류 ────────────────────────────────────────────────────────────────
def test_classify_cases(ref_params, ref_lattice):
    assert classify_case(ref_lattice.k1, ref_params).tag == "I"
    assert classify_case([0.0, 0.0], ref_params).tag == "II"
    info = classify_case([1.0, 0.0], CASE3_PARAMS)
    assert (info.tag, info.n) == ("III", 1)
    odd = classify_case([0.0, 0.0], PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=np.pi))
    assert (odd.tag, odd.n, odd.parity) == ("IV", 1, "odd")
    even = classify_case([0.0, 0.0], PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=2.0 * np.pi))
    assert (even.tag, even.n, even.parity) == ("IV", 2, "even")


# ── 핵 모드 ──────────────────────────────────────────────────────────────────
def test_kernel_dimension_ref(ref_c_star, ref_lattice, ref_params, grid):
    info = kernel_dimension(ref_c_star, ref_lattice, ref_params, grid.nodes)
    assert info.dimension == 2
    assert set(info.indices) == {(1, 0), (0, 1)}
    for mode in info.modes:
        res = mode.residuals(ref_params)
        assert set(res) == {"beltrami", "divergence", "bottom", "kinematic", "dynamic"}
        assert max(res.values()) < 1e-9


def test_kernel_mode_surface_is_cosine(ref_c_star, ref_lattice, ref_params, grid):
    mode = build_kernel_mode(ref_lattice.k1, ref_c_star, 0.5, ref_params, grid.nodes)
    assert mode.physical_surface(0.0, 0.0) == pytest.approx(1.0)
    x, y = 0.3, -0.1
    assert mode.physical_surface(x, y) == pytest.approx(np.cos(ref_lattice.k1 @ [x, y]))
    vel = mode.physical_velocity(x, y)
    assert vel.shape == (3, grid.nodes.size)
    assert np.all(np.isfinite(vel))


def test_mode_profiles_linear_in_amplitude(ref_c_star, ref_lattice, ref_params, grid):
    a = mode_profiles(ref_lattice.k2, ref_c_star, 0.5, ref_params, grid.nodes)
    b = mode_profiles(ref_lattice.k2, ref_c_star, 1.0, ref_params, grid.nodes)
    assert np.allclose(b.profiles, 2.0 * a.profiles, atol=1e-14)


def test_kernel_mode_preconditions(ref_c_star, ref_lattice, ref_params, grid):
    with pytest.raises(DispersionMismatchError):
        build_kernel_mode(ref_lattice.k1, 1.01 * ref_c_star, 0.5, ref_params, grid.nodes)
    with pytest.raises(ZeroWaveVectorError):
        build_kernel_mode([0.0, 0.0], ref_c_star, 0.5, ref_params, grid.nodes)
    with pytest.raises(NotCaseOneError):
        build_kernel_mode([1.0, 0.0], [1.0, 0.0], 0.5, CASE3_PARAMS, grid.nodes)


def test_case3_mode_satisfies_linear_equations(grid):
    mode = build_case3_mode([1.0, 0.0], CASE3_PARAMS, grid.nodes)
    assert mode.case == "III"
    assert mode.eta_hat == 0.0
    res = mode.residuals(CASE3_PARAMS)
    assert max(res.values()) < 1e-8


def test_case4_constant_surface():
    params = PhysicalParams(g=2.0, sigma=1.0, d=1.0, alpha=2.0 * np.pi)
    assert case4_eta_hat([1.0, 2.0], [3.0, -1.0], params) == pytest.approx(-0.5)


def test_kernel_dimension_requires_nonresonance(grid):
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=np.pi)
    lat = Lattice.symmetric(2.0, np.pi / 3)
    with pytest.raises(ResonanceError):
        kernel_dimension([1.0, 0.0], lat, params, grid.nodes)
