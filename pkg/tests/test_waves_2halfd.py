# tests/test_waves_2halfd.py
# 2D 유선함수 리프트, 2½차원 흐름 역추출, 2D 계 잔차

import numpy as np
import pytest

from core import (
    ConfigError,
    Discretization,
    Field3D,
    LaminarFlow,
    NotTwoHalfDError,
    PhysicalParams,
    SurfaceProfile,
)
from modules.flattened import dotted_curl, dotted_div
from modules.waves_2halfd import (
    StreamFunction2D,
    cellular_stream,
    detect_mode,
    extract_2d,
    laminar_stream,
    lift_2d_to_3d,
)


@pytest.fixture(scope="module")
def branch_solution(ref_solver):
    return ref_solver.solve_branch(1e-2, fixed_index=1)


# ── 리프트 ───────────────────────────────────────────────────────────────────
@pytest.mark.parametrize("mode", [(0, 1), (1, 0), (1, 1)])
def test_laminar_stream_lifts_to_laminar_flow(small_setup, ref_c_star, mode):
    sf = laminar_stream(small_setup, ref_c_star, mode=mode)
    field = lift_2d_to_3d(sf)
    expected = Field3D.from_laminar(small_setup, LaminarFlow(*ref_c_star))
    assert np.max(np.abs(field.coeffs - expected.coeffs)) < 1e-10 * expected.max_abs()


def test_cellular_stream_lifts_to_beltrami_field(small_setup):
    sf = cellular_stream(small_setup, 1e-2, beta=0.1, mode=(0, 1))
    field = lift_2d_to_3d(sf)
    alpha = small_setup.params.alpha
    resid = dotted_curl(small_setup, field.coeffs) - alpha * field.coeffs
    assert np.max(np.abs(resid)) < 1e-8 * field.max_abs()
    assert np.max(np.abs(dotted_div(small_setup, field.coeffs))) < 1e-8 * field.max_abs()
    # 바닥에서 수직 속도 0
    assert np.max(np.abs(field.coeffs[2, -1])) < 1e-12


def test_cellular_stream_needs_decaying_profile(ref_lattice):
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=3.0)
    setup = Discretization(params, ref_lattice, N=2, M=16)
    with pytest.raises(ConfigError):
        cellular_stream(setup, 1e-2)


# ── 추출 ─────────────────────────────────────────────────────────────────────
def test_lift_then_extract_recovers_stream(small_setup):
    sf = cellular_stream(small_setup, 1e-2, beta=0.1, mode=(0, 1))
    field = lift_2d_to_3d(sf)
    eta = sf.surface()
    assert detect_mode(field, eta) == (0, 1)
    ex = extract_2d(field, eta)
    # m₁ = 0 게이지 → β 는 ψ 상수항으로 흡수됨
    target = sf.without_beta()
    assert ex.stream.beta == pytest.approx(0.0, abs=1e-10)
    assert np.max(np.abs(ex.stream.psi_hat - target.psi_hat)) < 1e-10
    mid = target.psi_hat.shape[0] // 2
    assert ex.stream.m2 == pytest.approx(float(target.psi_hat[mid, 0].real), abs=1e-10)
    assert ex.residuals["affine"] < 1e-10
    assert ex.residuals["pde"] < 1e-8


def test_extract_rejects_three_dimensional_flow(small_setup):
    a = lift_2d_to_3d(cellular_stream(small_setup, 1e-2, mode=(0, 1)))
    b = lift_2d_to_3d(cellular_stream(small_setup, 1e-2, mode=(1, 0)))
    with pytest.raises(NotTwoHalfDError):
        extract_2d(a + b, SurfaceProfile.zeros(small_setup), mode=(0, 1))


def test_branch_solution_is_two_dimensional_wave(branch_solution):
    sol = branch_solution
    assert sol.fixed_index == 1
    assert sol.t[0] == 0.0
    ex = extract_2d(sol.flow.u_dot, sol.eta, mode=(0, 1), Q=sol.Q)
    assert ex.residual_max < 1e-8
    assert ex.residuals["leakage"] < 1e-10
    frame = ex.stream.to_frame()
    assert list(frame.columns) == ["n", "z", "psi_re", "psi_im", "eta"]


# ── 입력 검증 ────────────────────────────────────────────────────────────────
@pytest.mark.parametrize("mode", [(0, 0), (2, 2)])
def test_invalid_direction(small_setup, ref_c_star, mode):
    with pytest.raises(ConfigError):
        laminar_stream(small_setup, ref_c_star, mode=mode)


def test_stream_shape_mismatch(small_setup):
    with pytest.raises(ConfigError):
        StreamFunction2D(small_setup, (0, 1), np.zeros((3, small_setup.M + 1)), np.zeros(3), 0.0)
