# tests/test_flattened.py
# 평탄 좌표 연산자, C_α 역연산, v(η, c), 환원 연산자 H 의 선형화

import numpy as np
import pytest

from core import Discretization, Field3D, LaminarFlow, PhysicalParams, SurfaceProfile
from modules.dispersion import rho
from modules.linear_modes import mode_profiles
from modules.flattened import (
    CurlRHS,
    DivergenceError,
    FlattenedProblem,
    curl_solver,
    dotted_div,
    evaluate_H,
    nonlinearity_G,
    nonlinearity_N,
    pullback_values,
    pushforward_values,
    residual_report,
    solve_C_alpha,
    solve_v_of_eta,
    symmetry_leakage,
)


@pytest.fixture(scope="module")
def tiny_setup(ref_params, ref_lattice):
    return Discretization(ref_params, ref_lattice, N=3, M=16)


def _field_in_Y(setup: Discretization, rng) -> Field3D:
    """바닥 조건, k = 0 적분 조건, 모드별 발산 0 을 만족하는 임의 장."""
    D = setup.grid.diff
    i0 = setup.zero_index

    z = setup.grid.nodes
    d = setup.params.d
    modes = (setup.size, setup.size)

    def _amp():
        return rng.standard_normal(modes) + 1j * rng.standard_normal(modes)

    # 매끄러운 z 프로파일의 무작위 조합
    v3 = (_amp()[None] * ((z + d) * np.exp(z))[:, None, None]
          + _amp()[None] * np.sin(np.pi * (z + d) / d)[:, None, None])
    v3[-1] = 0.0
    v3[:, i0[0], i0[1]] = 0.0
    dv3 = np.einsum("ij,jab->iab", D, v3)
    beta = _amp()[None] * np.cos(z)[:, None, None] + _amp()[None] * (z * z)[:, None, None]
    safe = np.where(setup.k_sq > 0.0, setup.k_sq, 1.0)
    # v_h = ik(Dv₃)/|k|² + β k⊥
    v1 = 1j * setup.kx * dv3 / safe - beta * setup.ky
    v2 = 1j * setup.ky * dv3 / safe + beta * setup.kx

    for comp in (v1, v2):
        prof = rng.standard_normal() * np.cos(2.0 * z) + rng.standard_normal() * z
        comp[:, i0[0], i0[1]] = prof - setup.grid.integrate(prof) / setup.params.d
    return Field3D(np.stack([v1, v2, v3]), setup)


# ── C_α ──────────────────────────────────────────────────────────────────────
@pytest.mark.parametrize("seed", range(20))
def test_curl_inverse_roundtrip(small_setup, seed):
    v = _field_in_Y(small_setup, np.random.default_rng(seed))
    assert np.max(np.abs(dotted_div(small_setup, v.coeffs))) < 1e-9 * v.max_abs()
    solver = curl_solver(small_setup)
    back = solver.solve(solver.apply(v))
    assert np.max(np.abs(back.coeffs - v.coeffs)) < 1e-9 * max(1.0, v.max_abs())


def test_curl_solver_is_cached(tiny_setup):
    assert curl_solver(tiny_setup) is curl_solver(tiny_setup)


def test_curl_inverse_zero_rhs(tiny_setup):
    n = tiny_setup.size
    out = solve_C_alpha(CurlRHS(Field3D.zeros(tiny_setup), np.zeros((n, n))))
    assert out.max_abs() == 0.0


def test_curl_inverse_harmonic_limit(ref_lattice):
    # α = 0, w = 0: v₃ = f·sinh(|k|(z+d))/sinh(|k|d)
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=0.0)
    setup = Discretization(params, ref_lattice, N=2, M=24)
    f = np.zeros((setup.size, setup.size), dtype=complex)
    idx = setup.index(1, 0)
    f[idx] = 1.0
    v = solve_C_alpha(CurlRHS(Field3D.zeros(setup), f))
    kn = float(setup.k_norm[idx])
    z = setup.grid.nodes
    exact = np.sinh(kn * (z + 1.0)) / np.sinh(kn)
    assert np.max(np.abs(v.coeffs[2, :, idx[0], idx[1]] - exact)) < 1e-10
    # 다른 모드는 0
    mask = np.ones((setup.size, setup.size), dtype=bool)
    mask[idx] = False
    assert np.max(np.abs(v.coeffs[2][:, mask])) < 1e-14


def test_curl_inverse_rejects_divergent_rhs(tiny_setup):
    w = np.zeros((3, tiny_setup.M + 1, tiny_setup.size, tiny_setup.size), dtype=complex)
    idx = tiny_setup.index(1, 0)
    w[2, :, idx[0], idx[1]] = tiny_setup.grid.nodes + 1.0
    n = tiny_setup.size
    with pytest.raises(DivergenceError):
        solve_C_alpha(CurlRHS(Field3D(w, tiny_setup), np.zeros((n, n))))


# ── 좌표 변환 / N ────────────────────────────────────────────────────────────
def test_pullback_inverts_pushforward(small_setup):
    eta = SurfaceProfile.from_modes(small_setup, {(1, 0): 0.02, (0, 1): -0.01, (1, 1): 0.005})
    field = Field3D.from_laminar(small_setup, LaminarFlow(1.0, -0.5))
    values = pushforward_values(field, eta)
    back = pullback_values(values, eta)
    assert np.max(np.abs(back.coeffs - field.coeffs)) < 1e-12 * field.max_abs()


def test_N_vanishes_on_flat_surface_and_is_linear(small_setup):
    flat = SurfaceProfile.zeros(small_setup)
    field = Field3D.from_laminar(small_setup, LaminarFlow(0.3, 0.7))
    assert nonlinearity_N(field, flat).max_abs() == 0.0
    eta = SurfaceProfile.from_modes(small_setup, {(1, 0): 0.05})
    a = nonlinearity_N(field, eta)
    b = nonlinearity_N(field.scaled(3.0), eta)
    assert np.max(np.abs(b.coeffs - 3.0 * a.coeffs)) < 1e-12 * max(1.0, b.max_abs())


# ── v(η, c) ──────────────────────────────────────────────────────────────────
def test_v_of_zero_surface_is_zero(small_setup, ref_c_star):
    sol = solve_v_of_eta(SurfaceProfile.zeros(small_setup), ref_c_star)
    assert sol.v.max_abs() == 0.0
    assert sol.iterations == 1
    assert np.allclose(sol.shift.c_tilde, 0.0)


def _linear_v(setup, c, mode) -> np.ndarray:
    """η = cos(k·x′) 에 대한 v 의 1차 응답: ±k 모드의 Beltrami 프로파일."""
    out = np.zeros((3, setup.M + 1, setup.size, setup.size), dtype=complex)
    z = setup.grid.nodes
    for sign in (1, -1):
        n1, n2 = sign * mode[0], sign * mode[1]
        idx = setup.index(n1, n2)
        k = (setup.kx[idx], setup.ky[idx])
        out[:, :, idx[0], idx[1]] = mode_profiles(k, c, 0.5, setup.params, z).profiles
    return out


def test_v_linearization_converges_at_first_order(small_setup, ref_c_star):
    c = ref_c_star + np.array([0.3, -0.2])
    lin = _linear_v(small_setup, c, (1, 0))

    def error(eps):
        eta = SurfaceProfile.from_modes(small_setup, {(1, 0): 0.5 * eps})
        return float(np.max(np.abs(solve_v_of_eta(eta, c).v.coeffs / eps - lin)))

    e1, e2 = error(2e-3), error(1e-3)
    assert e2 > 1e-9
    assert np.log2(e1 / e2) == pytest.approx(1.0, abs=0.05)


def test_v_keeps_first_direction_constancy(small_setup, ref_c_star):
    eta = SurfaceProfile.from_modes(small_setup, {(0, 1): 5e-3, (0, 2): 1e-3})
    sol = solve_v_of_eta(eta, ref_c_star)
    off = small_setup.n1 != 0
    assert np.max(np.abs(sol.v.coeffs[..., off])) < 1e-12
    assert np.max(np.abs(sol.u_dot.coeffs[..., off])) < 1e-12


def test_flattened_residuals_small_surface(small_setup, ref_c_star):
    eta = SurfaceProfile.from_modes(small_setup, {(1, 0): 1e-3, (0, 1): 1e-3})
    sol = solve_v_of_eta(eta, ref_c_star)
    report = residual_report(sol)
    for key in ("beltrami", "divergence", "surface_kinematic", "bottom_kinematic", "momentum_integral"):
        assert report[key] < 1e-9, key
    assert symmetry_leakage(sol) < 1e-12


def test_G_is_affine_in_v(small_setup, ref_c_star):
    eta = SurfaceProfile.from_modes(small_setup, {(1, 0): 0.01, (0, 1): 0.02})
    problem = FlattenedProblem(eta, ref_c_star)
    base = solve_v_of_eta(eta, ref_c_star).v
    v1 = base
    v2 = base.scaled(-0.5)
    a, b = 0.7, 1.9
    G0 = problem.G(Field3D.zeros(small_setup)).coeffs
    lhs = problem.G(v1.scaled(a) + v2.scaled(b)).coeffs - G0
    rhs = a * (problem.G(v1).coeffs - G0) + b * (problem.G(v2).coeffs - G0)
    assert np.max(np.abs(lhs - rhs)) < 1e-11 * max(1.0, float(np.max(np.abs(G0))))
    assert np.allclose(nonlinearity_G(base, eta, ref_c_star).coeffs, problem.G(base).coeffs)


# ── H 선형화 ─────────────────────────────────────────────────────────────────
def test_H_multiplier_is_dispersion_symbol(small_setup, ref_c_star):
    s = small_setup
    eps = 1e-5
    eta = SurfaceProfile.from_modes(s, {(1, 1): eps})
    H = evaluate_H(eta, ref_c_star).raw
    idx = s.index(1, 1)
    expected = rho(ref_c_star, (s.kx[idx], s.ky[idx]), s.params)
    assert H[idx].real / eps == pytest.approx(expected, rel=1e-4)


def _multiplier(setup, c, mode, eps: float) -> float:
    """Ĥ(k)/η̂(k) 의 중심 차분 + Richardson 한 단계 (오차 O(ε⁴))."""
    idx = setup.index(*mode)

    def central(h):
        plus = evaluate_H(SurfaceProfile.from_modes(setup, {mode: h}), c).raw[idx].real
        minus = evaluate_H(SurfaceProfile.from_modes(setup, {mode: -h}), c).raw[idx].real
        return (plus - minus) / (2.0 * h)

    return (4.0 * central(0.5 * eps) - central(eps)) / 3.0


def test_H_multiplier_at_zero_mode_is_gravity(small_setup, ref_c_star):
    # 한쪽 차분은 O(ε) 오차라 1e-10 에 못 미침: 중심 차분 + Richardson
    s = small_setup
    assert _multiplier(s, ref_c_star, (0, 0), 1e-3) == pytest.approx(s.params.g, abs=1e-10)


def test_H_multiplier_extrapolates_to_dispersion_symbol(small_setup, ref_c_star):
    s = small_setup
    idx = s.index(1, 1)
    expected = rho(ref_c_star, (s.kx[idx], s.ky[idx]), s.params)
    assert _multiplier(s, ref_c_star, (1, 1), 1e-3) == pytest.approx(expected, rel=1e-8)
