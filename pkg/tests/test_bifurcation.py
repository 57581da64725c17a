# tests/test_bifurcation.py
# c* (대칭 공식 / 원뿔곡선 교점), 인증 레코드, 횡단성, 다중도 진단

import numpy as np
import pytest

from core import DependentGeneratorsError, Lattice, NoPositiveNuError, PhysicalParams, RegimeError
from modules.bifurcation import (
    asymptote_gap_condition,
    certify_bifurcation,
    general_c_star,
    symmetric_c_star,
    symmetric_multiplicity_report,
    transversality,
    transversality_sine,
)
from modules.dispersion import kappa, rho, rho_gradient

REF_K = 2.0
REF_OMEGA = np.pi / 3


# ── 대칭 격자 공식 ────────────────────────────────────────────────────────────
def test_symmetric_c_star_ref_values(ref_config):
    assert ref_config.principal
    assert ref_config.kappa == pytest.approx(2.01877, abs=2e-4)
    assert ref_config.phi == pytest.approx(-0.12141, abs=2e-4)
    assert ref_config.nu == pytest.approx(0.48945, abs=2e-4)
    assert ref_config.c_len == pytest.approx(3.19617, abs=2e-4)
    assert np.allclose(ref_config.c_star, [3.17265, -0.38709], atol=2e-4)


def test_symmetric_phase_relation(ref_config, ref_params):
    # tan 2φ = −α/κ
    assert np.tan(2.0 * ref_config.phi) == pytest.approx(-ref_params.alpha / ref_config.kappa, rel=1e-12)


def test_symmetric_candidates_on_both_curves(ref_params, ref_lattice):
    configs = symmetric_c_star(REF_K, REF_OMEGA, ref_params)
    assert len(configs) == 2
    assert configs[1].nu == pytest.approx(1.529, abs=1e-3)
    for cfg in configs:
        for k in (ref_lattice.k1, ref_lattice.k2):
            assert abs(rho(cfg.c_star, k, ref_params)) < 1e-10 * ref_params.restoring(REF_K)


def test_symmetric_matches_conic_intersection(ref_params, ref_lattice):
    found = general_c_star(ref_lattice.k1, ref_lattice.k2, ref_params)
    assert found
    for cfg in symmetric_c_star(REF_K, REF_OMEGA, ref_params):
        gaps = [np.linalg.norm(p.c - cfg.c_star) for p in found]
        assert min(gaps) < 1e-9 * cfg.c_len
    # 교점은 원점 대칭으로 짝을 이룸
    for p in found:
        assert min(np.linalg.norm(q.c + p.c) for q in found) < 1e-8 * np.linalg.norm(p.c)


def test_c_star_squared_is_affine_in_sigma(ref_lattice):
    sigmas = np.linspace(0.5, 2.0, 5)
    squares = []
    for sigma in sigmas:
        params = PhysicalParams(g=1.0, sigma=float(sigma), d=1.0, alpha=0.5)
        squares.append(symmetric_c_star(REF_K, REF_OMEGA, params)[0].c_len ** 2)
    slope, intercept = np.polyfit(sigmas, squares, 1)
    fit = slope * sigmas + intercept
    assert np.max(np.abs(fit - squares)) < 1e-10
    nu = symmetric_c_star(REF_K, REF_OMEGA, PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=0.5))[0].nu
    assert slope == pytest.approx(REF_K ** 2 / nu, rel=1e-10)


def test_symmetric_requires_rotational_flow():
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=0.0)
    with pytest.raises(RegimeError):
        symmetric_c_star(REF_K, REF_OMEGA, params)


def test_symmetric_no_positive_nu():
    # κ(1) < 0, ω = π/4 → 두 후보 모두 ν = κ/2 < 0
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=2.0)
    assert kappa(1.0, params) < 0.0
    with pytest.raises(NoPositiveNuError):
        symmetric_c_star(1.0, np.pi / 4, params)


def test_general_c_star_irrotational():
    params = PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=0.0)
    lat = Lattice.symmetric(REF_K, REF_OMEGA)
    found = general_c_star(lat.k1, lat.k2, params)
    assert found
    for p in found:
        for k in (lat.k1, lat.k2):
            assert abs(rho(p.c, k, params)) < 1e-10 * params.restoring(REF_K) * max(1.0, p.c @ p.c)


def test_general_c_star_dependent_generators(ref_params):
    with pytest.raises(DependentGeneratorsError):
        general_c_star([1.0, 0.0], [2.0, 0.0], ref_params)


# ── 횡단성 / 간격 조건 ─────────────────────────────────────────────────────────
def test_transversality_is_gradient_determinant(ref_params, ref_lattice, ref_c_star):
    k1, k2 = ref_lattice.k1, ref_lattice.k2
    grads = np.vstack([rho_gradient(ref_c_star, k1, ref_params), rho_gradient(ref_c_star, k2, ref_params)])
    det = transversality(ref_c_star, k1, k2, ref_params)
    assert det == pytest.approx(np.linalg.det(grads), rel=1e-10)
    assert transversality(ref_c_star, k2, k1, ref_params) == pytest.approx(-det, rel=1e-12)
    sine = transversality_sine(ref_c_star, k1, k2, ref_params)
    assert 1e-3 < abs(sine) <= 1.0


def test_gap_condition_symmetric_lattice(ref_params, ref_lattice):
    gap = asymptote_gap_condition(ref_lattice.k1, ref_lattice.k2, ref_params)
    assert gap.passed
    assert gap.gamma1 == pytest.approx(gap.gamma2)
    # 생성자 사이 각은 (0, π) 로 접음 → π − 2ω
    assert gap.theta == pytest.approx(np.pi - 2.0 * REF_OMEGA)
    assert gap.margin > 0.0


# ── 인증 ─────────────────────────────────────────────────────────────────────
def test_certify_ref_passes(ref_bif):
    assert ref_bif.all_passed
    assert ref_bif.on_curves and ref_bif.nonresonant and ref_bif.multiplicity_four
    assert ref_bif.geometric is True
    assert max(abs(r) for r in ref_bif.rho_residuals) < 1e-10
    summary = ref_bif.summary()
    assert summary["roots"] == 4
    assert summary["all_passed"] is True


def test_certify_flags_off_curve_speed(ref_lattice, ref_params, ref_c_star):
    bif = certify_bifurcation(ref_lattice.k1, ref_lattice.k2, ref_params, 1.01 * ref_c_star)
    assert not bif.on_curves
    assert not bif.multiplicity_four
    assert not bif.all_passed


# ── 다중도 진단 ───────────────────────────────────────────────────────────────
def test_symmetric_multiplicity_report(ref_config, ref_params):
    table = symmetric_multiplicity_report(ref_config, ref_params, n_max=3)
    assert list(table["n"]) == [1, 2, 3]
    first = table.iloc[0]
    # ω = π/3 → |k₁ + k₂| = |k|
    assert bool(first["equal_length"])
    assert first["k_norm"] == pytest.approx(REF_K)
    assert not table["is_root"].any()
