# modules/bifurcation.py
# 분기 매개변수 c* 탐색 + 분기 정리 가정(비공명, 근 다중도, 점근선 간격, 횡단성) 인증
#
# [설계 결정 근거]
# ① 대칭 격자: tan(2φ) = −α/κ(k) 의 두 후보 φ₀, φ₀ + π/2 를 모두 평가하고
#    ν > 0 인 것만 반환 (φ₀ 가 주 가지, 항상 먼저).
# ② 일반 격자: 두 원뿔곡선 cᵀA₁c = 1, cᵀA₂c = 1 의 교점을
#    scipy.optimize.root(hybr, 해석 Jacobian) 다중 시작으로 탐색.
#    시드는 각 곡선의 각 가지에서 16개, 잔차는 a(|k|) 로 정규화된 무차원 값.
# ③ certify_bifurcation 은 예외 대신 플래그를 담은 레코드를 반환 (진단 집계).

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np
import pandas as pd
from scipy.optimize import root

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    DependentGeneratorsError,
    Lattice,
    NoPositiveNuError,
    PhysicalParams,
    RegimeError,
    ResonanceError,
)
from modules.dispersion import (
    DispersionRoot,
    ResonanceReport,
    asymptote_angle,
    check_nonresonance,
    conic_matrix,
    dispersion_curve,
    irrotational_lines,
    kappa,
    rho,
    rho_gradient,
    scan_dispersion,
)

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_ACCEPT_RESIDUAL   = 1e-10
_DEDUP_RTOL        = 1e-8
_ROOT_XTOL         = 1e-14
_ON_CURVE_RTOL     = 1e-10
_TRANSVERSAL_SINE  = 1e-10
_KERNEL_INDICES    = {(1, 0), (-1, 0), (0, 1), (0, -1)}


def _independent(k1: np.ndarray, k2: np.ndarray) -> None:
    det = k1[0] * k2[1] - k1[1] * k2[0]
    if abs(det) <= 1e-12 * np.linalg.norm(k1) * np.linalg.norm(k2):
        raise DependentGeneratorsError("k₁, k₂ 가 선형 종속", k1=k1, k2=k2)


# =============================================================================
# [함수 1] 대칭 격자의 c*
# =============================================================================

@dataclass(frozen=True)
class SymmetricLatticeConfig:
    """
    대칭 격자 k₁ = k(cos ω, sin ω), k₂ = k(cos ω, −sin ω) 의 분기점.

    phi   : c* 의 극각
    c_len : |c*| = √((g + σk²)/ν)
    nu    : ν > 0
    """
    k: float
    omega: float
    phi: float
    c_len: float
    nu: float
    kappa: float
    principal: bool

    @property
    def c_star(self) -> np.ndarray:
        return self.c_len * np.array([np.cos(self.phi), np.sin(self.phi)])

    @property
    def lattice(self) -> Lattice:
        return Lattice.symmetric(self.k, self.omega)


def symmetric_nu(phi: float, omega: float, kap: float, alpha: float) -> float:
    """ν = (1 − 2sin²ω)(κcos²φ − α cosφ sinφ) + κ sin²ω."""
    cp, sp = np.cos(phi), np.sin(phi)
    sw2 = np.sin(omega) ** 2
    return float((1.0 - 2.0 * sw2) * (kap * cp * cp - alpha * cp * sp) + kap * sw2)


def symmetric_c_star(k: float, omega: float, params: PhysicalParams) -> list[SymmetricLatticeConfig]:
    """
    대칭 격자의 c* 후보 (ν > 0 인 것만, 주 가지 먼저).

    반환:
        길이 1 또는 2 의 리스트
    예외:
        RegimeError       : α = 0
        NoPositiveNuError : 두 후보 모두 ν ≤ 0
    """
    alpha = params.alpha
    if alpha == 0.0:
        raise RegimeError("대칭 격자 c* 공식은 α ≠ 0 필요 (α = 0 은 general_c_star)")
    if not (0.0 < omega < np.pi / 2):
        raise RegimeError(f"ω 는 (0, π/2) 범위여야 함: {omega}")
    kap = kappa(k, params)
    a = float(params.restoring(k))

    if kap == 0.0:
        phi0 = -np.sign(alpha) * np.pi / 4
    else:
        phi0 = 0.5 * np.arctan(-alpha / kap)

    configs = []
    for phi, principal in ((phi0, True), (phi0 + np.pi / 2, False)):
        nu = symmetric_nu(phi, omega, kap, alpha)
        if nu > 0.0:
            configs.append(SymmetricLatticeConfig(
                k=float(k), omega=float(omega), phi=float(phi),
                c_len=float(np.sqrt(a / nu)), nu=nu, kappa=kap, principal=principal,
            ))
        else:
            _logger.debug("φ = %.6g 후보 제외 (ν = %.6g ≤ 0)", phi, nu)
    if not configs:
        raise NoPositiveNuError("두 φ 후보 모두 ν ≤ 0", k=k, omega=omega, kappa=kap)
    return configs


# =============================================================================
# [함수 2] 일반 격자의 c* (원뿔곡선 교점)
# =============================================================================

@dataclass(frozen=True)
class ConicIntersection:
    c: np.ndarray
    residual: float


def _conic_system(mats: tuple[np.ndarray, np.ndarray]):
    a1, a2 = mats

    def fun(c):
        f = np.array([c @ a1 @ c - 1.0, c @ a2 @ c - 1.0])
        jac = 2.0 * np.vstack([a1 @ c, a2 @ c])
        return f, jac

    return fun


def _curve_seeds(k: np.ndarray, params: PhysicalParams, per_branch: int) -> np.ndarray:
    if params.alpha == 0.0:
        lines = irrotational_lines(k, params)
        return lines.sample(per_branch, half_width=2.0)
    return dispersion_curve(k, params, samples=2 * per_branch).samples


def general_c_star(k1, k2, params: PhysicalParams, seeds: int = 16,
                   extra_seeds=None) -> list[ConicIntersection]:
    """
    두 분산 곡선 C(k₁), C(k₂) 의 모든 고립 교점.

    인자:
        seeds       : 곡선 가지당 시드 수
        extra_seeds : 추가 초기값 (c₁, c₂) 목록
    반환:
        (c₁, c₂) 사전순 정렬된 교점 목록 (비어 있을 수 있음)
    """
    k1 = np.asarray(k1, dtype=float).reshape(2)
    k2 = np.asarray(k2, dtype=float).reshape(2)
    _independent(k1, k2)
    fun = _conic_system((conic_matrix(k1, params), conic_matrix(k2, params)))

    starts = [_curve_seeds(k1, params, seeds), _curve_seeds(k2, params, seeds)]
    if extra_seeds is not None:
        starts.append(np.asarray(extra_seeds, dtype=float).reshape(-1, 2))

    found: list[ConicIntersection] = []
    dropped = 0
    for seed in np.vstack(starts):
        sol = root(fun, seed, jac=True, method="hybr", options={"xtol": _ROOT_XTOL})
        resid = float(np.max(np.abs(fun(sol.x)[0])))
        if not np.all(np.isfinite(sol.x)) or resid > _ACCEPT_RESIDUAL:
            dropped += 1
            continue
        scale = max(1.0, float(np.linalg.norm(sol.x)))
        if any(np.linalg.norm(p.c - sol.x) <= _DEDUP_RTOL * scale for p in found):
            continue
        found.append(ConicIntersection(c=sol.x.copy(), residual=resid))

    found.sort(key=lambda p: (round(p.c[0], 10), round(p.c[1], 10)))
    _logger.info("원뿔곡선 교점 %d 개 (수렴 실패 시드 %d 개 제외)", len(found), dropped)
    return found


# =============================================================================
# [함수 3] 점근선 간격 조건
# =============================================================================

@dataclass(frozen=True)
class GapCondition:
    """
    gamma1 ≥ gamma2 가 되도록 라벨링한 점근선 각과 생성자 사이 각 θ ∈ (0, π).
    swapped : 입력 순서를 바꿨는지 여부
    margin  : min(θ − (γ₁ − γ₂), π − θ), 양수면 통과
    """
    gamma1: float
    gamma2: float
    theta: float
    passed: bool
    margin: float
    swapped: bool


def asymptote_gap_condition(k1, k2, params: PhysicalParams) -> GapCondition:
    """γ₁ − γ₂ < θ < π 검사 (α > 0, κ(|k_j|) > 0 영역에서만)."""
    k1 = np.asarray(k1, dtype=float).reshape(2)
    k2 = np.asarray(k2, dtype=float).reshape(2)
    _independent(k1, k2)
    if params.alpha <= 0.0:
        raise RegimeError("점근선 간격 조건은 α > 0 에서만 분석됨", alpha=params.alpha)
    for kv in (k1, k2):
        if kappa(np.linalg.norm(kv), params) <= 0.0:
            raise RegimeError("점근선 간격 조건은 κ > 0 에서만 분석됨", k=kv)

    g1 = asymptote_angle(np.linalg.norm(k1), params)
    g2 = asymptote_angle(np.linalg.norm(k2), params)
    swapped = g1 < g2
    if swapped:
        k1, k2, g1, g2 = k2, k1, g2, g1

    theta = float(np.mod(np.arctan2(k2[1], k2[0]) - np.arctan2(k1[1], k1[0]), 2 * np.pi))
    if theta >= np.pi:
        theta -= np.pi
    gap = g1 - g2
    margin = float(min(theta - gap, np.pi - theta))
    return GapCondition(gamma1=g1, gamma2=g2, theta=theta,
                        passed=bool(gap < theta < np.pi), margin=margin, swapped=swapped)


# =============================================================================
# [함수 4] 횡단성
# =============================================================================

def transversality(c_star, k1, k2, params: PhysicalParams) -> float:
    """det[∇_c ρ(c*,k₁); ∇_c ρ(c*,k₂)] (행 순서 = 입력 순서)."""
    g1 = rho_gradient(c_star, k1, params)
    g2 = rho_gradient(c_star, k2, params)
    return float(g1[0] * g2[1] - g1[1] * g2[0])


def transversality_sine(c_star, k1, k2, params: PhysicalParams) -> float:
    """두 기울기 사이 각의 사인 (det / (|∇₁||∇₂|))."""
    g1 = rho_gradient(c_star, k1, params)
    g2 = rho_gradient(c_star, k2, params)
    norms = np.linalg.norm(g1) * np.linalg.norm(g2)
    if norms == 0.0:
        return 0.0
    return float((g1[0] * g2[1] - g1[1] * g2[0]) / norms)


# =============================================================================
# [함수 5] 인증
# =============================================================================

@dataclass(frozen=True, eq=False)
class BifurcationPoint:
    c_star: np.ndarray
    lattice: Lattice
    roots: list[DispersionRoot]
    skipped: list[tuple[int, int]]
    rho_residuals: tuple[float, float]
    transversality_det: float
    transversality_sine: float
    gap: GapCondition | None
    nonresonance: ResonanceReport
    on_curves: bool
    multiplicity_four: bool
    transversal: bool

    @property
    def nonresonant(self) -> bool:
        return self.nonresonance.passed

    @property
    def geometric(self) -> bool | None:
        return None if self.gap is None else self.gap.passed

    @property
    def k1(self) -> np.ndarray:
        return self.lattice.k1

    @property
    def k2(self) -> np.ndarray:
        return self.lattice.k2

    @property
    def all_passed(self) -> bool:
        return (self.on_curves and self.nonresonant and self.multiplicity_four
                and self.transversal and self.geometric is not False)

    def summary(self) -> dict:
        return {
            "c1": float(self.c_star[0]),
            "c2": float(self.c_star[1]),
            "det": self.transversality_det,
            "sine": self.transversality_sine,
            "rho_k1": self.rho_residuals[0],
            "rho_k2": self.rho_residuals[1],
            "roots": len(self.roots),
            "on_curves": self.on_curves,
            "nonresonant": self.nonresonant,
            "multiplicity_four": self.multiplicity_four,
            "geometric": self.geometric,
            "transversal": self.transversal,
            "all_passed": self.all_passed,
        }


def certify_bifurcation(k1, k2, params: PhysicalParams, c_star, tol: float = 1e-8) -> BifurcationPoint:
    """
    비공명, 근 다중도(정확히 ±k₁, ±k₂), 점근선 간격(분석 영역일 때), 횡단성을 한 레코드로 집계.
    실패한 가정은 플래그만 False 로 두고 레코드는 항상 반환.
    """
    c_star = np.asarray(c_star, dtype=float).reshape(2)
    lat = Lattice.from_dual(k1, k2)
    k1, k2 = lat.k1, lat.k2

    report = check_nonresonance(lat, params)

    try:
        resid = (rho(c_star, k1, params) / params.restoring(np.linalg.norm(k1)),
                 rho(c_star, k2, params) / params.restoring(np.linalg.norm(k2)))
    except ResonanceError:
        resid = (float("nan"), float("nan"))
    on_curves = bool(all(abs(r) <= _ON_CURVE_RTOL for r in resid))

    scan = scan_dispersion(c_star, lat, params, tol)
    multiplicity = scan.index_set == _KERNEL_INDICES and not scan.skipped
    if not multiplicity:
        _logger.info("근 다중도 검사 실패: 근 %s, 공명 %s", sorted(scan.index_set), scan.skipped)

    try:
        gap = asymptote_gap_condition(k1, k2, params)
    except RegimeError as exc:
        _logger.info("점근선 간격 조건 생략: %s", exc)
        gap = None

    try:
        det = transversality(c_star, k1, k2, params)
        sine = transversality_sine(c_star, k1, k2, params)
    except ResonanceError:
        det, sine = float("nan"), float("nan")
    transversal = bool(np.isfinite(sine) and abs(sine) > _TRANSVERSAL_SINE)

    return BifurcationPoint(
        c_star=c_star, lattice=lat, roots=scan.roots, skipped=scan.skipped,
        rho_residuals=(float(resid[0]), float(resid[1])),
        transversality_det=det, transversality_sine=sine, gap=gap,
        nonresonance=report, on_curves=on_curves,
        multiplicity_four=bool(multiplicity), transversal=transversal,
    )


# =============================================================================
# [함수 6] 대칭 격자 다중도 논증 진단
# =============================================================================

def symmetric_multiplicity_report(config: SymmetricLatticeConfig, params: PhysicalParams,
                                  n_max: int = 3) -> pd.DataFrame:
    """
    n₁ = n₂ 격자 벡터 n₁(k₁ + k₂) = k(2n₁cos ω, 0) 가 추가 근이 될 수 있는지 진단.

    |n₁(k₁ + k₂)| = k (4n₁²cos²ω = 1) 이면 길이가 생성자와 같아
    tan(2φ) 관계와 모순되므로 근이 될 수 없음 → rho 열이 0 이 아님을 확인.
    """
    rows = []
    c = config.c_star
    for n in range(1, n_max + 1):
        vec = np.array([2.0 * n * config.k * np.cos(config.omega), 0.0])
        norm = float(np.linalg.norm(vec))
        equal_length = bool(np.isclose(4.0 * n * n * np.cos(config.omega) ** 2, 1.0,
                                       rtol=0.0, atol=1e-12))
        try:
            value = rho(c, vec, params)
        except ResonanceError:
            value = float("nan")
        scale = float(params.restoring(norm))
        rows.append({
            "n": n,
            "kx": vec[0],
            "ky": vec[1],
            "k_norm": norm,
            "equal_length": equal_length,
            "rho": value,
            "is_root": bool(np.isfinite(value) and abs(value) <= 1e-8 * scale),
        })
    return pd.DataFrame(rows)
