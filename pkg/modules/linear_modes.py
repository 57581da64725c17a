# modules/linear_modes.py
# 선형화 문제의 핵(kernel) 모드: 수직 프로파일 φ(z), 속도 성분, 표면 모드, 네 가지 경우 분류
#
# [설계 결정 근거]
# ① φ′ 는 각 분기의 닫힌 형태 미분으로 계산 (차분 없음), φ″ = −(α²−|k|²)φ.
# ② 분기점 근처는 κ 와 같은 짝수 급수 사용 → |k| = |α| 에서 φ = (z+d)/d 로 연속.
# ③ 핵 모드 정규화: ±k 쌍마다 η̂ = 1/2 → 물리 표면 모드가 정확히 cos(k·x′).
# ④ 경우 III/IV 모드는 진단 전용 (비선형 해법에는 넣지 않음).

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    DispersionMismatchError,
    Lattice,
    NotCaseOneError,
    PhysicalParams,
    PreconditionError,
    ResonanceError,
    ZeroWaveVectorError,
)
from modules.dispersion import check_nonresonance, enumerate_dispersion_roots, rho

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_SERIES_THRESHOLD = 1e-6
_POLE_TOL         = 1e-8
_KERNEL_ETA       = 0.5


# =============================================================================
# [함수 1] 수직 프로파일 φ
# =============================================================================

def _series_profile(zeta: np.ndarray, t: float, d: float) -> tuple[np.ndarray, np.ndarray]:
    """sin(qζ)/q, cos(qζ) 의 짝수 급수 (q² = t) 로 φ, φ′."""
    def s_part(x):
        x2 = x * x
        return x * (1.0 - t * x2 / 6.0 + t * t * x2 * x2 / 120.0 - t ** 3 * x2 ** 3 / 5040.0)

    def c_part(x):
        x2 = x * x
        return 1.0 - t * x2 / 2.0 + t * t * x2 * x2 / 24.0 - t ** 3 * x2 ** 3 / 720.0

    denom = s_part(d)
    return s_part(zeta) / denom, c_part(zeta) / denom


def vertical_profile(z, k_norm: float, params: PhysicalParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    φ(z; |k|), φ′, φ″ 를 함께 반환.

    φ(−d) = 0, φ(0) = 1, φ″ = (|k|² − α²)φ.
    공명(sin(√(α²−|k|²)·d) = 0) 이면 ResonanceError.
    """
    z = np.asarray(z, dtype=float)
    d, alpha = params.d, params.alpha
    t = alpha ** 2 - float(k_norm) ** 2
    zeta = z + d

    if abs(t) * d * d < _SERIES_THRESHOLD:
        phi, dphi = _series_profile(zeta, t, d)
    elif t > 0.0:
        q = np.sqrt(t)
        qd = q * d
        n = np.rint(qd / np.pi)
        if n >= 1 and abs(qd - n * np.pi) <= _POLE_TOL:
            raise ResonanceError("φ 분모 sin(√(α²−|k|²)d) = 0", k_norm=k_norm, multiple=int(n))
        denom = np.sin(qd)
        phi = np.sin(q * zeta) / denom
        dphi = q * np.cos(q * zeta) / denom
    else:
        q = np.sqrt(-t)
        qd = q * d
        scale = np.exp(q * (zeta - d)) / (1.0 - np.exp(-2.0 * qd))
        phi = scale * (1.0 - np.exp(-2.0 * q * zeta))
        dphi = q * scale * (1.0 + np.exp(-2.0 * q * zeta))
    return phi, dphi, -t * phi


def phi_profile(z, k_norm: float, params: PhysicalParams):
    """φ(z; |k|) 만 반환 (스칼라 입력 → float)."""
    phi = vertical_profile(z, k_norm, params)[0]
    return float(phi) if np.ndim(phi) == 0 else phi


# =============================================================================
# [함수 2] 경우 분류
# =============================================================================

@dataclass(frozen=True)
class CaseInfo:
    """
    tag    : "I" | "II" | "III" | "IV"
    n      : 공명 정수 (III, IV 에서만)
    parity : IV 에서 "even" | "odd"
    """
    tag: str
    n: int | None = None
    parity: str | None = None


def _resonant_multiple(q: float, d: float) -> int | None:
    qd = q * d
    n = int(np.rint(qd / np.pi))
    if n >= 1 and abs(qd - n * np.pi) <= _POLE_TOL * max(1.0, n * np.pi):
        return n
    return None


def classify_case(k, params: PhysicalParams) -> CaseInfo:
    k = np.asarray(k, dtype=float).reshape(2)
    kn = float(np.linalg.norm(k))
    alpha = abs(params.alpha)
    if kn == 0.0:
        n = _resonant_multiple(alpha, params.d)
        if n is None:
            return CaseInfo("II")
        return CaseInfo("IV", n=n, parity="even" if n % 2 == 0 else "odd")
    if kn < alpha:
        n = _resonant_multiple(np.sqrt(alpha ** 2 - kn ** 2), params.d)
        if n is not None:
            return CaseInfo("III", n=n)
    return CaseInfo("I")


# =============================================================================
# [타입] KernelMode
# =============================================================================

@dataclass(frozen=True, eq=False)
class KernelMode:
    """
    파수 k 한 개의 선형 모드.

    profiles    : (3, nz) 복소, v̂₁, v̂₂, v̂₃
    derivatives : (3, nz) 복소, z 미분 (해석적)
    """
    k: np.ndarray
    c: np.ndarray | None
    eta_hat: float
    z: np.ndarray
    profiles: np.ndarray
    derivatives: np.ndarray
    case: str

    def residuals(self, params: PhysicalParams) -> dict[str, float]:
        """
        모드 형태의 선형 방정식 잔차 (∂x → ik, ∂y → il 치환).

        beltrami   : max|curl v − αv| / max(|α||v| + |v′|)
        divergence : max|ik·v_h + v₃′| / 같은 척도
        bottom     : |v̂₃(−d)|
        kinematic  : |v̂₃(0) − i(c·k)η̂|
        dynamic    : |c₁v̂₁(0) + c₂v̂₂(0) + (g+σ|k|²)η̂|
        """
        kx, ky = self.k
        v1, v2, v3 = self.profiles
        d1, d2, d3 = self.derivatives
        alpha = params.alpha
        curl = np.array([1j * ky * v3 - d2, d1 - 1j * kx * v3, 1j * kx * v2 - 1j * ky * v1])
        scale = max(float(np.max(abs(alpha) * np.abs(self.profiles) + np.abs(self.derivatives))),
                    1e-300)
        bottom_idx = int(np.argmin(self.z))
        top_idx = int(np.argmax(self.z))
        out = {
            "beltrami": float(np.max(np.abs(curl - alpha * self.profiles))) / scale,
            "divergence": float(np.max(np.abs(1j * kx * v1 + 1j * ky * v2 + d3))) / scale,
            "bottom": float(abs(v3[bottom_idx])),
        }
        if self.c is not None:
            ck = float(self.c @ self.k)
            kn = float(np.linalg.norm(self.k))
            out["kinematic"] = float(abs(v3[top_idx] - 1j * ck * self.eta_hat))
            out["dynamic"] = float(abs(self.c[0] * v1[top_idx] + self.c[1] * v2[top_idx]
                                       + params.restoring(kn) * self.eta_hat))
        else:
            out["kinematic"] = float(abs(v3[top_idx]))
        return out

    def physical_velocity(self, x: float, y: float) -> np.ndarray:
        """모드(k) + 모드(−k) 의 실수 속도장 2·Re(v̂ e^{ik·x′}), 형상 (3, nz)."""
        phase = np.exp(1j * (self.k[0] * x + self.k[1] * y))
        return 2.0 * np.real(self.profiles * phase)

    def physical_surface(self, x: float, y: float) -> float:
        return float(2.0 * self.eta_hat * np.cos(self.k[0] * x + self.k[1] * y))


def _velocity_from_vertical(k: np.ndarray, alpha: float, v3, dv3, ddv3):
    """
    v̂₃ 로부터 수평 성분 (div-free + Beltrami):
        v̂₁ = i(k v̂₃′ + α l v̂₃)/|k|²,  v̂₂ = i(l v̂₃′ − α k v̂₃)/|k|²
    """
    kx, ky = k
    ksq = kx * kx + ky * ky
    v1 = 1j * (kx * dv3 + alpha * ky * v3) / ksq
    v2 = 1j * (ky * dv3 - alpha * kx * v3) / ksq
    d1 = 1j * (kx * ddv3 + alpha * ky * dv3) / ksq
    d2 = 1j * (ky * ddv3 - alpha * kx * dv3) / ksq
    return np.array([v1, v2, v3]), np.array([d1, d2, dv3])


def mode_profiles(k, c, eta_hat: float, params: PhysicalParams, z) -> KernelMode:
    """
    경우 I 모드 (분산 관계 검사 없음).

    v̂₃ = λη̂φ, λ = i(c·k).
    """
    k = np.asarray(k, dtype=float).reshape(2)
    c = np.asarray(c, dtype=float).reshape(2)
    z = np.asarray(z, dtype=float)
    if not np.any(k):
        raise ZeroWaveVectorError("k = 0 모드는 경우 I 이 아님")
    lam = 1j * float(c @ k)
    phi, dphi, ddphi = vertical_profile(z, np.linalg.norm(k), params)
    profiles, derivs = _velocity_from_vertical(
        k, params.alpha, lam * eta_hat * phi, lam * eta_hat * dphi, lam * eta_hat * ddphi
    )
    return KernelMode(k=k, c=c, eta_hat=float(eta_hat), z=z,
                      profiles=profiles, derivatives=derivs, case="I")


# =============================================================================
# [함수 3] 핵 모드 구성
# =============================================================================

def build_kernel_mode(k, c, eta_hat: float, params: PhysicalParams, z,
                      tol: float = 1e-8) -> KernelMode:
    """
    분산 관계 ρ(c,k) = 0 을 만족하는 경우 I 핵 모드.

    예외:
        ZeroWaveVectorError     : k = 0
        NotCaseOneError         : 공명 (경우 III)
        DispersionMismatchError : |ρ(c,k)| > tol·(g+σ|k|²)
    """
    k = np.asarray(k, dtype=float).reshape(2)
    if not np.any(k):
        raise ZeroWaveVectorError("핵 모드에는 k ≠ 0 필요")
    info = classify_case(k, params)
    if info.tag != "I":
        raise NotCaseOneError(f"경우 {info.tag} 모드", k=k, n=info.n)
    value = rho(c, k, params)
    scale = float(params.restoring(np.linalg.norm(k)))
    if abs(value) > tol * scale:
        raise DispersionMismatchError(
            f"ρ(c,k) = {value:.3e} 가 허용치 밖", k=k, c=c, rho=value
        )
    return mode_profiles(k, c, eta_hat, params, z)


def build_case3_mode(k, params: PhysicalParams, z, lam: float = 1.0) -> KernelMode:
    """
    경우 III 공명 모드 (진단용): η̂ = 0, c·k = 0 가지, v̂₃ = λ sin(πnz/d).
    """
    k = np.asarray(k, dtype=float).reshape(2)
    info = classify_case(k, params)
    if info.tag != "III":
        raise PreconditionError(f"경우 III 가 아님 ({info.tag})", k=k)
    z = np.asarray(z, dtype=float)
    m = np.pi * info.n / params.d
    v3 = lam * np.sin(m * z)
    dv3 = lam * m * np.cos(m * z)
    profiles, derivs = _velocity_from_vertical(k, params.alpha, v3.astype(complex),
                                               dv3.astype(complex), -m * m * v3.astype(complex))
    return KernelMode(k=k, c=None, eta_hat=0.0, z=z,
                      profiles=profiles, derivatives=derivs, case="III")


def case4_eta_hat(c, c_tilde, params: PhysicalParams) -> float:
    """경우 IV(짝수 배수): 상수 표면 η̂ = −(c·c̃)/g."""
    return float(-np.dot(np.asarray(c, dtype=float), np.asarray(c_tilde, dtype=float)) / params.g)


# =============================================================================
# [함수 4] 핵 차원
# =============================================================================

@dataclass(frozen=True)
class KernelInfo:
    dimension: int
    modes: list[KernelMode]
    indices: list[tuple[int, int]]


def kernel_dimension(c, lat: Lattice, params: PhysicalParams, z,
                     tol: float = 1e-8) -> KernelInfo:
    """
    대칭 핵 차원 = (격자 내 분산 근 수)/2, ±k 쌍마다 대표 모드 하나 (η̂ = 1/2).
    비공명 조건 위반 시 ResonanceError.
    """
    report = check_nonresonance(lat, params)
    if not report.passed:
        raise ResonanceError("비공명 조건 위반",
                             offending=[(v.n1, v.n2) for v in report.offending])
    roots = enumerate_dispersion_roots(c, lat, params, tol)
    reps = [r for r in roots if r.n1 > 0 or (r.n1 == 0 and r.n2 > 0)]
    modes = [mode_profiles(r.k, c, _KERNEL_ETA, params, z) for r in reps]
    _logger.info("핵 차원 %d (근 %d 개)", len(reps), len(roots))
    return KernelInfo(dimension=len(roots) // 2, modes=modes,
                      indices=[(r.n1, r.n2) for r in reps])
