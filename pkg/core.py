# core.py
# =============================================================================
# 공유 핵심 모델 모듈 (이중 주기 Beltrami 중력-모세관 수면파)
#
# [왜 이 파일이 필요한가]
# dispersion / bifurcation / flattened / lyapunov_schmidt 모듈이 모두 같은
# 물리 상수, 격자, 표면·유속장 표현, 스펙트럴 변환을 공유해야 함.
# → 순수 계산 타입과 함수만 core.py에 모으고 모든 모듈은 "from core import X".
#   cli.py는 설정 파싱과 파일 출력만 담당 (함수 정의 최소화).
#
# [설계 결정 근거]
# ① 수평 방향: 격자 좌표 (a₁, a₂) ∈ [0,1)² 위 균일 격자 + scipy.fft
#    k·x′ = 2π(n₁a₁ + n₂a₂) 이므로 어떤 격자든 단위 정사각형 FFT 하나로 처리.
#    곱셈 비선형항은 2배 패딩 격자(P = 2(2N+1))에서 계산 후 절단.
# ② 수직 방향: Chebyshev–Gauss–Lobatto 노드, z₀ = 0 (수면) … z_M = −d (바닥).
#    미분 행렬은 명시 공식, 적분 가중치/누적 적분 행렬은 numpy.polynomial.chebyshev.
# ③ 계수 배열 레이아웃
#    SurfaceProfile : (2N+1, 2N+1) 실수, 인덱스 n + N
#    Field3D        : (3, M+1, 2N+1, 2N+1) 복소수, 마지막 두 축이 Fourier 축
# ④ 예외 계층: BeltramiWaveError
#      ├ ConfigError          (설정/파라미터 범위)
#      ├ PreconditionError    (수학적 전제 위반, 세부 클래스 다수)
#      └ NonConvergenceError  (반복 해법 실패)
#    CLI는 이 세 갈래를 서로 다른 종료 코드로 매핑.
# =============================================================================

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy import fft as sp_fft
from scipy.interpolate import barycentric_interpolate

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_DUAL_RTOL       = 1e-12    # k_i·λ_j = 2πδ_ij 허용 상대오차
_CLASS_RTOL      = 1e-12    # 짝/홀 대칭 클래스 허용 누설
_Z_RANGE_TOL     = 1e-12    # eval_field의 z 범위 여유 (d 단위)
_IMAG_RTOL       = 1e-13    # 실수장 합성 시 허수부 잔차 허용치
_PAD_FACTOR      = 2        # 패딩 배율: P = _PAD_FACTOR·(2N+1)
_MIN_Z_NODES     = 4


# =============================================================================
# 예외 계층
# =============================================================================

def _to_jsonable(value: Any) -> Any:
    """numpy 스칼라/배열/튜플을 JSON 직렬화 가능한 파이썬 객체로 변환."""
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


class BeltramiWaveError(Exception):
    """
    라이브러리 전체 예외의 기반 클래스.

    code    : 기계 판독용 식별자 (CLI 오류 레코드의 "error" 필드)
    details : 진단 정보 딕셔너리 (위반한 격자 벡터, 잔차 등)
    """
    code = "beltrami_error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_record(self) -> dict:
        return {
            "error":   self.code,
            "message": str(self),
            "details": _to_jsonable(self.details),
        }


class ConfigError(BeltramiWaveError):
    code = "config_error"


class PreconditionError(BeltramiWaveError):
    code = "precondition_failed"


class DegenerateDomainError(PreconditionError):
    code = "degenerate_domain"


class ResonanceError(PreconditionError):
    code = "resonance"


class ZeroWaveVectorError(PreconditionError):
    code = "zero_wave_vector"


class DispersionMismatchError(PreconditionError):
    code = "dispersion_mismatch"


class NotCaseOneError(PreconditionError):
    code = "not_case_one"


class RegimeError(PreconditionError):
    code = "outside_regime"


class DependentGeneratorsError(PreconditionError):
    code = "dependent_generators"


class NoPositiveNuError(PreconditionError):
    code = "no_positive_nu"


class DegenerateTransversalityError(PreconditionError):
    code = "degenerate_transversality"


class DegenerateBranchError(PreconditionError):
    code = "degenerate_branch"


class SolvabilityError(PreconditionError):
    code = "shift_not_solvable"


class NearResonantModeError(PreconditionError):
    code = "near_resonant_mode"


class ClassViolationError(PreconditionError):
    code = "symmetry_class_violation"


class OutOfRangeError(PreconditionError):
    code = "out_of_range"


class NotTwoHalfDError(PreconditionError):
    code = "not_two_half_dimensional"


class AffineRelationError(PreconditionError):
    code = "affine_relation_violated"


class NonConvergenceError(BeltramiWaveError):
    code = "non_convergence"


class NonContractionError(NonConvergenceError):
    code = "non_contraction"


class IterationLimitError(NonConvergenceError):
    code = "iteration_limit"


# =============================================================================
# [타입 1] PhysicalParams
# =============================================================================

@dataclass(frozen=True)
class PhysicalParams:
    """
    물리 상수 묶음.

    g     : 중력가속도 (> 0)
    sigma : 표면장력 계수 σ (> 0)
    d     : 정수심 (> 0)
    alpha : Beltrami 비례상수 α (0 포함 임의 실수)
    """
    g: float
    sigma: float
    d: float
    alpha: float

    def __post_init__(self):
        for name in ("g", "sigma", "d", "alpha"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ConfigError(f"{name} 값이 유한하지 않음: {value}", key=name)
            object.__setattr__(self, name, float(value))
        for name in ("g", "sigma", "d"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(
                    f"{name} 는 양수여야 함: {getattr(self, name)}", key=name
                )

    def restoring(self, k_norm):
        """복원 계수 a(|k|) = g + σ|k|² (스칼라/배열 모두 허용)."""
        return self.g + self.sigma * np.square(k_norm)


# =============================================================================
# [타입 2] Lattice
# =============================================================================

@dataclass(frozen=True, eq=False)
class Lattice:
    """
    주기 격자 Λ (생성자 λ₁, λ₂) 와 쌍대 격자 Λ′ (생성자 k₁, k₂).
    k_i·λ_j = 2π δ_ij 를 생성 시점에 검증.
    """
    lambda1: np.ndarray
    lambda2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "k1", "k2"):
            vec = np.array(getattr(self, name), dtype=float).reshape(2)
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

        lam = np.vstack([self.lambda1, self.lambda2])
        scale = np.linalg.norm(self.lambda1) * np.linalg.norm(self.lambda2)
        if scale == 0.0 or abs(np.linalg.det(lam)) <= 1e-12 * scale:
            raise ConfigError("격자 생성자가 선형 종속", lambda1=self.lambda1,
                              lambda2=self.lambda2)

        gram = np.vstack([self.k1, self.k2]) @ lam.T
        err = np.max(np.abs(gram - 2.0 * np.pi * np.eye(2)))
        if err > _DUAL_RTOL * 2.0 * np.pi * 10.0:
            raise ConfigError("쌍대 격자 항등식 k_i·λ_j = 2πδ_ij 위반",
                              max_error=err)

    # ── 생성 경로 3가지 ─────────────────────────────────────────────────────
    @classmethod
    def from_periods(cls, lambda1, lambda2) -> "Lattice":
        lam = np.array([lambda1, lambda2], dtype=float)
        if abs(np.linalg.det(lam)) < 1e-300:
            raise ConfigError("격자 생성자가 선형 종속", lambda1=lambda1,
                              lambda2=lambda2)
        kmat = 2.0 * np.pi * np.linalg.inv(lam).T
        return cls(lam[0], lam[1], kmat[0], kmat[1])

    @classmethod
    def from_dual(cls, k1, k2) -> "Lattice":
        kmat = np.array([k1, k2], dtype=float)
        if abs(np.linalg.det(kmat)) < 1e-300:
            raise ConfigError("쌍대 생성자가 선형 종속", k1=k1, k2=k2)
        lam = 2.0 * np.pi * np.linalg.inv(kmat).T
        return cls(lam[0], lam[1], kmat[0], kmat[1])

    @classmethod
    def symmetric(cls, k: float, omega: float) -> "Lattice":
        """k₁ = k(cos ω, sin ω), k₂ = k(cos ω, −sin ω) 대칭 격자."""
        if not (k > 0.0):
            raise ConfigError(f"대칭 격자의 |k| 는 양수여야 함: {k}")
        if not (0.0 < omega < np.pi / 2):
            raise ConfigError(f"ω 는 (0, π/2) 범위여야 함: {omega}")
        return cls.from_dual(
            k * np.array([np.cos(omega), np.sin(omega)]),
            k * np.array([np.cos(omega), -np.sin(omega)]),
        )

    @property
    def dual_matrix(self) -> np.ndarray:
        return np.vstack([self.k1, self.k2])

    @property
    def cell_area(self) -> float:
        return float(abs(np.linalg.det(np.vstack([self.lambda1, self.lambda2]))))

    def wave_vector(self, n1, n2) -> np.ndarray:
        """k = n₁k₁ + n₂k₂ (정수 배열 입력 시 마지막 축이 성분)."""
        n1 = np.asarray(n1, dtype=float)
        n2 = np.asarray(n2, dtype=float)
        return n1[..., None] * self.k1 + n2[..., None] * self.k2


def lattice_enumerate(lat: Lattice, radius: float) -> list[tuple[int, int, np.ndarray]]:
    """
    |k| ≤ radius 인 모든 k = n₁k₁ + n₂k₂ 를 정확히 한 번씩 반환.

    정렬 순서: (|k|, n₁, n₂): 실행마다 동일한 순서를 보장.
    |n_i| = |k·λ_i|/(2π) ≤ radius·|λ_i|/(2π) 로 탐색 범위를 한정.
    """
    if radius <= 0.0:
        raise ConfigError(f"radius 는 양수여야 함: {radius}")
    b1 = int(np.floor(radius * np.linalg.norm(lat.lambda1) / (2.0 * np.pi))) + 1
    b2 = int(np.floor(radius * np.linalg.norm(lat.lambda2) / (2.0 * np.pi))) + 1
    n1, n2 = np.meshgrid(np.arange(-b1, b1 + 1), np.arange(-b2, b2 + 1),
                         indexing="ij")
    kvec = lat.wave_vector(n1, n2)
    knorm = np.linalg.norm(kvec, axis=-1)
    mask = knorm <= radius * (1.0 + 1e-14)

    entries = sorted(
        zip(knorm[mask], n1[mask], n2[mask]),
        key=lambda item: (round(float(item[0]), 12), int(item[1]), int(item[2])),
    )
    return [(int(a), int(b), lat.wave_vector(a, b)) for _, a, b in entries]


# =============================================================================
# [타입 3] ChebyshevGrid — 수직 방향 이산화
# =============================================================================

@dataclass(frozen=True, eq=False)
class ChebyshevGrid:
    """
    [−d, 0] 위 Chebyshev–Gauss–Lobatto 격자.

    nodes[0] = 0 (수면), nodes[M] = −d (바닥).
    diff  : 1계 미분 행렬 (d/dz)
    diff2 : diff @ diff (이산 curl∘curl 과 정확히 일치하도록 제곱으로 정의)
    weights       : ∫_{−d}^{0} f dz 구적 가중치 (Clenshaw–Curtis)
    cumulative    : F(z_j) = ∫_{−d}^{z_j} f dz 를 주는 누적 적분 행렬
    """
    M: int
    d: float

    def __post_init__(self):
        if int(self.M) < _MIN_Z_NODES:
            raise ConfigError(f"z 노드 수 M 은 {_MIN_Z_NODES} 이상이어야 함: {self.M}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "d", float(self.d))

    @cached_property
    def xi(self) -> np.ndarray:
        return np.cos(np.pi * np.arange(self.M + 1) / self.M)

    @cached_property
    def nodes(self) -> np.ndarray:
        return 0.5 * self.d * (self.xi - 1.0)

    @cached_property
    def stretch(self) -> np.ndarray:
        """s(z) = (z + d)/d: 평탄화 변환의 수직 가중."""
        return (self.nodes + self.d) / self.d

    @cached_property
    def diff(self) -> np.ndarray:
        M, x = self.M, self.xi
        c = np.hstack([2.0, np.ones(M - 1), 2.0]) * (-1.0) ** np.arange(M + 1)
        dx = x[:, None] - x[None, :]
        mat = np.outer(c, 1.0 / c) / (dx + np.eye(M + 1))
        mat = mat - np.diag(mat.sum(axis=1))
        return (2.0 / self.d) * mat

    @cached_property
    def diff2(self) -> np.ndarray:
        return self.diff @ self.diff

    @cached_property
    def _values_to_cheb(self) -> np.ndarray:
        return np.linalg.inv(npcheb.chebvander(self.xi, self.M))

    @cached_property
    def cumulative(self) -> np.ndarray:
        int_coeffs = npcheb.chebint(np.eye(self.M + 1), lbnd=-1.0, axis=0)
        vander = npcheb.chebvander(self.xi, self.M + 1)
        return 0.5 * self.d * (vander @ int_coeffs @ self._values_to_cheb)

    @cached_property
    def weights(self) -> np.ndarray:
        return self.cumulative[0].copy()

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """마지막 축(z)에 대한 ∫_{−d}^{0}."""
        return values @ self.weights

    def interpolate(self, values: np.ndarray, z) -> np.ndarray:
        """마지막 축을 z 노드 값으로 보고 임의 z 에서 barycentric 보간."""
        return barycentric_interpolate(self.nodes, values, z, axis=-1)


# =============================================================================
# [타입 4] Discretization — 절단 차수 + 격자 + 변환
# =============================================================================

@dataclass(frozen=True, eq=False)
class Discretization:
    """
    수치 설정 한 벌: 물리 상수, 격자, 수평 절단 N, 수직 노드 수 M.

    모든 연산자 객체(곡률 해법, 평탄화 연산자 등)가 이 객체 하나를 공유.
    생성 후 불변 → 여러 스레드에서 동시에 읽어도 안전.
    """
    params: PhysicalParams
    lattice: Lattice
    N: int = 8
    M: int = 32

    def __post_init__(self):
        if int(self.N) < 1:
            raise ConfigError(f"절단 차수 N 은 1 이상이어야 함: {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))

    # ── 수직 격자 ───────────────────────────────────────────────────────────
    @cached_property
    def grid(self) -> ChebyshevGrid:
        return ChebyshevGrid(self.M, self.params.d)

    # ── 수평 파수 배열 ──────────────────────────────────────────────────────
    @cached_property
    def orders(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @cached_property
    def n1(self) -> np.ndarray:
        return np.broadcast_to(self.orders[:, None], (self.size, self.size))

    @cached_property
    def n2(self) -> np.ndarray:
        return np.broadcast_to(self.orders[None, :], (self.size, self.size))

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    @cached_property
    def kx(self) -> np.ndarray:
        return self.n1 * self.lattice.k1[0] + self.n2 * self.lattice.k2[0]

    @cached_property
    def ky(self) -> np.ndarray:
        return self.n1 * self.lattice.k1[1] + self.n2 * self.lattice.k2[1]

    @cached_property
    def k_sq(self) -> np.ndarray:
        return self.kx ** 2 + self.ky ** 2

    @cached_property
    def k_norm(self) -> np.ndarray:
        return np.sqrt(self.k_sq)

    @property
    def zero_index(self) -> tuple[int, int]:
        return (self.N, self.N)

    def index(self, n1: int, n2: int) -> tuple[int, int]:
        if abs(n1) > self.N or abs(n2) > self.N:
            raise OutOfRangeError(f"모드 ({n1}, {n2}) 가 절단 N={self.N} 밖", n1=n1, n2=n2)
        return (n1 + self.N, n2 + self.N)

    def with_truncation(self, N: int) -> "Discretization":
        return Discretization(self.params, self.lattice, N, self.M)

    # ── 패딩 격자 ───────────────────────────────────────────────────────────
    @property
    def pad(self) -> int:
        return _PAD_FACTOR * self.size

    @cached_property
    def _pad_slots(self) -> np.ndarray:
        return self.orders % self.pad

    @cached_property
    def physical_points(self) -> tuple[np.ndarray, np.ndarray]:
        """패딩 격자 점 x′ = a₁λ₁ + a₂λ₂ (a_j = m/P), 형상 (P, P)."""
        a = np.arange(self.pad) / self.pad
        a1, a2 = np.meshgrid(a, a, indexing="ij")
        lat = self.lattice
        return (a1 * lat.lambda1[0] + a2 * lat.lambda2[0],
                a1 * lat.lambda1[1] + a2 * lat.lambda2[1])

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        """계수 (..., 2N+1, 2N+1) → 패딩 격자 값 (..., P, P) 복소수."""
        shape = coeffs.shape[:-2] + (self.pad, self.pad)
        spectrum = np.zeros(shape, dtype=complex)
        slots = self._pad_slots
        spectrum[..., slots[:, None], slots[None, :]] = coeffs
        return sp_fft.ifft2(spectrum, axes=(-2, -1), norm="forward")

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """패딩 격자 값 (..., P, P) → 절단 계수 (..., 2N+1, 2N+1)."""
        spectrum = sp_fft.fft2(values, axes=(-2, -1), norm="forward")
        slots = self._pad_slots
        return spectrum[..., slots[:, None], slots[None, :]]

    def ddx(self, coeffs: np.ndarray) -> np.ndarray:
        return 1j * self.kx * coeffs

    def ddy(self, coeffs: np.ndarray) -> np.ndarray:
        return 1j * self.ky * coeffs

    def synthesize_at(self, coeffs: np.ndarray, x: float, y: float) -> np.ndarray:
        """한 점 x′ 에서의 Fourier 합 (마지막 두 축 축약)."""
        phase = np.exp(1j * (self.kx * x + self.ky * y))
        return np.tensordot(coeffs, phase, axes=([-2, -1], [0, 1]))


# =============================================================================
# 대칭 클래스 헬퍼
# =============================================================================

def mirror(coeffs: np.ndarray) -> np.ndarray:
    """계수 배열의 k → −k 반전 (마지막 두 축)."""
    return coeffs[..., ::-1, ::-1]


def class_leakage(coeffs: np.ndarray, parity: str) -> float:
    """
    짝 클래스(even): ĉ(−k) = ĉ(k) 실수
    홀 클래스(odd) : ĉ(−k) = −ĉ(k) 순허수
    위반 정도를 max-norm 으로 반환 (상대값 아님).
    """
    if parity == "even":
        return float(max(np.max(np.abs(coeffs.imag), initial=0.0),
                         np.max(np.abs(coeffs - mirror(coeffs)), initial=0.0)))
    if parity == "odd":
        return float(max(np.max(np.abs(coeffs.real), initial=0.0),
                         np.max(np.abs(coeffs + mirror(coeffs)), initial=0.0)))
    raise ValueError(f"알 수 없는 parity: {parity}")


def project_class(coeffs: np.ndarray, parity: str) -> np.ndarray:
    """짝/홀 클래스로 직교 사영."""
    if parity == "even":
        return 0.5 * (coeffs + mirror(coeffs)).real.astype(complex)
    return 1j * (0.5 * (coeffs - mirror(coeffs)).imag)


# =============================================================================
# [타입 5] SurfaceProfile
# =============================================================================

@dataclass(frozen=True, eq=False)
class SurfaceProfile:
    """
    짝·실수 표면 η(x′) = Σ η̂^(k) e^{ik·x′}, η̂^(k) = η̂^(−k) ∈ ℝ.

    환원 연산자 H 의 값도 같은 타입으로 표현 (이 경우 −d 조건은 무관).
    유체 영역 조건 min η > −d 는 ensure_domain() 에서 검사.
    """
    coeffs: np.ndarray
    setup: Discretization

    def __post_init__(self):
        arr = np.asarray(self.coeffs)
        expected = (self.setup.size, self.setup.size)
        if arr.shape != expected:
            raise ConfigError(f"표면 계수 형상 {arr.shape} ≠ {expected}")
        leak = class_leakage(arr.astype(complex), "even")
        scale = max(1.0, float(np.max(np.abs(arr), initial=0.0)))
        if leak > _CLASS_RTOL * scale:
            raise ClassViolationError("표면 계수가 짝·실수 클래스가 아님", leakage=leak)
        real = np.array(arr.real, dtype=float)
        real.setflags(write=False)
        object.__setattr__(self, "coeffs", real)

    # ── 생성 ───────────────────────────────────────────────────────────────
    @classmethod
    def zeros(cls, setup: Discretization) -> "SurfaceProfile":
        return cls(np.zeros((setup.size, setup.size)), setup)

    @classmethod
    def from_modes(cls, setup: Discretization,
                   modes: dict[tuple[int, int], float]) -> "SurfaceProfile":
        """{(n₁, n₂): η̂}: ±k 양쪽에 같은 값을 기록 (cos 진폭은 2η̂)."""
        arr = np.zeros((setup.size, setup.size))
        for (n1, n2), value in modes.items():
            arr[setup.index(n1, n2)] = value
            arr[setup.index(-n1, -n2)] = value
        return cls(arr, setup)

    @classmethod
    def from_spectral(cls, setup: Discretization, coeffs: np.ndarray) -> "SurfaceProfile":
        """임의 복소 계수를 짝 클래스로 사영해 생성."""
        return cls(project_class(np.asarray(coeffs, dtype=complex), "even").real, setup)

    # ── 조회 ───────────────────────────────────────────────────────────────
    def coefficient(self, n1: int, n2: int) -> float:
        return float(self.coeffs[self.setup.index(n1, n2)])

    @property
    def mean(self) -> float:
        return float(self.coeffs[self.setup.zero_index])

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def physical(self) -> np.ndarray:
        return self.setup.to_physical(self.coeffs).real

    def gradient_physical(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.setup
        return (s.to_physical(s.ddx(self.coeffs)).real,
                s.to_physical(s.ddy(self.coeffs)).real)

    def laplacian_coeffs(self) -> np.ndarray:
        return -self.setup.k_sq * self.coeffs

    def evaluate(self, x: float, y: float) -> float:
        return float(self.setup.synthesize_at(self.coeffs, x, y).real)

    def gradient_at(self, x: float, y: float) -> tuple[float, float]:
        s = self.setup
        return (float(s.synthesize_at(s.ddx(self.coeffs), x, y).real),
                float(s.synthesize_at(s.ddy(self.coeffs), x, y).real))

    def min_value(self) -> float:
        return float(self.physical().min())

    def ensure_domain(self) -> None:
        """min η > −d 검사. 위반 시 DegenerateDomainError."""
        d = self.setup.params.d
        low = self.min_value()
        if low <= -d:
            raise DegenerateDomainError(
                f"유체 영역 퇴화: min η = {low:.6g} ≤ −d = {-d:.6g}", min_eta=low, d=d
            )

    # ── 산술 ───────────────────────────────────────────────────────────────
    def __add__(self, other: "SurfaceProfile") -> "SurfaceProfile":
        return SurfaceProfile(self.coeffs + other.coeffs, self.setup)

    def __sub__(self, other: "SurfaceProfile") -> "SurfaceProfile":
        return SurfaceProfile(self.coeffs - other.coeffs, self.setup)

    def scaled(self, factor: float) -> "SurfaceProfile":
        return SurfaceProfile(factor * self.coeffs, self.setup)


# =============================================================================
# [타입 6] Field3D
# =============================================================================

@dataclass(frozen=True, eq=False)
class Field3D:
    """
    3성분 벡터장. 각 파수 k 마다 z 격자 위 복소 프로파일 3개.

    대칭 클래스 (유속장일 때): 성분 0,1 짝 클래스, 성분 2 홀 클래스.
    발산 검사용 임의 장(예: u̇ = (0,0,ż+d))도 담을 수 있도록 생성 시 강제하지 않음.
    """
    coeffs: np.ndarray
    setup: Discretization

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex)
        s = self.setup
        expected = (3, s.M + 1, s.size, s.size)
        if arr.shape != expected:
            raise ConfigError(f"Field3D 형상 {arr.shape} ≠ {expected}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zeros(cls, setup: Discretization) -> "Field3D":
        return cls(np.zeros((3, setup.M + 1, setup.size, setup.size), dtype=complex), setup)

    @classmethod
    def from_laminar(cls, setup: Discretization, flow: "LaminarFlow") -> "Field3D":
        """k = 0 모드에 층류 U[c₁,c₂] 를 주입."""
        arr = np.zeros((3, setup.M + 1, setup.size, setup.size), dtype=complex)
        u1, u2 = flow.profiles(setup.params.alpha, setup.grid.nodes)
        arr[0, :, setup.N, setup.N] = u1
        arr[1, :, setup.N, setup.N] = u2
        return cls(arr, setup)

    def class_leakage(self) -> float:
        return max(class_leakage(self.coeffs[0], "even"),
                   class_leakage(self.coeffs[1], "even"),
                   class_leakage(self.coeffs[2], "odd"))

    def projected(self) -> "Field3D":
        """성분별 대칭 클래스로 사영한 사본."""
        return Field3D(np.stack([project_class(self.coeffs[0], "even"),
                                 project_class(self.coeffs[1], "even"),
                                 project_class(self.coeffs[2], "odd")]), self.setup)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def surface_trace(self) -> np.ndarray:
        return self.coeffs[:, 0]

    def physical(self) -> np.ndarray:
        """패딩 격자 값 (3, M+1, P, P) 실수."""
        return self.setup.to_physical(self.coeffs).real

    def __add__(self, other: "Field3D") -> "Field3D":
        return Field3D(self.coeffs + other.coeffs, self.setup)

    def __sub__(self, other: "Field3D") -> "Field3D":
        return Field3D(self.coeffs - other.coeffs, self.setup)

    def scaled(self, factor: float) -> "Field3D":
        return Field3D(factor * self.coeffs, self.setup)


# =============================================================================
# [타입 7] LaminarFlow
# =============================================================================

@dataclass(frozen=True)
class LaminarFlow:
    """층류 U[c₁,c₂] = c₁(cos αz, −sin αz, 0) + c₂(sin αz, cos αz, 0)."""
    c1: float
    c2: float

    @property
    def c(self) -> np.ndarray:
        return np.array([self.c1, self.c2], dtype=float)

    def profiles(self, alpha: float, z) -> tuple[np.ndarray, np.ndarray]:
        ca, sa = np.cos(alpha * np.asarray(z)), np.sin(alpha * np.asarray(z))
        return (self.c1 * ca + self.c2 * sa, -self.c1 * sa + self.c2 * ca)

    def derivative_profiles(self, alpha: float, z) -> tuple[np.ndarray, np.ndarray]:
        """U₁′ = αU₂, U₂′ = −αU₁."""
        u1, u2 = self.profiles(alpha, z)
        return (alpha * u2, -alpha * u1)


def laminar_eval(flow: LaminarFlow, params: PhysicalParams, z: float) -> np.ndarray:
    """층류 속도 벡터 (세 번째 성분은 정확히 0)."""
    u1, u2 = flow.profiles(params.alpha, z)
    return np.array([float(u1), float(u2), 0.0])


def bernoulli_Q(flow: LaminarFlow) -> float:
    """Q(c₁, c₂) = (c₁² + c₂²)/2."""
    return 0.5 * (flow.c1 ** 2 + flow.c2 ** 2)


# =============================================================================
# 평탄화 기하
# =============================================================================

@dataclass(frozen=True, eq=False)
class FlatGeometry:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    J: float


def flatten_geometry(eta: SurfaceProfile, d: float, point) -> FlatGeometry:
    """
    평탄화 F 의 기저 벡터와 Jacobian 을 한 점에서 평가.

    인자:
        eta   : 표면
        d     : 수심
        point : (x, y, ż), −d ≤ ż ≤ 0

    반환:
        FlatGeometry(f1, f2, f3, J), J = (η + d)/d
    """
    x, y, zdot = (float(v) for v in point)
    h = eta.evaluate(x, y)
    if h <= -d:
        raise DegenerateDomainError(f"η({x:.4g},{y:.4g}) = {h:.6g} ≤ −d", eta=h, d=d)
    hx, hy = eta.gradient_at(x, y)
    s = (zdot + d) / d
    jac = (h + d) / d
    return FlatGeometry(
        f1=np.array([1.0, 0.0, hx * s]),
        f2=np.array([0.0, 1.0, hy * s]),
        f3=np.array([0.0, 0.0, jac]),
        J=jac,
    )


# =============================================================================
# 점 평가
# =============================================================================

def eval_field(field: Field3D, x: float, y: float, z: float) -> np.ndarray:
    """
    Field3D 를 한 점 (x′, z) 에서 합성. 수직은 barycentric 보간.

    z 가 [−d, 0] 밖이면 OutOfRangeError.
    """
    d = field.setup.params.d
    if z > _Z_RANGE_TOL * d or z < -d * (1.0 + _Z_RANGE_TOL):
        raise OutOfRangeError(f"z = {z} 가 [−d, 0] 밖", z=z, d=d)
    profiles = field.setup.synthesize_at(field.coeffs, x, y)   # (3, M+1)
    scale = max(1.0, float(np.max(np.abs(profiles))))
    residue = float(np.max(np.abs(profiles.imag)))
    if residue > _IMAG_RTOL * scale * 1e3:
        _logger.debug("eval_field: 허수부 잔차 %.3e (클래스 밖 장)", residue)
    values = field.setup.grid.interpolate(profiles.real, z)
    return np.asarray(values, dtype=float).reshape(3)
