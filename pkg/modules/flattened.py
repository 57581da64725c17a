# modules/flattened.py
# 평탄화 좌표계의 비선형 연산자: div/curl, N, B, G, R, w^η/Ũ^η 이동, C_α 역연산, v(η,c), 환원 연산자 H
#
# [설계 결정 근거]
# ① 점별 곱(N, B, J⁻¹)은 모두 2배 패딩 격자에서 계산한 뒤 절단 (core.Discretization).
# ② I − M = E + Q 분해: E 는 η 의 1차 항(E·U = L̃ 정확히), Q 는 수평 2×2 블록만 가짐.
#    → Ñ(ṽ, η) = Q·U + (I − M)ṽ 로 상쇄 없이 평가.
# ③ Bernoulli 나머지 B − |c|² − DB 도 상쇄 없는 전개식으로 평가:
#    |c|²e²(3+2e)/J² + j₂(2c·ṽ + |ṽ_h|²) + |ṽ_h|² + third²/J²,  j₂ = −e(2+e)/J²
#    표면장력 나머지 부호는 ½B = Q 균형에서 직접 전개한 부호를 따름.
# ④ C_α 역연산: k ≠ 0 은 v̂₃ 2점 경계값 문제(경계 행을 Dirichlet 조건으로 교체),
#    v̂₁, v̂₂ 는 대수식으로 복원. k = 0 은 1계 ODE 계에 적분 조건 2행을 덧댄 정사각 계.
#    D2 = D @ D 이므로 이산 curl∘curl = grad div − Δ 가 정확히 성립.
# ⑤ v(η,c) 는 Picard 반복, 연속 반복 간 비율이 0.9 를 넘으면 NonContractionError.

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    Discretization,
    Field3D,
    IterationLimitError,
    LaminarFlow,
    NonContractionError,
    PreconditionError,
    ResonanceError,
    SolvabilityError,
    SurfaceProfile,
    class_leakage,
    eval_field,
    flatten_geometry,
)
from modules.linear_modes import classify_case

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_PICARD_RTOL       = 1e-12
_PICARD_MAX_ITER   = 50
_CONTRACTION_LIMIT = 0.9
_DIV_RTOL          = 1e-9
_SOLVABILITY_TOL   = 1e-10
_TINY              = 1e-300


class DivergenceError(PreconditionError):
    code = "rhs_not_divergence_free"


# =============================================================================
# 스펙트럴 미분 헬퍼
# =============================================================================

def _ddz(setup: Discretization, arr: np.ndarray) -> np.ndarray:
    """z 축(뒤에서 세 번째 축)에 Chebyshev 미분 행렬 적용."""
    return np.einsum("ij,...jab->...iab", setup.grid.diff, arr)


def dotted_curl(setup: Discretization, coeffs: np.ndarray) -> np.ndarray:
    """평탄 좌표 curl (∂x → ikx, ∂y → iky, ∂z → D). 입력/출력 (3, M+1, n, n)."""
    kx, ky = setup.kx, setup.ky
    x1, x2, x3 = coeffs
    return np.stack([
        1j * ky * x3 - _ddz(setup, x2),
        _ddz(setup, x1) - 1j * kx * x3,
        1j * kx * x2 - 1j * ky * x1,
    ])


def dotted_div(setup: Discretization, coeffs: np.ndarray) -> np.ndarray:
    return 1j * setup.kx * coeffs[0] + 1j * setup.ky * coeffs[1] + _ddz(setup, coeffs[2])


# =============================================================================
# 표면 기하 (패딩 격자)
# =============================================================================

class SurfaceGeometry:
    """
    η 의 패딩 격자 값과 평탄화 계수.

    e  : η/d          (P, P)
    hx : ∂xη, hy : ∂yη (P, P)
    s  : (ż + d)/d    (M+1, 1, 1)
    J  : 1 + e        (P, P)
    """

    def __init__(self, eta: SurfaceProfile):
        eta.ensure_domain()
        self.eta = eta
        self.setup = eta.setup
        d = self.setup.params.d
        self.values = eta.physical()
        self.e = self.values / d
        self.hx, self.hy = eta.gradient_physical()
        self.J = 1.0 + self.e
        self.s = self.setup.grid.stretch[:, None, None]

    @cached_property
    def sx(self) -> np.ndarray:
        return self.hx * self.s

    @cached_property
    def sy(self) -> np.ndarray:
        return self.hy * self.s

    def i_minus_m(self, u: np.ndarray) -> np.ndarray:
        """(I − M)u̇, M_jl = f_j·f_l/J. 입력/출력 (3, M+1, P, P)."""
        e, J, sx, sy = self.e, self.J, self.sx, self.sy
        return np.stack([
            ((e - sx * sx) * u[0] - sx * sy * u[1]) / J - sx * u[2],
            (-sx * sy * u[0] + (e - sy * sy) * u[1]) / J - sy * u[2],
            -sx * u[0] - sy * u[1] - e * u[2],
        ])

    def metric(self, u: np.ndarray) -> np.ndarray:
        """M u̇ = u̇ − (I − M)u̇."""
        return u - self.i_minus_m(u)

    def quadratic_part(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        """Q·U: I − M 에서 선형부 E 를 뺀 나머지 (수평 블록만)."""
        e2, J, sx, sy = self.e ** 2, self.J, self.sx, self.sy
        return np.stack([
            -((e2 + sx * sx) * u1 + sx * sy * u2) / J,
            -(sx * sy * u1 + (e2 + sy * sy) * u2) / J,
            np.zeros(np.broadcast_shapes(sx.shape, np.shape(u1))),
        ])

    def pushforward(self, u: np.ndarray) -> np.ndarray:
        """평탄 반변 성분 u̇ → 물리 직교 성분 u."""
        return np.stack([
            u[0] / self.J,
            u[1] / self.J,
            (self.sx * u[0] + self.sy * u[1] + self.J * u[2]) / self.J,
        ])

    def pullback(self, u: np.ndarray) -> np.ndarray:
        """물리 직교 성분 u → 평탄 반변 성분 u̇ (Σ u̇_l f_l = J u)."""
        return np.stack([
            self.J * u[0],
            self.J * u[1],
            u[2] - self.sx * u[0] - self.sy * u[1],
        ])

    def physical_points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """평탄 격자점의 물리 좌표 (x, y, z = ż + η s), 형상 (M+1, P, P)."""
        x, y = self.setup.physical_points
        zdot = self.setup.grid.nodes[:, None, None]
        z = zdot + self.values * self.s
        return (np.broadcast_to(x, z.shape), np.broadcast_to(y, z.shape), z)


# =============================================================================
# [함수 1] 평탄 좌표 div / curl
# =============================================================================

def flattened_div(field: Field3D, eta: SurfaceProfile) -> np.ndarray:
    """∇_ẋ·u̇ 계수 (M+1, n, n). 물리 발산은 이 값 / J."""
    eta.ensure_domain()
    return dotted_div(field.setup, field.coeffs)


def flattened_curl(field: Field3D, eta: SurfaceProfile) -> Field3D:
    """
    물리 curl u 를 평탄 격자 위 직교 성분으로 반환.

    curl u = (1/J) Σ_i f_i (∇̇ × (M u̇))_i  = pushforward(∇̇ × (M u̇))
    """
    geo = SurfaceGeometry(eta)
    setup = field.setup
    metric = setup.to_spectral(geo.metric(field.physical()))
    rot = dotted_curl(setup, metric)
    phys = geo.pushforward(setup.to_physical(rot).real)
    return Field3D(setup.to_spectral(phys), setup)


def pullback_values(values: np.ndarray, eta: SurfaceProfile) -> Field3D:
    """평탄 격자점에서 샘플한 물리 벡터장 (3, M+1, P, P) → u̇ 계수."""
    geo = SurfaceGeometry(eta)
    return Field3D(eta.setup.to_spectral(geo.pullback(values)), eta.setup)


def pushforward_values(field: Field3D, eta: SurfaceProfile) -> np.ndarray:
    """u̇ 계수 → 평탄 격자점의 물리 벡터 값 (3, M+1, P, P)."""
    geo = SurfaceGeometry(eta)
    return geo.pushforward(field.physical())


def physical_point_velocity(field: Field3D, eta: SurfaceProfile, x: float, y: float,
                            z: float) -> np.ndarray:
    """물리 점 (x′, z), −d ≤ z ≤ η(x′) 에서 물리 속도. ż = d(z − η)/(η + d)."""
    d = eta.setup.params.d
    h = eta.evaluate(x, y)
    zdot = d * (z - h) / (h + d)
    udot = eval_field(field, x, y, zdot)
    geom = flatten_geometry(eta, d, (x, y, zdot))
    return (udot[0] * geom.f1 + udot[1] * geom.f2 + udot[2] * geom.f3) / geom.J


# =============================================================================
# [함수 2] 비선형항 N, B
# =============================================================================

def nonlinearity_N(u_dot: Field3D, eta: SurfaceProfile) -> Field3D:
    """N(u̇, η) = (I − M)u̇ (u̇ 에 선형, η = 0 이면 0)."""
    geo = SurfaceGeometry(eta)
    setup = u_dot.setup
    return Field3D(setup.to_spectral(geo.i_minus_m(u_dot.physical())), setup)


def _surface_quadratic(geo: SurfaceGeometry, a: np.ndarray) -> np.ndarray:
    """B = J⁻²[a₁² + a₂² + (η_x a₁ + η_y a₂ + J a₃)²] (ż = 0 에서 s = 1)."""
    third = geo.hx * a[0] + geo.hy * a[1] + geo.J * a[2]
    return (a[0] ** 2 + a[1] ** 2 + third ** 2) / geo.J ** 2


def nonlinearity_B(u_dot: Field3D, eta: SurfaceProfile) -> SurfaceProfile:
    """수면 ż = 0 에서 B(u̇, η) (= 물리 속도의 |u|²)."""
    geo = SurfaceGeometry(eta)
    setup = u_dot.setup
    surface = setup.to_physical(u_dot.coeffs[:, 0]).real
    return SurfaceProfile.from_spectral(setup, setup.to_spectral(_surface_quadratic(geo, surface)))


# =============================================================================
# [함수 3] w^η / Ũ^η 이동
# =============================================================================

@dataclass(frozen=True, eq=False)
class ShiftData:
    w_eta: Field3D
    c_tilde: np.ndarray
    U_tilde: LaminarFlow

    @cached_property
    def field(self) -> Field3D:
        """w^η + Ũ^η."""
        return self.w_eta + Field3D.from_laminar(self.w_eta.setup, self.U_tilde)


def _laminar_mean_matrix(alpha: float, d: float) -> np.ndarray:
    """∫_{−d}^{0} U[c̃] dz = A c̃ 인 2×2 행렬 (α = 0 극한 포함)."""
    S = d * np.sinc(alpha * d / np.pi)
    C = -0.5 * alpha * d * d * np.sinc(alpha * d / (2.0 * np.pi)) ** 2
    return np.array([[S, C], [-C, S]])


def check_shift_solvability(alpha: float, d: float) -> None:
    """αd ∈ 2πℤ∖{0} 이면 c̃ 계가 특이 → SolvabilityError."""
    if alpha != 0.0 and abs(np.sinc(alpha * d / (2.0 * np.pi))) <= _SOLVABILITY_TOL:
        raise SolvabilityError("αd ∈ 2πℤ∖{0}: 층류 이동 c̃ 를 정할 수 없음",
                               alpha=alpha, d=d)


def shift_data(eta: SurfaceProfile, flow: LaminarFlow) -> ShiftData:
    """
    명시적 이동장 w^η 와 평균 보존용 층류 Ũ^η = U[c̃₁, c̃₂].

    w^η = ( ηU₁/d + αηsU₂,  ηU₂/d − αηsU₁,  −s(η_xU₁ + η_yU₂) )
    c̃ 는 ∫Ũ_j = ⟨∫[U_j(z+ηs)J − U_j J − U_j′ηs] dz⟩ 를 풀어서 구함.
    """
    setup = eta.setup
    params = setup.params
    alpha, d = params.alpha, params.d
    check_shift_solvability(alpha, d)
    geo = SurfaceGeometry(eta)

    z = setup.grid.nodes
    s = setup.grid.stretch
    u1, u2 = flow.profiles(alpha, z)

    # w^η: η 와 z 함수의 곱이므로 계수 공간에서 정확히 구성
    eh = eta.coeffs.astype(complex)
    ex, ey = setup.ddx(eh), setup.ddy(eh)
    w = np.stack([
        eh[None] * (u1 / d + alpha * s * u2)[:, None, None],
        eh[None] * (u2 / d - alpha * s * u1)[:, None, None],
        -(ex[None] * u1[:, None, None] + ey[None] * u2[:, None, None]) * s[:, None, None],
    ])

    # 적분 우변 (상쇄 없는 형태: U(z+δ) − U(z) − U′δ = U(cos αδ − 1) + U′(sin αδ/α − δ))
    delta = geo.values[None] * s[:, None, None]
    cos_m1 = -2.0 * np.sin(0.5 * alpha * delta) ** 2
    sin_m = delta * (np.sinc(alpha * delta / np.pi) - 1.0)
    prof = [u1[:, None, None], u2[:, None, None]]
    dprof = [alpha * prof[1], -alpha * prof[0]]
    rhs = np.empty(2)
    for j in range(2):
        integrand = (geo.J * (prof[j] * cos_m1 + dprof[j] * sin_m)
                     + dprof[j] * delta * geo.e)
        rhs[j] = float(np.mean(np.tensordot(setup.grid.weights, integrand, axes=(0, 0))))

    c_tilde = np.linalg.solve(_laminar_mean_matrix(alpha, d), rhs)
    return ShiftData(w_eta=Field3D(w, setup), c_tilde=c_tilde,
                     U_tilde=LaminarFlow(float(c_tilde[0]), float(c_tilde[1])))


# =============================================================================
# [함수 4] C_α 역연산자
# =============================================================================

@dataclass(frozen=True, eq=False)
class CurlRHS:
    """
    w : 평탄 좌표에서 발산 0 인 벡터장
    f : ż = 0 에서 v₃ 값 (홀 클래스 계수, (n, n))
    """
    w: Field3D
    f: np.ndarray

    def divergence_residual(self) -> float:
        return float(np.max(np.abs(dotted_div(self.w.setup, self.w.coeffs))))


class CurlSolver:
    """
    C_α : v ↦ (∇×v − αv, v₃|_{ż=0}) 의 모드별 역연산.

    생성 시 모든 절단 모드에 대해 BVP 행렬을 미리 역행렬로 준비.
    """

    def __init__(self, setup: Discretization):
        self.setup = setup
        params = setup.params
        check_shift_solvability(params.alpha, params.d)
        self._check_resonance()

        grid = setup.grid
        M = setup.M
        alpha = params.alpha

        # k ≠ 0: v₃″ + (α² − |k|²)v₃ = r, v₃(0) = f, v₃(−d) = 0
        eye = np.eye(M + 1)
        shift = alpha ** 2 - setup.k_sq
        mats = grid.diff2[None, None] + shift[:, :, None, None] * eye[None, None]
        mats[..., 0, :] = eye[0]
        mats[..., M, :] = eye[M]
        mats[setup.zero_index] = eye
        self._bvp_inv = np.linalg.inv(mats)

        # k = 0: Dv₁ − αv₂ = w₂, Dv₂ + αv₁ = −w₁ (바닥 행 대신 ∫v_j = 0)
        D, W = grid.diff, grid.weights
        K = np.zeros((2 * M + 2, 2 * M + 2))
        K[:M, :M + 1] = D[:M]
        K[:M, M + 1:] = -alpha * eye[:M]
        K[M, :M + 1] = W
        K[M + 1:2 * M + 1, M + 1:] = D[:M]
        K[M + 1:2 * M + 1, :M + 1] = alpha * eye[:M]
        K[2 * M + 1, M + 1:] = W
        self._mean_inv = np.linalg.inv(K)

    def _check_resonance(self) -> None:
        setup = self.setup
        alpha = abs(setup.params.alpha)
        bad = []
        for i, j in zip(*np.nonzero((setup.k_norm < alpha) & (setup.k_sq > 0.0))):
            info = classify_case((setup.kx[i, j], setup.ky[i, j]), setup.params)
            if info.tag == "III":
                bad.append((int(setup.n1[i, j]), int(setup.n2[i, j])))
        if bad:
            raise ResonanceError("절단 모드 중 공명 수직 모드 존재 (C_α 비가역)", modes=bad)

    def solve(self, rhs: CurlRHS, check_divergence: bool = True) -> Field3D:
        setup = self.setup
        M = setup.M
        alpha = setup.params.alpha
        w1, w2, w3 = rhs.w.coeffs
        f = np.asarray(rhs.f, dtype=complex)

        if check_divergence:
            scale = float(np.max(np.abs(rhs.w.coeffs), initial=0.0)) * (
                float(np.max(setup.k_norm)) + float(np.max(np.abs(setup.grid.diff)))
            )
            resid = rhs.divergence_residual()
            if resid > _DIV_RTOL * max(scale, _TINY) and resid > 0.0:
                raise DivergenceError("C_α 우변 w 의 발산이 0 이 아님", residual=resid)

        kx, ky, ksq = setup.kx, setup.ky, setup.k_sq
        r = -1j * (kx * w2 - ky * w1) - alpha * w3
        r = r.copy()
        r[0] = f
        r[M] = 0.0
        v3 = np.einsum("abij,jab->iab", self._bvp_inv, r)
        i0 = setup.zero_index
        v3[:, i0[0], i0[1]] = 0.0
        dv3 = _ddz(setup, v3)

        safe = np.where(ksq > 0.0, ksq, 1.0)
        v1 = 1j * (kx * dv3 + ky * (w3 + alpha * v3)) / safe
        v2 = 1j * (ky * dv3 - kx * (w3 + alpha * v3)) / safe

        r0 = np.concatenate([w2[:M, i0[0], i0[1]], [0.0],
                             -w1[:M, i0[0], i0[1]], [0.0]])
        x0 = self._mean_inv @ r0
        v1[:, i0[0], i0[1]] = x0[:M + 1]
        v2[:, i0[0], i0[1]] = x0[M + 1:]
        return Field3D(np.stack([v1, v2, v3]), setup)

    def apply(self, v: Field3D) -> CurlRHS:
        """C_α v = (∇×v − αv, v₃(0))."""
        alpha = self.setup.params.alpha
        w = dotted_curl(self.setup, v.coeffs) - alpha * v.coeffs
        return CurlRHS(Field3D(w, self.setup), v.coeffs[2, 0].copy())


@lru_cache(maxsize=16)
def curl_solver(setup: Discretization) -> CurlSolver:
    return CurlSolver(setup)


def solve_C_alpha(rhs: CurlRHS) -> Field3D:
    """C_α⁻¹(w, f): 결과는 이산 Y (바닥 조건, k = 0 적분 조건, 모드별 발산 0)."""
    return curl_solver(rhs.w.setup).solve(rhs)


# =============================================================================
# [함수 5] 평탄화 문제 조립과 v(η, c)
# =============================================================================

@dataclass(frozen=True, eq=False)
class FlowSolution:
    """
    v(η, c) 고정점과 진단값.

    v          : 이동된 미지수 (식 ∇×v − αv = G(v,η) 의 해)
    shift      : w^η, c̃
    iterations : Picard 반복 횟수
    ratio      : 마지막 연속 차이 비율 (수축률 추정)
    """
    problem: "FlattenedProblem"
    v: Field3D
    iterations: int
    ratio: float

    @property
    def eta(self) -> SurfaceProfile:
        return self.problem.eta

    @property
    def c(self) -> np.ndarray:
        return self.problem.flow.c

    @property
    def shift(self) -> ShiftData:
        return self.problem.shift

    @cached_property
    def v_tilde(self) -> Field3D:
        """ṽ = v + w^η + Ũ^η."""
        return self.v + self.problem.shift.field

    @cached_property
    def u_dot(self) -> Field3D:
        """평탄 좌표 전체 속도 u̇ = U + ṽ."""
        return self.v_tilde + Field3D.from_laminar(self.v.setup, self.problem.flow)


class FlattenedProblem:
    """
    고정된 (η, c) 에 대한 평탄화 문제 한 벌.

    G(v) = ∇ × [절단(Q·U + (I − M)(v + w^η + Ũ^η))]
    f    = c₁η_x + c₂η_y
    """

    def __init__(self, eta: SurfaceProfile, c):
        self.eta = eta
        self.setup = eta.setup
        c = np.asarray(c, dtype=float).reshape(2)
        self.flow = LaminarFlow(float(c[0]), float(c[1]))
        self.geometry = SurfaceGeometry(eta)
        self.shift = shift_data(eta, self.flow)
        self.solver = curl_solver(self.setup)

        u1, u2 = self.flow.profiles(self.setup.params.alpha, self.setup.grid.nodes)
        self._laminar_term = self.geometry.quadratic_part(u1[:, None, None], u2[:, None, None])
        self._shift_phys = self.shift.field.physical()

    @cached_property
    def surface_forcing(self) -> np.ndarray:
        s = self.setup
        eh = self.eta.coeffs
        return 1j * (self.flow.c1 * s.kx + self.flow.c2 * s.ky) * eh

    def n_tilde(self, v: Field3D) -> np.ndarray:
        """Ñ(v + w^η + Ũ^η, η) 계수."""
        total = v.physical() + self._shift_phys
        return self.setup.to_spectral(self._laminar_term + self.geometry.i_minus_m(total))

    def G(self, v: Field3D) -> Field3D:
        return Field3D(dotted_curl(self.setup, self.n_tilde(v)), self.setup)

    def solve(self, v0: Field3D | None = None, rtol: float = _PICARD_RTOL,
              max_iter: int = _PICARD_MAX_ITER) -> FlowSolution:
        """
        Picard 반복 vⁿ⁺¹ = C_α⁻¹(G(vⁿ, η), c·∇η).

        예외:
            NonContractionError : 연속 차이 비율 > 0.9
            IterationLimitError : max_iter 초과
        """
        f = self.surface_forcing
        v = v0 if v0 is not None else Field3D.zeros(self.setup)
        prev_delta = None
        ratio = 0.0
        for it in range(1, max_iter + 1):
            nxt = self.solver.solve(CurlRHS(self.G(v), f), check_divergence=False)
            delta = float(np.max(np.abs(nxt.coeffs - v.coeffs)))
            size = nxt.max_abs()
            _logger.debug("Picard %d: Δ = %.3e, |v| = %.3e", it, delta, size)
            if prev_delta is not None and prev_delta > 0.0:
                ratio = delta / prev_delta
                if ratio > _CONTRACTION_LIMIT and delta > 1e3 * rtol * size:
                    raise NonContractionError(
                        "v(η,c) Picard 반복이 수축하지 않음 (η 가 너무 큼)",
                        ratio=ratio, iteration=it, eta_max=self.eta.max_abs_coeff(),
                    )
            v = nxt
            if delta <= rtol * size or delta == 0.0:
                _logger.debug("v(η,c) 수렴: %d 회, 비율 %.3e", it, ratio)
                return FlowSolution(self, v, it, ratio)
            prev_delta = delta
        raise IterationLimitError("v(η,c) Picard 반복 한도 초과", max_iter=max_iter,
                                  last_delta=prev_delta)

    # ── Bernoulli 나머지 ────────────────────────────────────────────────────
    def bernoulli_remainder(self, v_tilde_surface: np.ndarray) -> np.ndarray:
        """B(U+ṽ, η) − |c|² − DB[U,0](ṽ,η) 의 패딩 격자 값 (ż = 0)."""
        geo = self.geometry
        c = self.flow.c
        e, J = geo.e, geo.J
        vt = v_tilde_surface
        j2 = -e * (2.0 + e) / J ** 2
        ch = c[0] * vt[0] + c[1] * vt[1]
        vh2 = vt[0] ** 2 + vt[1] ** 2
        third = geo.hx * (c[0] + vt[0]) + geo.hy * (c[1] + vt[1]) + J * vt[2]
        return (float(c @ c) * e * e * (3.0 + 2.0 * e) / J ** 2
                + j2 * (2.0 * ch + vh2) + vh2 + third ** 2 / J ** 2)

    def curvature_remainder(self) -> np.ndarray:
        """∇·(∇η p / (√(1+p)(√(1+p)+1))) 계수, p = |∇η|²."""
        geo = self.geometry
        p = geo.hx ** 2 + geo.hy ** 2
        root = np.sqrt(1.0 + p)
        fac = p / (root * (root + 1.0))
        s = self.setup
        return s.ddx(s.to_spectral(geo.hx * fac)) + s.ddy(s.to_spectral(geo.hy * fac))

    def remainder_R(self, solution: FlowSolution) -> np.ndarray:
        """R(v, η) = −½[B − |c|² − DB] − σ·곡률 나머지 − c·c̃ (계수)."""
        s = self.setup
        vt = s.to_physical(solution.v_tilde.coeffs[:, 0]).real
        R = -0.5 * s.to_spectral(self.bernoulli_remainder(vt))
        R = R - s.params.sigma * self.curvature_remainder()
        R[s.zero_index] -= float(self.flow.c @ self.shift.c_tilde)
        return R

    def reduced(self, solution: FlowSolution) -> np.ndarray:
        """H = c₁v₁(0) + c₂v₂(0) + gη − σΔη − R (계수)."""
        s = self.setup
        top = solution.v.coeffs[:, 0]
        lin = (self.flow.c1 * top[0] + self.flow.c2 * top[1]
               + s.params.restoring(s.k_norm) * self.eta.coeffs)
        return lin - self.remainder_R(solution)


def solve_v_of_eta(eta: SurfaceProfile, c, v0: Field3D | None = None,
                   rtol: float = _PICARD_RTOL) -> FlowSolution:
    """(η, c) 에 대해 이산 평탄화 계를 풀어 v(η, c) 반환. η = 0 이면 v = 0."""
    return FlattenedProblem(eta, c).solve(v0=v0, rtol=rtol)


def nonlinearity_G(v: Field3D, eta: SurfaceProfile, c) -> Field3D:
    """G(v, η) = ∇ × Ñ(v + w^η + Ũ^η, η) (v 에 대해 아핀)."""
    return FlattenedProblem(eta, c).G(v)


@dataclass(frozen=True, eq=False)
class HEvaluation:
    H: SurfaceProfile
    raw: np.ndarray
    flow: FlowSolution


def evaluate_H(eta: SurfaceProfile, c, v0: Field3D | None = None) -> HEvaluation:
    """환원 연산자 H(η, c) 와 그 과정의 v(η, c) 를 함께 반환."""
    problem = FlattenedProblem(eta, c)
    flow = problem.solve(v0=v0)
    raw = problem.reduced(flow)
    return HEvaluation(H=SurfaceProfile.from_spectral(eta.setup, raw), raw=raw, flow=flow)


def reduced_H(eta: SurfaceProfile, c) -> SurfaceProfile:
    return evaluate_H(eta, c).H


# =============================================================================
# [함수 6] 잔차 보고
# =============================================================================

def residual_report(solution: FlowSolution, raw_H: np.ndarray | None = None) -> dict[str, float]:
    """
    (η, c, v) 의 정규화 잔차.

    beltrami           : ∇×v − αv − G(v, η)
    divergence         : ∇·v
    surface_kinematic  : v₃(0) − (c₁η_x + c₂η_y)
    bottom_kinematic   : v₃(−d)
    momentum_integral  : k = 0 의 ∫v_j dz
    bernoulli_reduced  : H(η, c)
    bernoulli_physical : ½|u|² + gη − σ·곡률 − Q  (물리 수면에서 직접)
    """
    problem = solution.problem
    setup = problem.setup
    params = setup.params
    v = solution.v.coeffs
    alpha = params.alpha
    kmax = float(np.max(setup.k_norm))
    dmax = float(np.max(np.abs(setup.grid.diff)))
    vmax = float(np.max(np.abs(v), initial=0.0))

    G = problem.G(solution.v).coeffs
    bel = dotted_curl(setup, v) - alpha * v - G
    bel_scale = (abs(alpha) + kmax + dmax) * vmax + float(np.max(np.abs(G), initial=0.0))
    div = dotted_div(setup, v)
    f = problem.surface_forcing
    f_scale = float(np.max(np.abs(f), initial=0.0))

    if raw_H is None:
        raw_H = problem.reduced(solution)
    eta_scale = problem.eta.max_abs_coeff() * float(np.max(params.restoring(setup.k_norm)))

    i0 = setup.zero_index
    moments = [abs(setup.grid.integrate(v[j, :, i0[0], i0[1]])) for j in range(2)]

    def _ratio(num: float, den: float) -> float:
        return float(num / den) if den > 0.0 else float(num)

    return {
        "beltrami": _ratio(float(np.max(np.abs(bel))), bel_scale),
        "divergence": _ratio(float(np.max(np.abs(div))), (kmax + dmax) * vmax),
        "surface_kinematic": _ratio(float(np.max(np.abs(v[2, 0] - f))), f_scale),
        "bottom_kinematic": _ratio(float(np.max(np.abs(v[2, -1]))), max(vmax, f_scale)),
        "momentum_integral": _ratio(max(moments), params.d * vmax),
        "bernoulli_reduced": _ratio(float(np.max(np.abs(raw_H))), eta_scale),
        "bernoulli_physical": _ratio(*physical_bernoulli(solution)),
    }


def physical_bernoulli(solution: FlowSolution) -> tuple[float, float]:
    """
    물리 수면 동역학 조건의 최대 잔차와 정규화 척도.

    ½|u|² + gη − σ∇·(∇η/√(1+|∇η|²)) − Q(c),  u = pushforward(U + ṽ) (ż = 0)
    """
    problem = solution.problem
    setup = problem.setup
    params = setup.params
    geo = problem.geometry
    top = setup.to_physical(solution.u_dot.coeffs[:, 0]).real
    speed2 = _surface_quadratic(geo, top)

    p = geo.hx ** 2 + geo.hy ** 2
    root = np.sqrt(1.0 + p)
    curv = setup.to_physical(
        setup.ddx(setup.to_spectral(geo.hx / root)) + setup.ddy(setup.to_spectral(geo.hy / root))
    ).real
    Q = 0.5 * float(problem.flow.c @ problem.flow.c)
    resid = 0.5 * speed2 + params.g * geo.values - params.sigma * curv - Q
    scale = Q + params.g * float(np.max(np.abs(geo.values))) + _TINY
    return float(np.max(np.abs(resid))), scale


def symmetry_leakage(solution: FlowSolution) -> float:
    """v 의 대칭 클래스 누설 (성분 0,1 짝 / 성분 2 홀)."""
    v = solution.v.coeffs
    return max(class_leakage(v[0], "even"), class_leakage(v[1], "even"),
               class_leakage(v[2], "odd"))
