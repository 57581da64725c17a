# modules/waves_2halfd.py
# 2차원 아핀 와도 파동 ↔ 2½차원 Beltrami 흐름 대응: 유선함수 리프트, 역추출, 2D 계 잔차
#
# [설계 결정 근거]
# ① 2½차원 흐름은 격자 방향 k_m = m₁k₁ + m₂k₂ 의 배수 모드만 가짐.
#    유선함수 ψ 는 x̄ = ē·x′ 의 1차원 Fourier 급수 × 평탄 좌표 ż 격자 프로파일.
# ② 리프트: u = −ψ_z ē + (αψ + β)e⊥ + ψ_x̄ e₃, e⊥ = (−ē_y, ē_x, 0).
#    물리 미분은 연쇄 법칙 f_z = ḟ_ż/J, f_x̄ = ḟ_x̄ − η′sḟ_ż/J 로 평탄 좌표에서 계산 후 pullback.
# ③ 추출: ψ(x̄, ż) = −∫_{−d}^{ż} ū J dż′ (m₁ = 0 게이지), β 는 u⊥ − αψ 의 최소제곱 상수.
#    Q₀ = Q − ½(αm₂ + β)²  (수면에서 ½|u|² = ½|∇ψ|² + ½(αψ + β)², ψ = m₂).

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np
import pandas as pd

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    AffineRelationError,
    ConfigError,
    Discretization,
    Field3D,
    NotTwoHalfDError,
    SurfaceProfile,
)
from modules.flattened import SurfaceGeometry

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_LEAKAGE_RTOL = 1e-10
_AFFINE_RTOL  = 1e-8
_TINY         = 1e-300


# =============================================================================
# 격자 방향 헬퍼
# =============================================================================

def _line_modes(setup: Discretization, mode) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """방향 mode = (m₁, m₂) 위의 모드 n·mode 들의 (n, 행, 열) 인덱스."""
    m = np.asarray(mode, dtype=int).reshape(2)
    if not np.any(m) or np.gcd(m[0], m[1]) != 1:
        raise ConfigError(f"mode 는 서로소 정수 쌍이어야 함: {tuple(m)}")
    K = setup.N // int(np.max(np.abs(m)))
    ns = np.arange(-K, K + 1)
    rows = ns * m[0] + setup.N
    cols = ns * m[1] + setup.N
    return ns, rows, cols


def _direction(setup: Discretization, mode) -> np.ndarray:
    m = np.asarray(mode, dtype=float).reshape(2)
    k = m[0] * setup.lattice.k1 + m[1] * setup.lattice.k2
    return k / np.linalg.norm(k)


def _off_line_leakage(setup: Discretization, coeffs: np.ndarray, mode) -> float:
    """방향 밖 계수의 최대 크기 / 전체 최대 크기."""
    _, rows, cols = _line_modes(setup, mode)
    mask = np.ones((setup.size, setup.size), dtype=bool)
    mask[rows, cols] = False
    total = float(np.max(np.abs(coeffs), initial=0.0))
    off = float(np.max(np.abs(coeffs[..., mask]), initial=0.0))
    return off / total if total > 0.0 else 0.0


# =============================================================================
# [타입] StreamFunction2D
# =============================================================================

@dataclass(frozen=True, eq=False)
class StreamFunction2D:
    """
    ψ(x̄, ż) = Σ_n psi_hat[n, :] e^{i n|k_m| x̄}, η(x̄) = Σ_n eta_hat[n] e^{i n|k_m| x̄}.

    psi_hat : (2K+1, M+1), 짝·실수 클래스
    eta_hat : (2K+1,), 짝·실수 클래스
    mode    : 격자 방향 (m₁, m₂)
    m1, m2  : 바닥/수면 유선 값,  Q0 : 2D Bernoulli 상수
    """
    setup: Discretization
    mode: tuple[int, int]
    psi_hat: np.ndarray
    eta_hat: np.ndarray
    beta: float
    m1: float = 0.0
    m2: float = 0.0
    Q0: float = 0.0

    def __post_init__(self):
        ns, _, _ = _line_modes(self.setup, self.mode)
        psi = np.asarray(self.psi_hat, dtype=complex)
        eta = np.asarray(self.eta_hat, dtype=float)
        if psi.shape != (ns.size, self.setup.M + 1) or eta.shape != (ns.size,):
            raise ConfigError("유선함수 계수 형상 불일치",
                              psi_shape=psi.shape, eta_shape=eta.shape, modes=ns.size)
        object.__setattr__(self, "psi_hat", psi)
        object.__setattr__(self, "eta_hat", eta)
        object.__setattr__(self, "mode", tuple(int(v) for v in self.mode))

    @property
    def direction(self) -> np.ndarray:
        return _direction(self.setup, self.mode)

    @property
    def normal(self) -> np.ndarray:
        e = self.direction
        return np.array([-e[1], e[0]])

    def coeffs3d(self) -> np.ndarray:
        """ψ 를 격자 계수 배열 (M+1, 2N+1, 2N+1) 에 배치."""
        s = self.setup
        _, rows, cols = _line_modes(s, self.mode)
        out = np.zeros((s.M + 1, s.size, s.size), dtype=complex)
        out[:, rows, cols] = self.psi_hat.T
        return out

    def surface(self) -> SurfaceProfile:
        s = self.setup
        _, rows, cols = _line_modes(s, self.mode)
        out = np.zeros((s.size, s.size))
        out[rows, cols] = self.eta_hat
        return SurfaceProfile(out, s)

    def without_beta(self) -> "StreamFunction2D":
        """α ≠ 0 일 때 ψ → ψ + β/α, β → 0 (같은 흐름)."""
        alpha = self.setup.params.alpha
        if alpha == 0.0:
            raise ConfigError("α = 0 에서는 β 를 흡수할 수 없음")
        psi = self.psi_hat.copy()
        psi[psi.shape[0] // 2] += self.beta / alpha
        return StreamFunction2D(self.setup, self.mode, psi, self.eta_hat, 0.0,
                                self.m1 + self.beta / alpha, self.m2 + self.beta / alpha, self.Q0)

    def to_frame(self) -> pd.DataFrame:
        ns, _, _ = _line_modes(self.setup, self.mode)
        z = self.setup.grid.nodes
        rows = [{"n": int(n), "z": float(z[j]), "psi_re": float(self.psi_hat[i, j].real),
                 "psi_im": float(self.psi_hat[i, j].imag), "eta": float(self.eta_hat[i])}
                for i, n in enumerate(ns) for j in range(z.size)]
        return pd.DataFrame(rows)


# =============================================================================
# 물리 미분 (평탄 좌표 연쇄 법칙)
# =============================================================================

def _derivatives(setup: Discretization, coeffs: np.ndarray, geo: SurfaceGeometry,
                 e: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """스칼라장 계수 (M+1, n, n) → 패딩 격자의 (값, ∂_x̄ 물리, ∂_z 물리)."""
    dbar = 1j * (e[0] * setup.kx + e[1] * setup.ky)
    dz = np.einsum("ij,jab->iab", setup.grid.diff, coeffs)
    val = setup.to_physical(coeffs).real
    fz_dot = setup.to_physical(dz).real
    fx_dot = setup.to_physical(dbar * coeffs).real
    eta_bar = e[0] * geo.hx + e[1] * geo.hy
    f_z = fz_dot / geo.J
    f_x = fx_dot - eta_bar * geo.s * fz_dot / geo.J
    return val, f_x, f_z


# =============================================================================
# [함수 1] 리프트
# =============================================================================

def lift_2d_to_3d(sf: StreamFunction2D) -> Field3D:
    """
    2D 유선함수 → 2½차원 Beltrami 흐름 (평탄 좌표 반변 성분 u̇).

    u = −ψ_z ē + (αψ + β)e⊥ + ψ_x̄ e₃ (ȳ 에 무관)
    """
    setup = sf.setup
    alpha = setup.params.alpha
    eta = sf.surface()
    geo = SurfaceGeometry(eta)
    e = sf.direction
    en = sf.normal
    psi, psi_x, psi_z = _derivatives(setup, sf.coeffs3d(), geo, e)
    perp = alpha * psi + sf.beta
    u = np.stack([-psi_z * e[0] + perp * en[0],
                  -psi_z * e[1] + perp * en[1],
                  psi_x])
    return Field3D(setup.to_spectral(geo.pullback(u)), setup)


# =============================================================================
# [함수 2] 추출
# =============================================================================

@dataclass(frozen=True, eq=False)
class Extraction2D:
    """
    stream    : 추출된 유선함수
    Q         : 3D Bernoulli 상수 (입력 또는 수면 평균)
    residuals : pde, bottom, surface, bernoulli, affine, leakage
    """
    stream: StreamFunction2D
    Q: float
    residuals: dict[str, float]

    @property
    def residual_max(self) -> float:
        return float(max(v for k, v in self.residuals.items() if k != "leakage"))


def detect_mode(field: Field3D, eta: SurfaceProfile) -> tuple[int, int]:
    """두 격자 축 중 누설이 작은 쪽을 2½차원 방향으로 선택."""
    setup = field.setup
    best = None
    for mode in ((0, 1), (1, 0)):
        leak = max(_off_line_leakage(setup, field.coeffs, mode),
                   _off_line_leakage(setup, eta.coeffs, mode))
        if best is None or leak < best[1]:
            best = (mode, leak)
    return best[0]


def extract_2d(field: Field3D, eta: SurfaceProfile, mode=None, Q: float | None = None) -> Extraction2D:
    """
    한 수평 방향으로 일정한 흐름 u̇ 에서 2D 유선함수 추출.

    인자:
        field : 평탄 좌표 반변 성분 u̇
        eta   : 수면
        mode  : 방향 (m₁, m₂). None 이면 detect_mode
        Q     : 3D Bernoulli 상수. None 이면 수면에서 측정

    예외:
        NotTwoHalfDError    : 방향 밖 계수 누설 > 1e−10
        AffineRelationError : |u⊥ − αψ − β| > 1e−8 (정규화)
    """
    setup = field.setup
    params = setup.params
    alpha = params.alpha
    if mode is None:
        mode = detect_mode(field, eta)
    leak = max(_off_line_leakage(setup, field.coeffs, mode),
               _off_line_leakage(setup, eta.coeffs, mode))
    if leak > _LEAKAGE_RTOL:
        raise NotTwoHalfDError("흐름이 한 격자 방향으로 일정하지 않음", mode=mode, leakage=leak)

    geo = SurfaceGeometry(eta)
    e = _direction(setup, mode)
    en = np.array([-e[1], e[0]])
    u = geo.pushforward(field.physical())
    ubar = e[0] * u[0] + e[1] * u[1]
    uperp = en[0] * u[0] + en[1] * u[1]

    # ψ̇(ż) = −∫_{−d}^{ż} ū J dż′
    psi = -np.tensordot(setup.grid.cumulative, ubar * geo.J, axes=(1, 0))
    m2 = float(np.mean(psi[0]))
    beta = float(np.mean(uperp - alpha * psi))
    umax = float(np.max(np.abs(u))) + _TINY
    affine = float(np.max(np.abs(uperp - alpha * psi - beta))) / umax
    if affine > _AFFINE_RTOL:
        raise AffineRelationError("u⊥ = αψ + β 관계 위반 (2½차원 Beltrami 흐름 아님)",
                                  residual=affine)

    # 1D 계수
    ns, rows, cols = _line_modes(setup, mode)
    psi_coeffs = setup.to_spectral(psi)
    psi_hat = psi_coeffs[:, rows, cols].T
    eta_hat = eta.coeffs[rows, cols]

    # 3D 수면 Bernoulli 값 → Q
    top = u[:, 0]
    speed2 = top[0] ** 2 + top[1] ** 2 + top[2] ** 2
    eta_bar = e[0] * geo.hx + e[1] * geo.hy
    slope = setup.to_spectral(eta_bar / np.sqrt(1.0 + eta_bar ** 2))
    curv = setup.to_physical(1j * (e[0] * setup.kx + e[1] * setup.ky) * slope).real
    bern3 = 0.5 * speed2 + params.g * geo.values - params.sigma * curv
    if Q is None:
        Q = float(np.mean(bern3))
    Q0 = float(Q - 0.5 * (alpha * m2 + beta) ** 2)

    sf = StreamFunction2D(setup, mode, psi_hat, eta_hat, beta, 0.0, m2, Q0)

    # 2D 계 잔차
    _, psi_x, psi_z = _derivatives(setup, psi_coeffs, geo, e)
    _, psi_xx, _ = _derivatives(setup, setup.to_spectral(psi_x), geo, e)
    _, _, psi_zz = _derivatives(setup, setup.to_spectral(psi_z), geo, e)
    pde = psi_xx + psi_zz + alpha * alpha * psi + alpha * beta
    pde_scale = (float(np.max(np.abs(psi_xx))) + float(np.max(np.abs(psi_zz)))
                 + abs(alpha) * float(np.max(np.abs(alpha * psi + beta))) + _TINY)
    grad2 = psi_x[0] ** 2 + psi_z[0] ** 2
    bern2 = 0.5 * grad2 + params.g * geo.values - params.sigma * curv - Q0
    bern_scale = abs(Q) + params.g * float(np.max(np.abs(geo.values))) + _TINY
    psi_scale = float(np.max(np.abs(psi))) + umax * params.d

    residuals = {
        "pde": float(np.max(np.abs(pde))) / pde_scale,
        "bottom": float(np.max(np.abs(psi[-1] - sf.m1))) / psi_scale,
        "surface": float(np.max(np.abs(psi[0] - m2))) / psi_scale,
        "bernoulli": float(np.max(np.abs(bern2))) / bern_scale,
        "bernoulli_3d": float(np.max(np.abs(bern3 - Q))) / bern_scale,
        "affine": affine,
        "leakage": leak,
    }
    _logger.info("2D 추출: 방향 %s, β = %.6g, m₂ = %.6g, Q₀ = %.6g", mode, beta, m2, Q0)
    return Extraction2D(stream=sf, Q=float(Q), residuals=residuals)


# =============================================================================
# [함수 3] 시험용 유선함수 생성
# =============================================================================

def laminar_stream(setup: Discretization, c, mode=(0, 1)) -> StreamFunction2D:
    """
    층류 U[c₁,c₂] 의 유선함수: Ψ(z) = −∫_{−d}^{z} U·ē, β = U(−d)·e⊥.
    """
    ns, _, _ = _line_modes(setup, mode)
    c = np.asarray(c, dtype=float).reshape(2)
    alpha = setup.params.alpha
    z = setup.grid.nodes
    e = _direction(setup, mode)
    en = np.array([-e[1], e[0]])
    ca, sa = np.cos(alpha * z), np.sin(alpha * z)
    U = np.stack([c[0] * ca + c[1] * sa, -c[0] * sa + c[1] * ca])
    Psi = -setup.grid.cumulative @ (e @ U)
    beta = float(en @ U[:, -1])
    psi_hat = np.zeros((ns.size, setup.M + 1), dtype=complex)
    psi_hat[ns.size // 2] = Psi
    return StreamFunction2D(setup, mode, psi_hat, np.zeros(ns.size), beta, 0.0, float(Psi[0]))


def cellular_stream(setup: Discretization, amplitude: float, beta: float = 0.0,
                    mode=(0, 1), harmonic: int = 1) -> StreamFunction2D:
    """
    평탄 수면 위 ψ_x̄x̄ + ψ_zz + α²ψ + αβ = 0 의 분리해
        ψ = 2A cos(q x̄) sinh(μ(z + d)) − β/α,  μ² = q² − α² > 0,  q = harmonic·|k_m|
    바닥에서 ψ = −β/α 로 일정 (α = 0 이면 β 항 없이 sinh 모드만).
    """
    alpha = setup.params.alpha
    ns, _, _ = _line_modes(setup, mode)
    m = np.asarray(mode, dtype=float)
    km = np.linalg.norm(m[0] * setup.lattice.k1 + m[1] * setup.lattice.k2)
    q = harmonic * km
    if q * q <= alpha * alpha:
        raise ConfigError("분리해에는 q > |α| 필요", q=q, alpha=alpha)
    mu = np.sqrt(q * q - alpha * alpha)
    prof = amplitude * np.sinh(mu * (setup.grid.nodes + setup.params.d))
    psi_hat = np.zeros((ns.size, setup.M + 1), dtype=complex)
    mid = ns.size // 2
    psi_hat[mid + harmonic] = prof
    psi_hat[mid - harmonic] = prof
    if alpha != 0.0:
        psi_hat[mid] -= beta / alpha
    else:
        beta = 0.0
    return StreamFunction2D(setup, mode, psi_hat, np.zeros(ns.size), beta)
