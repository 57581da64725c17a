# modules/dispersion.py
# 분산 함수 ρ(c,k), 수직 고유계수 κ(|k|), 해집합 쌍곡선 기하, 비공명 조건, 쌍대 격자 근 탐색
#
# [설계 결정 근거]
# ① κ 는 분기점 |k| = |α| 근처(|α²−|k|²|·d² < 1e−6)에서 x·cot x 의 짝수 급수로 평가.
#    cot/coth 양쪽이 같은 급수를 공유하므로 분기점에서 값이 1/d 로 연속.
# ② cot 극점 허용 오차 1e−8: √(α²−|k|²)·d 와 πℤ₊ 사이 거리가 이 이하이면 공명으로 간주.
# ③ 근 탐색 반경 R(c): |k| > |α| 에서 κ ≤ |k| + 1/d 이므로
#    σR² ≥ |c|²(R + 1/d + |α|/2) 이면 |k| ≥ R 인 모든 모드에서 ρ > 0.
#    이 이차식의 양근에 1.1 여유를 곱하고, 경계 껍질에서 ρ > 0 을 재확인.
# ④ 배열 입력 지원: κ 는 (|k| 배열) → (κ 배열) 로 벡터화, 평탄화 연산자에서 모드별 기호로 재사용.

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass, field

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np
import pandas as pd

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    Lattice,
    PhysicalParams,
    RegimeError,
    ResonanceError,
    ZeroWaveVectorError,
    lattice_enumerate,
)

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_SERIES_THRESHOLD = 1e-6    # |α²−|k|²|·d² 가 이보다 작으면 급수 사용
_POLE_TOL         = 1e-8    # cot 극점 거리 허용치
_RADIUS_MARGIN    = 1.1
_SHELL_FACTOR     = 1.5     # 경계 껍질 재확인 범위 [R, 1.5R]
_MAX_DOUBLINGS    = 20


# =============================================================================
# [함수 1] kappa
# =============================================================================

def _kappa_array(k_norm, params: PhysicalParams) -> tuple[np.ndarray, np.ndarray]:
    """
    κ(|k|) 를 배열로 평가. 공명(cot 극점) 원소는 NaN, 두 번째 반환값이 그 마스크.
    """
    kn = np.atleast_1d(np.asarray(k_norm, dtype=float))
    d, alpha = params.d, params.alpha
    t = alpha ** 2 - kn ** 2
    s = t * d * d

    out = np.empty_like(t)
    resonant = np.zeros(t.shape, dtype=bool)

    series = np.abs(s) < _SERIES_THRESHOLD
    ss = s[series]
    out[series] = (1.0 - ss / 3.0 - ss ** 2 / 45.0 - 2.0 * ss ** 3 / 945.0) / d

    osc = ~series & (t > 0.0)
    if np.any(osc):
        q = np.sqrt(t[osc])
        qd = q * d
        n = np.rint(qd / np.pi)
        pole = (n >= 1) & (np.abs(qd - n * np.pi) <= _POLE_TOL)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = q / np.tan(qd)
        vals[pole] = np.nan
        out[osc] = vals
        resonant[osc] = pole

    evan = ~series & (t < 0.0)
    if np.any(evan):
        q = np.sqrt(-t[evan])
        out[evan] = q / np.tanh(q * d)

    return out, resonant


def kappa(k_norm, params: PhysicalParams):
    """
    κ(|k|) = φ′(0; |k|).

    |α| > |k| : √(α²−|k|²)·cot(√(α²−|k|²)·d)
    |α| = |k| : 1/d
    |α| < |k| : √(|k|²−α²)·coth(√(|k|²−α²)·d)

    스칼라 입력 → float, 배열 입력 → 같은 형상의 배열.
    공명 극점에서는 ResonanceError.
    """
    if np.any(np.asarray(k_norm) < 0.0):
        raise ValueError("k_norm 은 0 이상이어야 함")
    values, resonant = _kappa_array(k_norm, params)
    if np.any(resonant):
        bad = np.atleast_1d(np.asarray(k_norm, dtype=float))[resonant]
        raise ResonanceError(
            "κ 의 cot 극점: √(α²−|k|²)·d ∈ πℤ₊", k_norm=bad, alpha=params.alpha, d=params.d
        )
    if np.ndim(k_norm) == 0:
        return float(values[0])
    return values.reshape(np.shape(k_norm))


def kappa_table(params: PhysicalParams, k_max: float, points: int = 200) -> pd.DataFrame:
    """0 ≤ |k| ≤ k_max 균일 표본의 κ 표. 공명 점은 NaN 으로 남기고 resonant 열에 표시."""
    kn = np.linspace(0.0, k_max, points)
    values, resonant = _kappa_array(kn, params)
    regime = np.where(np.abs(params.alpha) > kn, "oscillatory", "evanescent")
    regime[np.abs((params.alpha ** 2 - kn ** 2) * params.d ** 2) < _SERIES_THRESHOLD] = "branch"
    return pd.DataFrame({"k": kn, "kappa": values, "regime": regime, "resonant": resonant})


# =============================================================================
# [함수 2] rho / 기울기
# =============================================================================

def _as_pair(v) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(2)


def rho(c, k, params: PhysicalParams) -> float:
    """
    분산 함수
        ρ(c,k) = g + σ|k|² − (c·k)²κ(|k|)/|k|² + α(c·k)(c·k⊥)/|k|²,  k⊥ = (−l, k)
    """
    c, k = _as_pair(c), _as_pair(k)
    ksq = float(k @ k)
    if ksq == 0.0:
        raise ZeroWaveVectorError("ρ 는 k = 0 에서 정의되지 않음")
    kperp = np.array([-k[1], k[0]])
    ck, ckp = float(c @ k), float(c @ kperp)
    kap = kappa(np.sqrt(ksq), params)
    return params.restoring(np.sqrt(ksq)) - ck * ck * kap / ksq + params.alpha * ck * ckp / ksq


def rho_gradient(c, k, params: PhysicalParams) -> np.ndarray:
    """∇_c ρ(c,k) = −2(c·k)κ k/|k|² + α[(c·k⊥)k + (c·k)k⊥]/|k|²."""
    c, k = _as_pair(c), _as_pair(k)
    ksq = float(k @ k)
    if ksq == 0.0:
        raise ZeroWaveVectorError("∇ρ 는 k = 0 에서 정의되지 않음")
    kperp = np.array([-k[1], k[0]])
    ck, ckp = float(c @ k), float(c @ kperp)
    kap = kappa(np.sqrt(ksq), params)
    return (-2.0 * ck * kap * k + params.alpha * (ckp * k + ck * kperp)) / ksq


def rho_on_modes(c, kx: np.ndarray, ky: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """
    모드 배열 위의 ρ(c,k). k = 0 원소는 NaN.
    공명 모드가 있으면 ResonanceError (κ 평가 실패).
    """
    c = _as_pair(c)
    ksq = kx ** 2 + ky ** 2
    nonzero = ksq > 0.0
    out = np.full(ksq.shape, np.nan)
    kn = np.sqrt(ksq[nonzero])
    kap = kappa(kn, params)
    ck = c[0] * kx[nonzero] + c[1] * ky[nonzero]
    ckp = -c[0] * ky[nonzero] + c[1] * kx[nonzero]
    out[nonzero] = (params.restoring(kn) - ck * ck * kap / ksq[nonzero]
                    + params.alpha * ck * ckp / ksq[nonzero])
    return out


# =============================================================================
# [함수 3] 해집합 기하: 쌍곡선 / 직선
# =============================================================================

def conic_matrix(k, params: PhysicalParams) -> np.ndarray:
    """
    ρ(c,k) = 0 ⇔ cᵀ A_k c = 1 인 대칭 2×2 행렬.
    A_k = [κ k̂k̂ᵀ − (α/2)(k̂k̂⊥ᵀ + k̂⊥k̂ᵀ)] / a(|k|)
    """
    k = _as_pair(k)
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ZeroWaveVectorError("A_k 는 k = 0 에서 정의되지 않음")
    khat = k / kn
    kperp = np.array([-khat[1], khat[0]])
    kap = kappa(kn, params)
    mat = kap * np.outer(khat, khat) - 0.5 * params.alpha * (
        np.outer(khat, kperp) + np.outer(kperp, khat)
    )
    return mat / params.restoring(kn)


def asymptote_angle(k_norm: float, params: PhysicalParams) -> float:
    """γ = π/2 + arctan(κ(|k|)/|α|) (α ≠ 0)."""
    if params.alpha == 0.0:
        raise RegimeError("α = 0 에서는 점근선 각이 정의되지 않음")
    return float(np.pi / 2 + np.arctan(kappa(k_norm, params) / abs(params.alpha)))


@dataclass(frozen=True, eq=False)
class DispersionCurve:
    """
    ρ(c,k) = 0 쌍곡선 한 개.

    samples : (n, 2) 배열, 두 가지(branch)의 점을 이어 붙인 순서.
    branch  : samples 각 점의 가지 라벨 (+1: x > 0, −1: x < 0)
    """
    k: np.ndarray
    matrix: np.ndarray
    gamma: float
    theta: float
    kappa: float
    restoring: float
    samples: np.ndarray
    branch: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"c1": self.samples[:, 0], "c2": self.samples[:, 1],
                             "branch": self.branch})


def dispersion_curve(k, params: PhysicalParams, samples: int = 64) -> DispersionCurve:
    """
    α ≠ 0 일 때 해집합 C(k) 의 표본.

    k̂, k̂⊥ 좌표 x = c·k̂, y = c·k̂⊥ 에서
        y = (κ/α)x − a/(αx)
    를 기하 간격 x 로 표본화한 뒤 θ = arg k 만큼 회전 (c = x k̂ + y k̂⊥).
    """
    if params.alpha == 0.0:
        raise RegimeError("α = 0: 쌍곡선 대신 irrotational_lines 사용")
    k = _as_pair(k)
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ZeroWaveVectorError("k = 0 의 분산 곡선은 없음")
    kap = kappa(kn, params)
    a = float(params.restoring(kn))
    alpha = params.alpha

    khat = k / kn
    kperp = np.array([-khat[1], khat[0]])
    scale = np.sqrt(a / max(abs(kap), abs(alpha)))
    half = max(samples // 2, 2)
    xs = scale * np.geomspace(0.2, 5.0, half)

    points, labels = [], []
    for sign in (1.0, -1.0):
        x = sign * xs
        y = (kap / alpha) * x - a / (alpha * x)
        points.append(np.outer(x, khat) + np.outer(y, kperp))
        labels.append(np.full(half, int(sign)))

    return DispersionCurve(
        k=k,
        matrix=conic_matrix(k, params),
        gamma=asymptote_angle(kn, params),
        theta=float(np.arctan2(k[1], k[0])),
        kappa=kap,
        restoring=a,
        samples=np.vstack(points),
        branch=np.concatenate(labels),
    )


@dataclass(frozen=True, eq=False)
class IrrotationalLines:
    """α = 0 해집합: 평행 직선 쌍 c·k̂ = ±offset."""
    k: np.ndarray
    offset: float
    normal: np.ndarray
    direction: np.ndarray

    def sample(self, count: int = 32, half_width: float = 3.0) -> np.ndarray:
        """(2·count, 2): +offset 직선 먼저, 그다음 −offset 직선."""
        span = np.linspace(-half_width, half_width, count) * self.offset
        lines = [sign * self.offset * self.normal + np.outer(span, self.direction)
                 for sign in (1.0, -1.0)]
        return np.vstack(lines)


def irrotational_lines(k, params: PhysicalParams) -> IrrotationalLines:
    """α = 0 일 때 x = ±√(a(|k|)/κ(|k|)) (x = c·k̂) 두 직선."""
    if params.alpha != 0.0:
        raise RegimeError("α ≠ 0: dispersion_curve 사용")
    k = _as_pair(k)
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ZeroWaveVectorError("k = 0 의 분산 직선은 없음")
    khat = k / kn
    offset = float(np.sqrt(params.restoring(kn) / kappa(kn, params)))
    return IrrotationalLines(k=k, offset=offset, normal=khat,
                             direction=np.array([-khat[1], khat[0]]))


# =============================================================================
# [함수 4] 비공명 조건
# =============================================================================

@dataclass(frozen=True)
class ResonantVector:
    n1: int
    n2: int
    k_norm: float
    multiple: int           # √(α²−|k|²)·d ≈ multiple·π
    distance: float


@dataclass(frozen=True)
class ResonanceReport:
    """
    offending : 공명 격자 벡터 목록
    margin    : 스캔한 모든 벡터 중 πℤ₊ 까지 최소 거리 (스캔 집합이 비면 inf)
    """
    offending: list[ResonantVector] = field(default_factory=list)
    margin: float = float("inf")
    scanned: int = 0

    @property
    def passed(self) -> bool:
        return not self.offending


def check_nonresonance(lat: Lattice, params: PhysicalParams, tol: float = _POLE_TOL) -> ResonanceReport:
    """|k| < |α| 인 격자 벡터(k = 0 포함) 각각에 대해 √(α²−|k|²)·d ∉ πℤ₊ 검사."""
    alpha = abs(params.alpha)
    if alpha == 0.0:
        return ResonanceReport()

    offending: list[ResonantVector] = []
    margin = float("inf")
    candidates = [(n1, n2, kv) for n1, n2, kv in lattice_enumerate(lat, alpha)
                  if np.linalg.norm(kv) < alpha]
    for n1, n2, kv in candidates:
        kn = float(np.linalg.norm(kv))
        qd = np.sqrt(alpha ** 2 - kn ** 2) * params.d
        n = max(int(np.rint(qd / np.pi)), 1)
        dist = abs(qd - n * np.pi)
        margin = min(margin, dist)
        if dist <= tol * max(1.0, n * np.pi):
            offending.append(ResonantVector(n1, n2, kn, n, dist))
            _logger.info("공명 벡터 (%d, %d): |k|=%.6g, n=%d", n1, n2, kn, n)
    return ResonanceReport(offending=offending, margin=margin, scanned=len(candidates))


# =============================================================================
# [함수 5] 분산 관계 근 탐색
# =============================================================================

@dataclass(frozen=True)
class DispersionRoot:
    n1: int
    n2: int
    k: tuple[float, float]
    rho: float


@dataclass(frozen=True)
class RootScan:
    """근 탐색 결과 + 공명으로 건너뛴 벡터 + 사용한 반경."""
    roots: list[DispersionRoot]
    skipped: list[tuple[int, int]]
    radius: float

    @property
    def index_set(self) -> set[tuple[int, int]]:
        return {(r.n1, r.n2) for r in self.roots}


def root_scan_radius(c, params: PhysicalParams) -> float:
    """|k| ≥ R 에서 ρ(c,k) > 0 이 보장되는 반경."""
    c2 = float(np.dot(_as_pair(c), _as_pair(c)))
    sigma = params.sigma
    tail = 1.0 / params.d + abs(params.alpha) / 2.0
    radius = (c2 + np.sqrt(c2 * c2 + 4.0 * sigma * c2 * tail)) / (2.0 * sigma)
    return float(max(radius, abs(params.alpha)) * _RADIUS_MARGIN)


def scan_dispersion(c, lat: Lattice, params: PhysicalParams, tol: float = 1e-8) -> RootScan:
    """
    0 < |k| ≤ R(c) 의 모든 격자 벡터에서 |ρ(c,k)| ≤ tol·a(|k|) 인 것을 수집.
    공명(κ 극점) 벡터는 WARNING 로그 후 skipped 에 기록.
    """
    c = _as_pair(c)
    floor = min(np.linalg.norm(lat.k1), np.linalg.norm(lat.k2))
    radius = max(root_scan_radius(c, params), floor)

    for _ in range(_MAX_DOUBLINGS):
        shell = [(n1, n2, kv) for n1, n2, kv in lattice_enumerate(lat, _SHELL_FACTOR * radius)
                 if np.linalg.norm(kv) >= radius]
        kvs = np.array([kv for _, _, kv in shell]).reshape(-1, 2)
        values = rho_on_modes(c, kvs[:, 0], kvs[:, 1], params) if len(shell) else np.array([])
        if np.all(values > 0.0):
            break
        _logger.warning("근 탐색 반경 %.6g 의 경계 껍질에서 ρ ≤ 0 → 반경 2배", radius)
        radius *= 2.0

    roots: list[DispersionRoot] = []
    skipped: list[tuple[int, int]] = []
    entries = [(n1, n2, kv) for n1, n2, kv in lattice_enumerate(lat, radius)
               if (n1, n2) != (0, 0)]
    if not entries:
        return RootScan(roots, skipped, radius)

    kvs = np.array([kv for _, _, kv in entries])
    kn = np.linalg.norm(kvs, axis=1)
    kap, resonant = _kappa_array(kn, params)
    ck = kvs @ c
    ckp = kvs @ np.array([c[1], -c[0]])     # c·k⊥ = −c₁l + c₂k
    a = params.restoring(kn)
    values = a - ck * ck * kap / kn ** 2 + params.alpha * ck * ckp / kn ** 2

    for (n1, n2, kv), val, res, scale in zip(entries, values, resonant, a):
        if res:
            _logger.warning("공명 격자 벡터 (%d, %d) 건너뜀 (|k|=%.6g)", n1, n2, np.linalg.norm(kv))
            skipped.append((n1, n2))
            continue
        if abs(val) <= tol * scale:
            roots.append(DispersionRoot(n1, n2, (float(kv[0]), float(kv[1])), float(val)))

    _logger.info("분산 근 %d 개 (반경 %.4g, 스캔 %d)", len(roots), radius, len(entries))
    return RootScan(roots, skipped, radius)


def enumerate_dispersion_roots(c, lat: Lattice, params: PhysicalParams,
                               tol: float = 1e-8) -> list[DispersionRoot]:
    """ρ(c,k) ≈ 0 인 0 아닌 격자 벡터 목록 (k → −k 에 대해 닫힘)."""
    return scan_dispersion(c, lat, params, tol).roots
