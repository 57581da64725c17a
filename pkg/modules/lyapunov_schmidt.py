# modules/lyapunov_schmidt.py
# 수치 Lyapunov–Schmidt 환원: η = t₁cos(k₁·x′) + t₂cos(k₂·x′) + η̃, 직교 방정식 + 2×2 분기 방정식
#
# [설계 결정 근거]
# ① 직교 방정식 P̃H(η, c) = 0 은 대각 Fourier 승수 ρ(c*, k) (k = 0 에서 g) 로
#    전처리한 chord 반복. 매 반복마다 핵 모드 계수(±k₁, ±k₂)를 0 으로 투영.
# ② 분기 방정식은 c 에 대한 바깥 chord 반복: c ← c − V⁻¹F(c),
#    V_lj = ∂_{c_j}ρ(c*, k_l), F_l = V_l·(c − c*) + Ψ_l. η̃ 는 c 마다 다시 풂 (정확한 환원).
# ③ t_j = 0 인 방향의 Ψ_j 는 t_j = ±τ 에서의 P_jH_r 중심 차분 (τ = 1e−3|t|).
# ④ 2½차원 가지는 c_j 하나를 고정하고 두 번째 분기 방정식만 풂 (t₁ = 0).

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from dataclasses import dataclass

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np
import pandas as pd

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    ConfigError,
    DegenerateBranchError,
    DegenerateTransversalityError,
    Discretization,
    IterationLimitError,
    LaminarFlow,
    NearResonantModeError,
    SurfaceProfile,
    bernoulli_Q,
)
from modules.bifurcation import BifurcationPoint, transversality_sine
from modules.dispersion import kappa, rho_gradient, rho_on_modes
from modules.flattened import FlowSolution, HEvaluation, evaluate_H, residual_report

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


# =============================================================================
# 상수
# =============================================================================
_ORTHO_TOL      = 1e-10    # max|P̃H| / (g·|t|)
_OUTER_TOL      = 1e-10    # max|F_l| / (g + σ|k_l|²)
_STEP_RTOL      = 1e-14
_MAX_INNER      = 40
_MAX_OUTER      = 30
_LIMIT_STEP     = 1e-3
_NEAR_RESONANT  = 1e-6
_DEGENERATE_DET = 1e-10
_KERNEL_SET     = {(1, 0), (-1, 0), (0, 1), (0, -1)}
_QUADRATIC_SET  = {(0, 0), (2, 0), (-2, 0), (0, 2), (0, -2),
                   (1, 1), (-1, -1), (1, -1), (-1, 1)}


# =============================================================================
# [함수 1] 선형 연산자 L, L₁, L₂
# =============================================================================

def multiplier_symbols(setup: Discretization, c) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    격자 모드별 기호 ρ(c,k), ∂_{c₁}ρ(c,k), ∂_{c₂}ρ(c,k).
    k = 0 에서는 (g, 0, 0).
    """
    c = np.asarray(c, dtype=float).reshape(2)
    params = setup.params
    kx, ky, ksq = setup.kx, setup.ky, setup.k_sq
    base = rho_on_modes(c, kx, ky, params)
    d1 = np.zeros_like(base)
    d2 = np.zeros_like(base)
    nz = ksq > 0.0
    kap = kappa(np.sqrt(ksq[nz]), params)
    ck = c[0] * kx[nz] + c[1] * ky[nz]
    ckp = -c[0] * ky[nz] + c[1] * kx[nz]
    d1[nz] = (-2.0 * ck * kap * kx[nz] + params.alpha * (ckp * kx[nz] - ck * ky[nz])) / ksq[nz]
    d2[nz] = (-2.0 * ck * kap * ky[nz] + params.alpha * (ckp * ky[nz] + ck * kx[nz])) / ksq[nz]
    base[setup.zero_index] = params.g
    return base, d1, d2


def linear_operators_L(eta: SurfaceProfile, c_star) -> tuple[SurfaceProfile, SurfaceProfile, SurfaceProfile]:
    """(L(η), L₁(η), L₂(η)): 기호 ρ(c*,k), ∂_{c_j}ρ(c*,k) 를 곱하는 Fourier 승수."""
    base, d1, d2 = multiplier_symbols(eta.setup, c_star)
    s = eta.setup
    return (SurfaceProfile(base * eta.coeffs, s),
            SurfaceProfile(d1 * eta.coeffs, s),
            SurfaceProfile(d2 * eta.coeffs, s))


def embed_profile(eta: SurfaceProfile, setup: Discretization) -> SurfaceProfile:
    """다른 절단 차수의 설정으로 계수를 옮김 (늘리면 0 채움, 줄이면 자름)."""
    out = np.zeros((setup.size, setup.size))
    n = min(eta.setup.N, setup.N)
    src = slice(eta.setup.N - n, eta.setup.N + n + 1)
    dst = slice(setup.N - n, setup.N + n + 1)
    out[dst, dst] = eta.coeffs[src, src]
    return SurfaceProfile(out, setup)


# =============================================================================
# [타입] LSState / WaveSolution
# =============================================================================

@dataclass(frozen=True, eq=False)
class LSState:
    """
    t          : 진폭 (t₁, t₂)
    c          : 현재 매개변수
    eta_tilde  : 직교 성분 (핵 모드 계수 0)
    eta        : 전체 η = 핵 성분 + η̃
    evaluation : H(η, c) 평가 결과와 v(η, c)
    """
    t: np.ndarray
    c: np.ndarray
    eta_tilde: SurfaceProfile
    eta: SurfaceProfile
    evaluation: HEvaluation
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class WaveSolution:
    t: np.ndarray
    c: np.ndarray
    delta: np.ndarray
    eta: SurfaceProfile
    eta_tilde: SurfaceProfile
    flow: FlowSolution
    raw_H: np.ndarray
    Q: float
    psi: np.ndarray
    residuals: dict[str, float]
    outer_iterations: int
    fixed_index: int | None = None

    @property
    def residual_max(self) -> float:
        return float(max(self.residuals.values()))

    @property
    def eta_deviation(self) -> float:
        """‖η − Σ t_j cos(k_j·x′)‖∞ (패딩 격자)."""
        return float(np.max(np.abs(self.eta_tilde.physical())))

    def summary(self) -> dict:
        return {
            "t1": float(self.t[0]), "t2": float(self.t[1]),
            "c1": float(self.c[0]), "c2": float(self.c[1]),
            "delta1": float(self.delta[0]), "delta2": float(self.delta[1]),
            "Q": self.Q,
            "eta_deviation": self.eta_deviation,
            "residual_max": self.residual_max,
            "outer_iterations": self.outer_iterations,
        }


# =============================================================================
# [클래스] LyapunovSchmidtSolver
# =============================================================================

class LyapunovSchmidtSolver:
    """
    인증된 분기점 하나와 수치 설정 하나에 묶인 환원 해법.

    예외 (생성 시):
        ConfigError                   : 설정 격자가 분기점 격자와 다름
        NearResonantModeError         : 핵 밖 모드에서 |ρ(c*,k)| < 1e−6·(g+σ|k|²)
        DegenerateTransversalityError : 정규화 |det V| < 1e−10
    """

    def __init__(self, bif: BifurcationPoint, setup: Discretization):
        lat = setup.lattice
        if not (np.allclose(lat.k1, bif.k1, rtol=1e-12, atol=0.0)
                and np.allclose(lat.k2, bif.k2, rtol=1e-12, atol=0.0)):
            raise ConfigError("수치 설정의 격자가 분기점 격자와 다름")
        self.bif = bif
        self.setup = setup
        self.params = setup.params
        self.c_star = np.asarray(bif.c_star, dtype=float).reshape(2)

        self.symbol, self.d1, self.d2 = multiplier_symbols(setup, self.c_star)
        self.kernel_mask = np.zeros((setup.size, setup.size), dtype=bool)
        for n1, n2 in _KERNEL_SET:
            self.kernel_mask[setup.index(n1, n2)] = True
        self._check_near_resonance()

        self.V = np.array([rho_gradient(self.c_star, bif.k1, self.params),
                           rho_gradient(self.c_star, bif.k2, self.params)])
        self.sine = transversality_sine(self.c_star, bif.k1, bif.k2, self.params)
        self.scales = np.array([self.params.restoring(np.linalg.norm(bif.k1)),
                                self.params.restoring(np.linalg.norm(bif.k2))])

    def _check_near_resonance(self) -> None:
        s = self.setup
        scale = self.params.restoring(s.k_norm)
        bad = (~self.kernel_mask) & (np.abs(self.symbol) < _NEAR_RESONANT * scale)
        if np.any(bad):
            modes = [(int(s.n1[i, j]), int(s.n2[i, j])) for i, j in zip(*np.nonzero(bad))]
            raise NearResonantModeError("핵 밖 격자 모드에서 ρ(c*,k) 가 거의 0", modes=modes)

    def _require_transversal(self) -> None:
        if not np.isfinite(self.sine) or abs(self.sine) < _DEGENERATE_DET:
            raise DegenerateTransversalityError("횡단성 행렬식이 퇴화",
                                                normalized_det=self.sine)

    # ── 핵 성분 ─────────────────────────────────────────────────────────────
    def kernel_profile(self, t) -> SurfaceProfile:
        t = np.asarray(t, dtype=float).reshape(2)
        return SurfaceProfile.from_modes(self.setup, {(1, 0): 0.5 * t[0], (0, 1): 0.5 * t[1]})

    # ── 직교 방정식 ─────────────────────────────────────────────────────────
    def orthogonal(self, t, c, warm: LSState | None = None,
                   max_iter: int = _MAX_INNER, tilde0: SurfaceProfile | None = None) -> LSState:
        """
        P̃H(t₁η₁ + t₂η₂ + η̃, c) = 0 을 η̃ 에 대해 풂.
        시작점: warm 의 η̃ 와 v, 없으면 tilde0 (핵 계수는 0 으로 사영), 둘 다 없으면 0.

        η̃ ← η̃ − P̃Ĥ / ρ(c*, k)  (핵 모드 계수는 매번 0)
        """
        t = np.asarray(t, dtype=float).reshape(2)
        c = np.asarray(c, dtype=float).reshape(2)
        kernel = self.kernel_profile(t)
        if warm is not None:
            tilde = warm.eta_tilde.coeffs.copy()
        elif tilde0 is not None:
            tilde = tilde0.coeffs.copy()
            tilde[self.kernel_mask] = 0.0
        else:
            tilde = np.zeros_like(kernel.coeffs)
        v0 = warm.evaluation.flow.v if warm is not None else None
        scale = self.params.g * max(float(np.linalg.norm(t)), 1e-300)

        for it in range(1, max_iter + 1):
            eta_tilde = SurfaceProfile(tilde, self.setup)
            eta = kernel + eta_tilde
            ev = evaluate_H(eta, c, v0=v0)
            proj = ev.H.coeffs.copy()
            proj[self.kernel_mask] = 0.0
            resid = float(np.max(np.abs(proj))) / scale
            _logger.debug("직교 방정식 %d: 잔차 %.3e", it, resid)
            if resid <= _ORTHO_TOL or not np.any(t):
                return LSState(t, c, eta_tilde, eta, ev, it, resid)
            tilde = tilde - proj / self.symbol
            tilde[self.kernel_mask] = 0.0
            v0 = ev.flow.v
        raise IterationLimitError("직교 방정식 반복 한도 초과 (진폭이 너무 큼)",
                                  t=t, c=c, residual=resid)

    # ── 분기 방정식 ─────────────────────────────────────────────────────────
    def kernel_projections(self, state: LSState) -> tuple[np.ndarray, np.ndarray]:
        """(P_jH, P_jH_r), j = 1, 2. P_j 는 cos(k_j·x′) 계수 = 2·Re Ĥ(k_j)."""
        s = self.setup
        delta = state.c - self.c_star
        raw = state.evaluation.H.coeffs
        full = np.empty(2)
        rem = np.empty(2)
        for j, idx in enumerate([s.index(1, 0), s.index(0, 1)]):
            eh = state.eta.coeffs[idx]
            lin = (self.symbol[idx] + delta[0] * self.d1[idx] + delta[1] * self.d2[idx]) * eh
            full[j] = 2.0 * raw[idx]
            rem[j] = 2.0 * (raw[idx] - lin)
        return full, rem

    def remainder_H(self, state: LSState) -> np.ndarray:
        """H_r = H − L(η) − Σ (c_j − c*_j) L_j(η) 계수."""
        delta = state.c - self.c_star
        mult = self.symbol + delta[0] * self.d1 + delta[1] * self.d2
        return state.evaluation.H.coeffs - mult * state.eta.coeffs

    def psi(self, state: LSState) -> np.ndarray:
        """Ψ_j = P_jH_r / t_j (t_j = 0 이면 ±τ 중심 차분 극한)."""
        t = state.t
        size = float(np.linalg.norm(t))
        _, rem = self.kernel_projections(state)
        out = np.zeros(2)
        for j in range(2):
            if size == 0.0:
                continue
            if abs(t[j]) > 1e-14 * size:
                out[j] = rem[j] / t[j]
                continue
            tau = _LIMIT_STEP * size
            vals = []
            for sign in (1.0, -1.0):
                tt = t.copy()
                tt[j] = sign * tau
                st = self.orthogonal(tt, state.c, warm=state)
                vals.append(self.kernel_projections(st)[1][j])
            out[j] = (vals[0] - vals[1]) / (2.0 * tau)
        return out

    def system(self, state: LSState) -> tuple[np.ndarray, np.ndarray]:
        """분기 방정식 잔차 F_l = Σ_j v_lj (c_j − c*_j) + Ψ_l 와 Ψ."""
        psi = self.psi(state)
        return self.V @ (state.c - self.c_star) + psi, psi

    # ── 해 조립 ─────────────────────────────────────────────────────────────
    def _assemble(self, state: LSState, psi: np.ndarray, outer: int, bif_resid: float,
                  fixed_index: int | None = None) -> WaveSolution:
        ev = state.evaluation
        report = residual_report(ev.flow, ev.raw)
        report["orthogonal"] = state.residual if np.any(state.t) else 0.0
        report["bifurcation"] = bif_resid
        Q = bernoulli_Q(LaminarFlow(float(state.c[0]), float(state.c[1])))
        return WaveSolution(
            t=state.t, c=state.c, delta=state.c - self.c_star, eta=state.eta,
            eta_tilde=state.eta_tilde, flow=ev.flow, raw_H=ev.raw, Q=Q, psi=psi,
            residuals=report, outer_iterations=outer, fixed_index=fixed_index,
        )

    def solve(self, t, c0=None, eta_tilde0: SurfaceProfile | None = None) -> WaveSolution:
        """
        t 에 대한 해 (η, c(t), v). 바깥 chord: c ← c − V⁻¹F(c).
        c0, eta_tilde0 : 첫 바깥 반복의 시작점 (None 이면 c*, 0).

        예외:
            DegenerateTransversalityError, IterationLimitError, NonContractionError
        """
        self._require_transversal()
        t = np.asarray(t, dtype=float).reshape(2)
        c = self.c_star.copy() if c0 is None else np.asarray(c0, dtype=float).reshape(2)
        if not np.any(t):
            state = self.orthogonal(t, self.c_star)
            _logger.info("t = 0: 자명해")
            return self._assemble(state, np.zeros(2), 0, 0.0)

        state = None
        for it in range(1, _MAX_OUTER + 1):
            state = self.orthogonal(t, c, warm=state, tilde0=eta_tilde0 if state is None else None)
            F, psi = self.system(state)
            resid = float(np.max(np.abs(F) / self.scales))
            _logger.debug("분기 방정식 %d: c = %s, 잔차 %.3e", it, c, resid)
            if resid <= _OUTER_TOL:
                break
            step = np.linalg.solve(self.V, F)
            c = c - step
            if float(np.max(np.abs(step))) <= _STEP_RTOL * float(np.linalg.norm(self.c_star)):
                state = self.orthogonal(t, c, warm=state)
                F, psi = self.system(state)
                resid = float(np.max(np.abs(F) / self.scales))
                break
        else:
            raise IterationLimitError("분기 방정식 반복 한도 초과", t=t, residual=resid)
        _logger.info("t = %s: c = %s, 바깥 %d 회, 잔차 %.3e", t, state.c, it, resid)
        return self._assemble(state, psi, it, resid)

    def solve_branch(self, t2: float, fixed_index: int = 1, c_fixed: float | None = None) -> WaveSolution:
        """
        2½차원 가지: t₁ = 0, c_{fixed} 고정, 나머지 c_j 를 두 번째 분기 방정식으로 결정.

        인자:
            t2          : 진폭
            fixed_index : 고정할 매개변수 번호 (1 또는 2)
            c_fixed     : 고정값 (None 이면 c*)

        예외:
            ConfigError           : fixed_index ∉ {1, 2}
            DegenerateBranchError : 자유 매개변수 계수 v₂ⱼ 가 0
        """
        if fixed_index not in (1, 2):
            raise ConfigError(f"fixed_index 는 1 또는 2: {fixed_index}")
        held = fixed_index - 1
        free = 1 - held
        row = self.V[1]
        coeff = row[free]
        if abs(coeff) < _DEGENERATE_DET * max(float(np.linalg.norm(row)), 1e-300):
            raise DegenerateBranchError("자유 매개변수의 분기 방정식 계수가 0",
                                        fixed_index=fixed_index, coefficient=coeff)
        c = self.c_star.copy()
        if c_fixed is not None:
            c[held] = float(c_fixed)
        t = np.array([0.0, float(t2)])

        if t2 == 0.0:
            state = self.orthogonal(t, c)
            return self._assemble(state, np.zeros(2), 0, 0.0, fixed_index)

        state = None
        for it in range(1, _MAX_OUTER + 1):
            state = self.orthogonal(t, c, warm=state)
            full, _ = self.kernel_projections(state)
            F2 = full[1] / t2
            resid = abs(F2) / self.scales[1]
            _logger.debug("2½차원 가지 %d: c = %s, 잔차 %.3e", it, c, resid)
            if resid <= _OUTER_TOL:
                break
            step = F2 / coeff
            c = c.copy()
            c[free] -= step
            if abs(step) <= _STEP_RTOL * float(np.linalg.norm(self.c_star)):
                state = self.orthogonal(t, c, warm=state)
                full, _ = self.kernel_projections(state)
                resid = abs(full[1] / t2) / self.scales[1]
                break
        else:
            raise IterationLimitError("2½차원 가지 반복 한도 초과", t2=t2, residual=resid)
        _, rem = self.kernel_projections(state)
        psi = np.array([0.0, rem[1] / t2])
        _logger.info("2½차원 가지 t₂ = %.3g: c = %s", t2, state.c)
        return self._assemble(state, psi, it, float(resid), fixed_index)


# =============================================================================
# [함수 2] 모듈 수준 진입점
# =============================================================================

def solve_orthogonal(t, c, solver: LyapunovSchmidtSolver) -> LSState:
    return solver.orthogonal(t, c)


def bifurcation_system(state: LSState, solver: LyapunovSchmidtSolver) -> np.ndarray:
    """분기 방정식 잔차 (2-벡터)."""
    return solver.system(state)[0]


def solve_wave(t, solver: LyapunovSchmidtSolver, c0=None) -> WaveSolution:
    return solver.solve(t, c0=c0)


def solve_2halfd_branch(t2: float, solver: LyapunovSchmidtSolver, fixed_index: int = 1,
                        c_fixed: float | None = None) -> WaveSolution:
    return solver.solve_branch(t2, fixed_index=fixed_index, c_fixed=c_fixed)


# =============================================================================
# [함수 3] 진단: 고조파 분포, 절단 검사, 진폭 스윕
# =============================================================================

def remainder_harmonic_content(solution: WaveSolution, solver: LyapunovSchmidtSolver) -> dict[str, float]:
    """
    H_r 의 ℓ² 크기를 세 집합으로 분할.

    quadratic : {0, ±2k₁, ±2k₂, ±(k₁ ± k₂)}
    kernel    : {±k₁, ±k₂}
    other     : 나머지 (O(|t|³) 기대)
    """
    s = solver.setup
    delta = solution.c - solver.c_star
    mult = solver.symbol + delta[0] * solver.d1 + delta[1] * solver.d2
    rem = solution.raw_H.real - mult * solution.eta.coeffs
    quad = np.zeros_like(solver.kernel_mask)
    for n1, n2 in _QUADRATIC_SET:
        quad[s.index(n1, n2)] = True
    other = ~(quad | solver.kernel_mask)
    return {
        "quadratic": float(np.sqrt(np.sum(rem[quad] ** 2))),
        "kernel": float(np.sqrt(np.sum(rem[solver.kernel_mask] ** 2))),
        "other": float(np.sqrt(np.sum(rem[other] ** 2))),
    }


def refined_reduced_residual(solution: WaveSolution, extra: int = 4) -> float:
    """절단 N + extra 에서 다시 평가한 max|Ĥ| (정규화). 절단 오차 노출용."""
    setup = solution.eta.setup
    fine = setup.with_truncation(setup.N + extra)
    eta = embed_profile(solution.eta, fine)
    ev = evaluate_H(eta, solution.c)
    scale = eta.max_abs_coeff() * float(np.max(fine.params.restoring(fine.k_norm)))
    value = float(np.max(np.abs(ev.raw)))
    return value / scale if scale > 0.0 else value


def sweep_amplitudes(t_grid, solver: LyapunovSchmidtSolver, warm: bool = True,
                     collect: list | None = None) -> pd.DataFrame:
    """
    t 목록을 차례로 풀어 표로 반환. warm=True 이면 이전 해의 c 와 η̃ 를 다음 시작점으로 사용
    (η̃ = O(|t|²) 이므로 (|t|/|t_prev|)² 로 재척도).
    collect 가 주어지면 WaveSolution 을 차례로 추가.

    열: t1, t2, c1, c2, delta1, delta2, Q, eta_deviation, eta_ratio, residual_max, outer_iterations
    """
    rows = []
    prev = None
    for pair in t_grid:
        c0 = tilde0 = None
        if warm and prev is not None:
            c0 = prev.c
            t_prev = float(np.linalg.norm(prev.t))
            if t_prev > 0.0:
                tilde0 = prev.eta_tilde.scaled((float(np.linalg.norm(pair)) / t_prev) ** 2)
        sol = solver.solve(pair, c0=c0, eta_tilde0=tilde0)
        row = sol.summary()
        tn = float(np.linalg.norm(sol.t))
        row["eta_ratio"] = sol.eta_deviation / tn ** 2 if tn > 0.0 else 0.0
        rows.append(row)
        if collect is not None:
            collect.append(sol)
        prev = sol
    cols = ["t1", "t2", "c1", "c2", "delta1", "delta2", "Q", "eta_deviation",
            "eta_ratio", "residual_max", "outer_iterations"]
    return pd.DataFrame(rows, columns=cols)
