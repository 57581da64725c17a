# cli.py
# =============================================================================
# 이중 주기 Beltrami 수면파 — 명령행 진입점
#
# 서브커맨드: dispersion, bifurcate, kernel, check, solve, lift, extract
#
# [설계 결정 근거]
# ① 설정: JSON 파일 + DEFAULT_CONFIG 깊은 병합. 명령행 --truncation/--tol/--lang 이 우선.
# ② 종료 코드: 성공 0, ConfigError 2, PreconditionError 3, NonConvergenceError 4,
#    그 밖의 오류 5. 오류 레코드는 stderr 에 JSON 한 줄.
# ③ 출력 디렉터리는 계산이 끝난 뒤 RunWriter.finalize() 에서만 생성
#    → 설정 오류나 계산 실패 시 부분 출력 없음.
#
# 실행:
#   python cli.py bifurcate --config configs/ref_symmetric.json --out runs/bif
# =============================================================================

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import copy
import json
import logging
from dataclasses import dataclass
from functools import wraps
from pathlib import Path

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import click
import numpy as np
import pandas as pd

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import (
    BeltramiWaveError,
    ConfigError,
    Discretization,
    Lattice,
    NonConvergenceError,
    PhysicalParams,
    PreconditionError,
    SurfaceProfile,
)
from i18n import set_lang, t
from modules import MODULES_STATUS
from modules.bifurcation import (
    certify_bifurcation,
    general_c_star,
    symmetric_c_star,
    symmetric_multiplicity_report,
)
from modules.dispersion import (
    check_nonresonance,
    dispersion_curve,
    irrotational_lines,
    kappa_table,
    rho_on_modes,
)
from modules.flattened import (
    flattened_curl,
    physical_point_velocity,
    pushforward_values,
    residual_report,
    solve_v_of_eta,
)
from modules.linear_modes import kernel_dimension
from modules.lyapunov_schmidt import (
    LyapunovSchmidtSolver,
    refined_reduced_residual,
    remainder_harmonic_content,
    sweep_amplitudes,
)
from modules.report import RunWriter
from modules.waves_2halfd import cellular_stream, extract_2d, lift_2d_to_3d

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


EXIT_OK           = 0
EXIT_CONFIG       = 2
EXIT_PRECONDITION = 3
EXIT_NONCONVERGE  = 4
EXIT_OTHER        = 5


# =============================================================================
# 설정
# =============================================================================
DEFAULT_CONFIG: dict = {
    "params": {"g": 1.0, "d": 1.0},
    "lattice": {},
    "discretization": {"N": 8, "M": 32},
    "tol": 1e-8,
    "lang": "ko",
    "dispersion": {"samples": 64, "k_max": 8.0, "kappa_points": 200, "c": [0.0, 0.0]},
    "bifurcate": {"seeds": 16},
    "kernel": {"branch": 0},
    "check": {"eta": [], "c": None},
    "solve": {"t_grid": [[0.0, 0.0]], "branch": 0, "field_points": 16},
    "lift": {"mode": [0, 1], "amplitude": 1e-2, "beta": 0.0, "eta_amplitude": 0.0},
    "extract": {"t2": 1e-2, "fixed_index": 1, "branch": 0},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | Path, truncation: int | None = None, tol: float | None = None,
                lang: str | None = None) -> dict:
    """JSON 설정 읽기 + 기본값 병합 + 명령행 덮어쓰기."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"설정 파일을 읽을 수 없음: {path}", reason=str(e)) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"설정 파일 JSON 형식 오류: {path}", line=e.lineno, column=e.colno) from e
    if not isinstance(raw, dict):
        raise ConfigError("설정 최상위는 객체여야 함")
    cfg = _deep_merge(DEFAULT_CONFIG, raw)
    if truncation is not None:
        cfg["discretization"]["N"] = int(truncation)
    if tol is not None:
        cfg["tol"] = float(tol)
    if lang is not None:
        cfg["lang"] = lang
    return cfg


@dataclass(frozen=True, eq=False)
class RunContext:
    cfg: dict
    params: PhysicalParams
    lattice: Lattice
    setup: Discretization
    symmetric: dict | None

    @property
    def tol(self) -> float:
        return float(self.cfg["tol"])


def _require(block: dict, key: str, where: str):
    if key not in block or block[key] is None:
        raise ConfigError(f"필수 키 누락: {where}.{key}", key=f"{where}.{key}")
    return block[key]


def build_context(cfg: dict) -> RunContext:
    p = cfg["params"]
    try:
        params = PhysicalParams(
            g=float(_require(p, "g", "params")),
            sigma=float(_require(p, "sigma", "params")),
            d=float(_require(p, "d", "params")),
            alpha=float(_require(p, "alpha", "params")),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError("params 값이 수치가 아님", reason=str(e)) from e

    lat_cfg = cfg["lattice"]
    keys = [k for k in ("periods", "dual", "symmetric") if k in lat_cfg]
    if len(keys) != 1:
        raise ConfigError("lattice 에는 periods / dual / symmetric 중 정확히 하나 필요", given=keys)
    symmetric = None
    try:
        if keys[0] == "periods":
            lattice = Lattice.from_periods(*lat_cfg["periods"])
        elif keys[0] == "dual":
            lattice = Lattice.from_dual(*lat_cfg["dual"])
        else:
            symmetric = {"k": float(_require(lat_cfg["symmetric"], "k", "lattice.symmetric")),
                         "omega": float(_require(lat_cfg["symmetric"], "omega", "lattice.symmetric"))}
            lattice = Lattice.symmetric(symmetric["k"], symmetric["omega"])
    except (TypeError, ValueError) as e:
        raise ConfigError("lattice 값 형식 오류", reason=str(e)) from e

    disc = cfg["discretization"]
    if int(disc["M"]) < 4:
        raise ConfigError(f"M 은 4 이상이어야 함: {disc['M']}")
    setup = Discretization(params, lattice, int(disc["N"]), int(disc["M"]))
    return RunContext(cfg=cfg, params=params, lattice=lattice, setup=setup, symmetric=symmetric)


# =============================================================================
# 공통 실행 래퍼
# =============================================================================

def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    if isinstance(exc, NonConvergenceError):
        return EXIT_NONCONVERGE
    return EXIT_OTHER


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else (logging.INFO if verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def _common_options(func):
    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                  help="JSON 설정 파일")
    @click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
                  help="출력 디렉터리")
    @click.option("--truncation", type=click.IntRange(min=1), default=None, help="수평 절단 N")
    @click.option("--tol", type=float, default=None, help="근/다중도 허용오차")
    @click.option("--lang", type=click.Choice(["ko", "en"]), default=None, help="보고서 언어")
    @click.option("-v", "--verbose", count=True, help="-v: INFO, -vv: DEBUG")
    @wraps(func)
    def wrapper(config_path, out_dir, truncation, tol, lang, verbose):
        _configure_logging(verbose)
        _logger.debug("모듈 상태: %s", MODULES_STATUS)
        command = func.__name__.removeprefix("cmd_")
        try:
            cfg = load_config(config_path, truncation, tol, lang)
            set_lang(cfg["lang"])
            ctx = build_context(cfg)
            writer = RunWriter(out_dir, command, meta=_meta_line(ctx))
            writer.add_lines(_header_lines(command, ctx))
            func(ctx, writer)
            written = writer.finalize()
        except BeltramiWaveError as exc:
            click.echo(json.dumps(exc.to_record(), ensure_ascii=False), err=True)
            raise SystemExit(_exit_code(exc))
        except Exception as exc:
            _logger.exception("예상하지 못한 오류")
            record = {"error": "internal_error", "message": str(exc),
                      "details": {"type": type(exc).__name__}}
            click.echo(json.dumps(record, ensure_ascii=False), err=True)
            raise SystemExit(EXIT_OTHER)
        click.echo(t("files_written", len(written)))
    return wrapper


def _fmt(x) -> str:
    return f"{float(x):.10g}"


def _meta_line(ctx: RunContext) -> str:
    p = ctx.params
    return f"g={p.g:g} d={p.d:g} sigma={p.sigma:g} alpha={p.alpha:g} N={ctx.setup.N} M={ctx.setup.M}"


def _header_lines(command: str, ctx: RunContext) -> list[str]:
    p, lat = ctx.params, ctx.lattice
    return [
        t("report_title"),
        t("command", command),
        t("params_line", _fmt(p.g), _fmt(p.d), _fmt(p.sigma), _fmt(p.alpha)),
        t("lattice_line", np.round(lat.k1, 12).tolist(), np.round(lat.k2, 12).tolist()),
        t("truncation_line", ctx.setup.N, ctx.setup.M),
        "",
    ]


def _flag(value) -> str:
    if value is None:
        return t("not_applicable")
    return t("pass") if value else t("fail")


# =============================================================================
# 분기점 선택 (kernel / solve / extract 공통)
# =============================================================================

def select_c_star(ctx: RunContext, branch: int) -> np.ndarray:
    """대칭 격자면 symmetric_c_star, 아니면 general_c_star 후보 중 branch 번째."""
    if ctx.symmetric is not None and ctx.params.alpha != 0.0:
        configs = symmetric_c_star(ctx.symmetric["k"], ctx.symmetric["omega"], ctx.params)
        candidates = [cfg.c_star for cfg in configs]
    else:
        seeds = int(ctx.cfg["bifurcate"]["seeds"])
        candidates = [p.c for p in general_c_star(ctx.lattice.k1, ctx.lattice.k2, ctx.params, seeds)]
    if not 0 <= branch < len(candidates):
        raise ConfigError(f"branch {branch} 가 후보 수 {len(candidates)} 밖", branch=branch,
                          candidates=len(candidates))
    return np.asarray(candidates[branch], dtype=float)


def build_solver(ctx: RunContext, branch: int) -> LyapunovSchmidtSolver:
    c_star = select_c_star(ctx, branch)
    bif = certify_bifurcation(ctx.lattice.k1, ctx.lattice.k2, ctx.params, c_star, ctx.tol)
    if not bif.all_passed:
        _logger.warning("분기 가정 일부 실패: %s", bif.summary())
    return LyapunovSchmidtSolver(bif, ctx.setup)


def _surface_frame(eta: SurfaceProfile) -> pd.DataFrame:
    s = eta.setup
    return pd.DataFrame({"n1": s.n1.ravel(), "n2": s.n2.ravel(), "eta": eta.coeffs.ravel()})


# =============================================================================
# CLI 그룹
# =============================================================================

@click.group()
def main():
    """이중 주기 3차원 중력-모세관 Beltrami 수면파 계산."""


# ── dispersion ───────────────────────────────────────────────────────────────
@main.command("dispersion")
@_common_options
def cmd_dispersion(ctx: RunContext, writer: RunWriter) -> None:
    """κ 표, 격자 모드의 ρ 값, 해집합 곡선 표본, 비공명 보고."""
    block = ctx.cfg["dispersion"]
    params, setup = ctx.params, ctx.setup
    writer.add_lines([t("sec_dispersion")])

    table = kappa_table(params, float(block["k_max"]), int(block["kappa_points"]))
    writer.add_table("kappa", table)
    writer.add_lines([t("kappa_rows", len(table), _fmt(block["k_max"]))])

    rows = []
    for name, k in (("k1", ctx.lattice.k1), ("k2", ctx.lattice.k2)):
        kn = float(np.linalg.norm(k))
        if params.alpha != 0.0:
            curve = dispersion_curve(k, params, int(block["samples"]))
            writer.add_field(f"curve_{name}", curve.to_frame())
            writer.add_lines([t("curve_line", _fmt(kn), len(curve.samples), _fmt(curve.gamma))])
            rows.append({"name": name, "kx": k[0], "ky": k[1], "k_norm": kn,
                         "kappa": curve.kappa, "gamma": curve.gamma})
        else:
            lines = irrotational_lines(k, params)
            pts = lines.sample(int(block["samples"]) // 2)
            writer.add_field(f"curve_{name}", pd.DataFrame({"c1": pts[:, 0], "c2": pts[:, 1]}))
            writer.add_lines([t("lines_line", _fmt(kn), _fmt(lines.offset))])
            rows.append({"name": name, "kx": k[0], "ky": k[1], "k_norm": kn,
                         "kappa": float(lines.offset), "gamma": float("nan")})
    writer.add_table("summary", pd.DataFrame(rows))

    c = np.asarray(block["c"], dtype=float)
    values = rho_on_modes(c, setup.kx, setup.ky, params)
    writer.add_field("rho_modes", pd.DataFrame({
        "n1": setup.n1.ravel(), "n2": setup.n2.ravel(),
        "kx": setup.kx.ravel(), "ky": setup.ky.ravel(), "rho": values.ravel(),
    }))

    report = check_nonresonance(ctx.lattice, params)
    writer.add_table("resonance", pd.DataFrame(
        [{"n1": v.n1, "n2": v.n2, "k_norm": v.k_norm, "multiple": v.multiple, "distance": v.distance}
         for v in report.offending],
        columns=["n1", "n2", "k_norm", "multiple", "distance"]))
    writer.add_lines([t("nonresonance", _flag(report.passed), report.scanned, _fmt(report.margin))])


# ── bifurcate ────────────────────────────────────────────────────────────────
@main.command("bifurcate")
@_common_options
def cmd_bifurcate(ctx: RunContext, writer: RunWriter) -> None:
    """분기점 후보 탐색과 가정 인증."""
    params, lat = ctx.params, ctx.lattice
    writer.add_lines([t("sec_bifurcate")])
    seeds = int(ctx.cfg["bifurcate"]["seeds"])

    extra = None
    if ctx.symmetric is not None and params.alpha != 0.0:
        configs = symmetric_c_star(ctx.symmetric["k"], ctx.symmetric["omega"], params)
        extra = [cfg.c_star for cfg in configs]
        for cfg in configs:
            writer.add_lines([t("symmetric_line", _fmt(cfg.phi), _fmt(cfg.c_len), _fmt(cfg.nu))])
        writer.add_field("symmetric_multiplicity", symmetric_multiplicity_report(configs[0], params))

    points = general_c_star(lat.k1, lat.k2, params, seeds, extra_seeds=extra)
    writer.add_lines([t("candidates", len(points))])
    rows = []
    for p in points:
        bif = certify_bifurcation(lat.k1, lat.k2, params, p.c, ctx.tol)
        summary = bif.summary()
        rows.append(summary)
        writer.add_lines([t("candidate_line", _fmt(p.c[0]), _fmt(p.c[1]), _flag(bif.all_passed))])
        for key in ("on_curves", "nonresonant", "multiplicity_four", "geometric", "transversal"):
            writer.add_lines([t("flag_line", key, _flag(summary[key]))])
    writer.add_table("summary", pd.DataFrame(rows, columns=[
        "c1", "c2", "det", "sine", "rho_k1", "rho_k2", "roots", "on_curves", "nonresonant",
        "multiplicity_four", "geometric", "transversal", "all_passed"]))


# ── kernel ───────────────────────────────────────────────────────────────────
@main.command("kernel")
@_common_options
def cmd_kernel(ctx: RunContext, writer: RunWriter) -> None:
    """c* 에서 선형화 핵 모드와 선형 방정식 잔차."""
    branch = int(ctx.cfg["kernel"]["branch"])
    c_star = select_c_star(ctx, branch)
    z = ctx.setup.grid.nodes
    info = kernel_dimension(c_star, ctx.lattice, ctx.params, z, ctx.tol)
    writer.add_lines([t("sec_kernel"), t("kernel_dim", info.dimension, info.indices)])
    rows = []
    for (n1, n2), mode in zip(info.indices, info.modes):
        res = mode.residuals(ctx.params)
        worst = max(res.values())
        writer.add_lines([t("mode_residual", (n1, n2), f"{worst:.3e}")])
        rows.append({"n1": n1, "n2": n2, "kx": mode.k[0], "ky": mode.k[1], **res})
        prof = mode.profiles
        writer.add_field(f"mode_{n1}_{n2}", pd.DataFrame({
            "z": z,
            "v1_re": prof[0].real, "v1_im": prof[0].imag,
            "v2_re": prof[1].real, "v2_im": prof[1].imag,
            "v3_re": prof[2].real, "v3_im": prof[2].imag,
        }))
    writer.add_table("summary", pd.DataFrame(rows))


# ── check ────────────────────────────────────────────────────────────────────
@main.command("check")
@_common_options
def cmd_check(ctx: RunContext, writer: RunWriter) -> None:
    """주어진 (η, c) 에서 v(η, c) 를 풀고 평탄화 계 잔차 보고."""
    block = ctx.cfg["check"]
    c = _require(block, "c", "check")
    modes = {}
    for entry in block["eta"]:
        if len(entry) != 3:
            raise ConfigError("check.eta 항목은 [n1, n2, value]", entry=entry)
        modes[(int(entry[0]), int(entry[1]))] = float(entry[2])
    eta = SurfaceProfile.from_modes(ctx.setup, modes)
    sol = solve_v_of_eta(eta, c)
    raw = sol.problem.reduced(sol)
    report = residual_report(sol, raw)
    writer.add_lines([t("sec_check"), t("picard_line", sol.iterations, f"{sol.ratio:.3e}")])
    writer.add_lines([t("residual_line", k, f"{v:.3e}") for k, v in report.items()])
    writer.add_table("summary", pd.DataFrame([{"iterations": sol.iterations, "ratio": sol.ratio,
                                               "c_tilde1": sol.shift.c_tilde[0],
                                               "c_tilde2": sol.shift.c_tilde[1], **report}]))
    writer.add_field("eta", _surface_frame(eta))
    writer.add_velocity("velocity", sol.u_dot, eta)


# ── solve ────────────────────────────────────────────────────────────────────
def _surface_velocity_frame(sol, points: int) -> pd.DataFrame:
    """격자 좌표 (a₁, a₂) ∈ [0,1)² 균일 점에서 수면 높이와 물리 속도."""
    lat = sol.eta.setup.lattice
    rows = []
    u_dot = sol.flow.u_dot
    for i in range(points):
        for j in range(points):
            a1, a2 = i / points, j / points
            x, y = a1 * lat.lambda1 + a2 * lat.lambda2
            h = sol.eta.evaluate(x, y)
            u = physical_point_velocity(u_dot, sol.eta, x, y, h)
            rows.append({"x": x, "y": y, "eta": h, "u1": u[0], "u2": u[1], "u3": u[2]})
    return pd.DataFrame(rows)


@main.command("solve")
@_common_options
def cmd_solve(ctx: RunContext, writer: RunWriter) -> None:
    """t 격자를 따라 비선형 파동 풀이 (Lyapunov–Schmidt)."""
    block = ctx.cfg["solve"]
    solver = build_solver(ctx, int(block["branch"]))
    t_grid = [tuple(float(v) for v in pair) for pair in block["t_grid"]]
    if any(len(pair) != 2 for pair in t_grid):
        raise ConfigError("solve.t_grid 항목은 [t1, t2]")
    solutions = []
    table = sweep_amplitudes(t_grid, solver, collect=solutions)
    writer.add_lines([t("sec_solve")])
    refined, quad, kern, other = [], [], [], []
    for idx, sol in enumerate(solutions):
        writer.add_lines([t("solve_line", _fmt(sol.t[0]), _fmt(sol.t[1]), _fmt(sol.c[0]),
                            _fmt(sol.c[1]), f"{sol.residual_max:.3e}")])
        fine = refined_reduced_residual(sol) if np.any(sol.t) else 0.0
        content = remainder_harmonic_content(sol, solver)
        refined.append(fine)
        quad.append(content["quadratic"])
        kern.append(content["kernel"])
        other.append(content["other"])
        writer.add_lines([t("refined_line", f"{fine:.3e}"),
                          t("harmonic_line", f"{content['quadratic']:.3e}",
                            f"{content['kernel']:.3e}", f"{content['other']:.3e}")])
        writer.add_field(f"eta_{idx}", _surface_frame(sol.eta))
        writer.add_field(f"surface_{idx}", _surface_velocity_frame(sol, int(block["field_points"])))
        writer.add_velocity(f"velocity_{idx}", sol.flow.u_dot, sol.eta)
    table["residual_refined"] = refined
    table["hr_quadratic"] = quad
    table["hr_kernel"] = kern
    table["hr_other"] = other
    writer.add_table("summary", table)


# ── lift ─────────────────────────────────────────────────────────────────────
@main.command("lift")
@_common_options
def cmd_lift(ctx: RunContext, writer: RunWriter) -> None:
    """분리형 2D 유선함수를 2½차원 흐름으로 리프트하고 Beltrami 잔차 보고."""
    block = ctx.cfg["lift"]
    mode = tuple(int(v) for v in block["mode"])
    sf = cellular_stream(ctx.setup, float(block["amplitude"]), float(block["beta"]), mode)
    eta_amp = float(block["eta_amplitude"])
    if eta_amp != 0.0:
        eta_hat = sf.eta_hat.copy()
        mid = eta_hat.size // 2
        eta_hat[mid + 1] = eta_hat[mid - 1] = 0.5 * eta_amp
        sf = type(sf)(sf.setup, sf.mode, sf.psi_hat, eta_hat, sf.beta, sf.m1, sf.m2, sf.Q0)
    field = lift_2d_to_3d(sf)
    eta = sf.surface()
    curl = flattened_curl(field, eta).physical()
    u = pushforward_values(field, eta)
    alpha = ctx.params.alpha
    scale = (abs(alpha) + float(np.max(ctx.setup.k_norm))) * float(np.max(np.abs(u))) + 1e-300
    resid = float(np.max(np.abs(curl - alpha * u))) / scale
    writer.add_lines([t("sec_lift"), t("lift_line", mode, _fmt(sf.beta), f"{resid:.3e}")])
    writer.add_table("summary", pd.DataFrame([{"m1": mode[0], "m2": mode[1], "amplitude": block["amplitude"],
                                               "beta": sf.beta, "eta_amplitude": eta_amp,
                                               "beltrami": resid}]))
    writer.add_field("stream", sf.to_frame())
    writer.add_velocity("velocity", field, eta)


# ── extract ──────────────────────────────────────────────────────────────────
@main.command("extract")
@_common_options
def cmd_extract(ctx: RunContext, writer: RunWriter) -> None:
    """2½차원 가지를 풀고 2D 유선함수를 추출해 2D 계 잔차 보고."""
    block = ctx.cfg["extract"]
    solver = build_solver(ctx, int(block["branch"]))
    sol = solver.solve_branch(float(block["t2"]), int(block["fixed_index"]))
    ext = extract_2d(sol.flow.u_dot, sol.eta, mode=(0, 1), Q=sol.Q)
    sf = ext.stream
    writer.add_lines([t("sec_extract"), t("extract_line", _fmt(sol.t[1]), _fmt(sol.c[0]), _fmt(sol.c[1]),
                                          _fmt(sf.beta), _fmt(sf.m2), _fmt(sf.Q0))])
    writer.add_lines([t("residual_line", k, f"{v:.3e}") for k, v in ext.residuals.items()])
    writer.add_table("summary", pd.DataFrame([{**sol.summary(), "beta": sf.beta, "m2": sf.m2,
                                               "Q0": sf.Q0, **{f"res_{k}": v for k, v in ext.residuals.items()}}]))
    writer.add_field("stream", sf.to_frame())
    writer.add_field("eta", _surface_frame(sol.eta))
    writer.add_velocity("velocity", sol.flow.u_dot, sol.eta)


if __name__ == "__main__":
    main()
