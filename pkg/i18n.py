# i18n.py
# =============================================================================
# 다국어 지원 모듈 (한국어 / English) — report.txt 문구용 번역 사전
#
# 사용법:
#   from i18n import t, set_lang
#   set_lang("en")
#   t("report_title")       # 현재 언어에 맞는 문자열 반환
# =============================================================================

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)

_SUPPORTED = ("ko", "en")
_state = {"lang": "ko"}

# =============================================================================
# 번역 사전
# =============================================================================
_TRANSLATIONS: dict[str, dict[str, str]] = {
    # ── 공통 ─────────────────────────────────────────────────────────────────
    "report_title":          {"ko": "이중 주기 Beltrami 수면파 계산 보고서",
                              "en": "Doubly periodic Beltrami water wave report"},
    "command":               {"ko": "명령: {}", "en": "Command: {}"},
    "params_line":           {"ko": "매개변수: g = {}, d = {}, σ = {}, α = {}",
                              "en": "Parameters: g = {}, d = {}, σ = {}, α = {}"},
    "lattice_line":          {"ko": "쌍대 격자: k₁ = {}, k₂ = {}", "en": "Dual lattice: k1 = {}, k2 = {}"},
    "truncation_line":       {"ko": "절단: N = {}, M = {}", "en": "Truncation: N = {}, M = {}"},
    "pass":                  {"ko": "통과", "en": "pass"},
    "fail":                  {"ko": "실패", "en": "FAIL"},
    "not_applicable":        {"ko": "해당 없음", "en": "n/a"},
    "files_written":         {"ko": "출력 파일: {}", "en": "Files written: {}"},

    # ── dispersion ──────────────────────────────────────────────────────────
    "sec_dispersion":        {"ko": "[분산 관계]", "en": "[Dispersion relation]"},
    "kappa_rows":            {"ko": "κ 표: {} 행 (k ≤ {})", "en": "κ table: {} rows (k ≤ {})"},
    "curve_line":            {"ko": "k = {}: 해집합 곡선 표본 {} 개, 점근선 각 γ = {}",
                              "en": "k = {}: {} curve samples, asymptote angle γ = {}"},
    "lines_line":            {"ko": "k = {}: 비회전 직선 x = ±{}", "en": "k = {}: irrotational lines x = ±{}"},
    "nonresonance":          {"ko": "비공명 조건: {} (검사 {} 개, 여유 {})",
                              "en": "Non-resonance: {} ({} scanned, margin {})"},

    # ── bifurcate ───────────────────────────────────────────────────────────
    "sec_bifurcate":         {"ko": "[분기점 인증]", "en": "[Bifurcation certification]"},
    "candidates":            {"ko": "후보 교점 {} 개", "en": "{} candidate intersections"},
    "candidate_line":        {"ko": "c* = ({}, {}): 모든 가정 {}", "en": "c* = ({}, {}): all hypotheses {}"},
    "flag_line":             {"ko": "  {} : {}", "en": "  {} : {}"},
    "symmetric_line":        {"ko": "대칭 격자 c*: φ = {}, |c*| = {}, ν = {}",
                              "en": "Symmetric lattice c*: φ = {}, |c*| = {}, ν = {}"},

    # ── kernel ──────────────────────────────────────────────────────────────
    "sec_kernel":            {"ko": "[선형화 핵]", "en": "[Linearized kernel]"},
    "kernel_dim":            {"ko": "핵 차원: {} (모드 {})", "en": "Kernel dimension: {} (modes {})"},
    "mode_residual":         {"ko": "모드 {}: 최대 정규화 잔차 {}", "en": "Mode {}: max normalized residual {}"},

    # ── check ───────────────────────────────────────────────────────────────
    "sec_check":             {"ko": "[평탄화 계 잔차]", "en": "[Flattened system residuals]"},
    "picard_line":           {"ko": "Picard 반복 {} 회, 수축 비율 {}", "en": "Picard iterations {}, contraction ratio {}"},
    "residual_line":         {"ko": "  {} = {}", "en": "  {} = {}"},

    # ── solve ───────────────────────────────────────────────────────────────
    "sec_solve":             {"ko": "[비선형 파동 (Lyapunov–Schmidt)]", "en": "[Nonlinear waves (Lyapunov–Schmidt)]"},
    "solve_line":            {"ko": "t = ({}, {}): c = ({}, {}), 최대 잔차 {}",
                              "en": "t = ({}, {}): c = ({}, {}), max residual {}"},
    "refined_line":          {"ko": "  N+4 환원 잔차: {}", "en": "  Reduced residual at N+4: {}"},
    "harmonic_line":         {"ko": "  H_r 분포: 2차 {}, 핵 {}, 기타 {}",
                              "en": "  H_r content: quadratic {}, kernel {}, other {}"},

    # ── lift / extract ──────────────────────────────────────────────────────
    "sec_lift":              {"ko": "[2D → 2½차원 리프트]", "en": "[2D → 2½-D lift]"},
    "lift_line":             {"ko": "방향 {}, β = {}, Beltrami 잔차 {}",
                              "en": "direction {}, β = {}, Beltrami residual {}"},
    "sec_extract":           {"ko": "[2½차원 가지 → 2D 유선함수]", "en": "[2½-D branch → 2D stream function]"},
    "extract_line":          {"ko": "t₂ = {}, c = ({}, {}), β = {}, m₂ = {}, Q₀ = {}",
                              "en": "t2 = {}, c = ({}, {}), β = {}, m2 = {}, Q0 = {}"},
}


def set_lang(lang: str) -> None:
    """언어 설정. 지원하지 않는 코드는 'ko' 로 대체."""
    if lang not in _SUPPORTED:
        _logger.warning("지원하지 않는 언어 '%s' → 'ko' 사용", lang)
        lang = "ko"
    _state["lang"] = lang


def get_lang() -> str:
    """현재 선택된 언어 코드 반환 ('ko' 또는 'en')."""
    return _state["lang"]


def t(key: str, *args) -> str:
    """
    번역 키에 대한 현재 언어 문자열을 반환.
    포맷 인자가 있으면 .format()으로 적용.
    키가 없으면 키 자체를 반환.
    """
    entry = _TRANSLATIONS.get(key)
    if entry is None:
        return key
    text = entry.get(get_lang(), entry.get("ko", key))
    if args:
        try:
            text = text.format(*args)
        except (IndexError, KeyError):
            pass
    return text
