# modules/__init__.py
# =============================================================================
# modules 패키지 진입점
#
# 계산 모듈은 numpy/scipy/pandas 만 필요 → 항상 로드.
# report.py 는 openpyxl 이 없어도 로드되며 xlsx 만 생략 (_OPENPYXL_OK).
#
# MODULES_STATUS: 모듈별 로드 성공 여부 (CLI 의 --verbose 진단 출력용)
# =============================================================================

import logging

_logger = logging.getLogger(__name__)

MODULES_STATUS: dict[str, bool] = {}

_FEATURE_MODULES = (
    "dispersion",
    "bifurcation",
    "linear_modes",
    "flattened",
    "lyapunov_schmidt",
    "waves_2halfd",
    "report",
)

for _name in _FEATURE_MODULES:
    try:
        __import__(f"modules.{_name}")
        MODULES_STATUS[_name] = True
    except ImportError as e:
        MODULES_STATUS[_name] = False
        _logger.warning("모듈 %s 로드 실패: %s", _name, e)

try:
    from modules.report import _OPENPYXL_OK as _XLSX
    MODULES_STATUS["xlsx"] = bool(_XLSX)
except ImportError:
    MODULES_STATUS["xlsx"] = False


__all__ = ["MODULES_STATUS"]
