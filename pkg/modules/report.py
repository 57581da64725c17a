# modules/report.py
# 실행 결과 저장 모듈
# report.txt + summary.csv + fields/ 덤프 + report.xlsx (표 시트별 스타일 적용)
#
# =============================================================================
# [설계 결정 근거]
# =============================================================================
#
# ① CSV 는 pandas to_csv(index=False, float_format="%.17g")
#    → 왕복 정밀도 유지, 같은 설정이면 바이트 단위 동일 출력.
#
# ② openpyxl 가용성은 모듈 로딩 시 1회 확인 → _OPENPYXL_OK 플래그.
#    없으면 report.xlsx 만 건너뛰고 WARNING (다른 산출물은 그대로 생성).
#
# ③ 모든 파일은 finalize() 에서 한 번에 기록 (계산 도중 실패하면 출력 없음).
#
# ④ 워크북: 표 하나당 시트 하나. 1행 제목, 2행 메타, 4행 헤더, 5행부터 데이터.
#    헤더(파란 배경/흰 볼드) + 교번 행 배경 + 테두리 + 틀 고정.
#
# ⑤ 속도장 덤프 두 형식: 물리 격자점 (x, y, z, u1, u2, u3) 과 계수 (n1, n2, z_index, component, re, im).
#    물리 격자는 (2N+1)² 수평 점 × Chebyshev 노드, z 는 평탄화를 되돌린 물리 높이.
# =============================================================================

# ── 표준 라이브러리 ─────────────────────────────────────────────────────────
import logging
from pathlib import Path

# ── 외부 라이브러리 ─────────────────────────────────────────────────────────
import numpy as np
import pandas as pd

try:
    from openpyxl import Workbook
    from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
    from openpyxl.utils import get_column_letter
    _OPENPYXL_OK = True
except ImportError:
    _OPENPYXL_OK = False

# ── 내부 모듈 ───────────────────────────────────────────────────────────────
from core import Field3D, SurfaceProfile
from modules.flattened import SurfaceGeometry

# ── 로거 설정 ────────────────────────────────────────────────────────────────
_logger = logging.getLogger(__name__)


_FLOAT_FORMAT = "%.17g"
_SHEET_NAME_MAX = 31


# =============================================================================
# openpyxl 스타일 상수
# =============================================================================
if _OPENPYXL_OK:
    _HEADER_FILL = PatternFill("solid", start_color="1A6BBF")   # 파란 헤더 배경
    _ALT_FILL    = PatternFill("solid", start_color="E8F0FE")   # 교번 행 배경
    _WHITE_FILL  = PatternFill("solid", start_color="FFFFFF")

    _BORDER_SIDE = Side(style="thin", color="C0C0C0")
    _THIN_BORDER = Border(left=_BORDER_SIDE, right=_BORDER_SIDE,
                          top=_BORDER_SIDE, bottom=_BORDER_SIDE)

    _HEADER_FONT = Font(name="Arial", bold=True, color="FFFFFF", size=10)
    _BODY_FONT   = Font(name="Arial", size=10)
    _TITLE_FONT  = Font(name="Arial", bold=True, size=13, color="1A6BBF")
    _META_FONT   = Font(name="Arial", size=9, italic=True, color="888888")

    _CENTER_ALIGN = Alignment(horizontal="center", vertical="center", wrap_text=True)
    _LEFT_ALIGN   = Alignment(horizontal="left", vertical="center", wrap_text=False)
_NUM_FORMAT = "0.000000E+00"   # 지수 표기 (잔차/계수 크기 차가 큼)


# =============================================================================
# openpyxl 내부 헬퍼 함수들
# =============================================================================

def _style_header_row(ws, row: int, n_cols: int, start_col: int = 1) -> None:
    """지정 행을 헤더 스타일(파란 배경, 흰 볼드 폰트, 가운데 정렬)로 설정."""
    for col in range(start_col, start_col + n_cols):
        cell           = ws.cell(row=row, column=col)
        cell.fill      = _HEADER_FILL
        cell.font      = _HEADER_FONT
        cell.border    = _THIN_BORDER
        cell.alignment = _CENTER_ALIGN


def _style_data_rows(ws, start_row: int, end_row: int, n_cols: int,
                     start_col: int = 1) -> None:
    """데이터 행에 교번 배경색 + 테두리. 첫 컬럼만 왼쪽 정렬."""
    for row in range(start_row, end_row + 1):
        use_alt = (row % 2 == 0)
        for offset in range(n_cols):
            cell = ws.cell(row=row, column=start_col + offset)
            cell.fill      = _ALT_FILL if use_alt else _WHITE_FILL
            cell.font      = _BODY_FONT
            cell.border    = _THIN_BORDER
            cell.alignment = _LEFT_ALIGN if offset == 0 else _CENTER_ALIGN


def _set_number_format(ws, start_row: int, end_row: int, col: int) -> None:
    """실수 셀에만 지수 형식 적용 (정수/불리언은 그대로)."""
    for row in range(start_row, end_row + 1):
        cell = ws.cell(row=row, column=col)
        if isinstance(cell.value, float):
            cell.number_format = _NUM_FORMAT


def _auto_col_width(ws, padding: int = 3, max_width: int = 40) -> None:
    for col_cells in ws.columns:
        max_len = max((len(str(c.value)) for c in col_cells if c.value is not None), default=8)
        ws.column_dimensions[get_column_letter(col_cells[0].column)].width = min(max_len + padding, max_width)


def _cell_value(value):
    """numpy 스칼라 → 파이썬 기본형 (openpyxl 이 받는 타입)."""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, (list, tuple, dict)):
        return str(value)
    return value


# =============================================================================
# [함수 1] 표 시트 작성
# =============================================================================

def write_table_sheet(ws, title: str, meta: str, df: pd.DataFrame) -> None:
    """
    DataFrame 하나를 스타일 적용된 표로 작성.

    Row 1: 제목 / Row 2: 메타 / Row 4: 헤더 / Row 5~: 데이터
    """
    n_cols = max(len(df.columns), 1)
    ws["A1"] = title
    ws["A1"].font = _TITLE_FONT
    ws["A2"] = meta
    ws["A2"].font = _META_FONT

    for col_idx, name in enumerate(df.columns, start=1):
        ws.cell(row=4, column=col_idx, value=str(name))
    _style_header_row(ws, row=4, n_cols=n_cols)

    for r, record in enumerate(df.itertuples(index=False), start=5):
        for c, value in enumerate(record, start=1):
            ws.cell(row=r, column=c, value=_cell_value(value))
    end_row = 4 + len(df)
    if end_row >= 5:
        _style_data_rows(ws, start_row=5, end_row=end_row, n_cols=n_cols)
        for col in range(1, n_cols + 1):
            _set_number_format(ws, 5, end_row, col)
    ws.freeze_panes = "A5"
    _auto_col_width(ws)


# =============================================================================
# [함수 2] 속도장 덤프
# =============================================================================

def field_values_frame(field: Field3D, eta: SurfaceProfile) -> pd.DataFrame:
    """
    u̇ 계수 → 물리 격자점의 물리 속도 표.

    열: x, y, z, u1, u2, u3. 행 순서는 (z 노드, a₁, a₂), 행 수 (M+1)·(2N+1)².
    """
    setup = field.setup
    step = setup.pad // setup.size
    geo = SurfaceGeometry(eta)
    u = geo.pushforward(field.physical())[..., ::step, ::step]
    x, y, z = (arr[..., ::step, ::step] for arr in geo.physical_points())
    return pd.DataFrame({
        "x": x.ravel(), "y": y.ravel(), "z": z.ravel(),
        "u1": u[0].ravel(), "u2": u[1].ravel(), "u3": u[2].ravel(),
    })


def field_coeffs_frame(field: Field3D) -> pd.DataFrame:
    """Fourier–Chebyshev 노드 계수 표. 열: n1, n2, z_index, component(1..3), re, im."""
    setup = field.setup
    comp, zi, i, j = np.indices(field.coeffs.shape)
    return pd.DataFrame({
        "n1": setup.orders[i].ravel(),
        "n2": setup.orders[j].ravel(),
        "z_index": zi.ravel(),
        "component": comp.ravel() + 1,
        "re": field.coeffs.real.ravel(),
        "im": field.coeffs.imag.ravel(),
    })


# =============================================================================
# [함수 3] RunWriter — 실행 디렉터리 한 개
# =============================================================================

class RunWriter:
    """
    실행 결과 디렉터리 관리.

    사용:
        writer = RunWriter(out_dir, command="solve", meta="…")
        writer.add_table("summary", df)        # summary.csv + 시트
        writer.add_field("eta_0", df)          # fields/eta_0.csv
        writer.add_lines(["…"])                # report.txt 본문
        writer.finalize()
    """

    def __init__(self, out_dir: str | Path, command: str, meta: str = ""):
        self.out_dir = Path(out_dir)
        self.command = command
        self.meta = meta
        self.lines: list[str] = []
        self.tables: dict[str, pd.DataFrame] = {}
        self.fields: dict[str, pd.DataFrame] = {}
        self.written: list[Path] = []

    def add_lines(self, lines) -> None:
        self.lines.extend(lines)

    def add_table(self, name: str, df: pd.DataFrame) -> None:
        self.tables[name] = df

    def add_field(self, name: str, df: pd.DataFrame) -> None:
        self.fields[name] = df

    def add_velocity(self, name: str, field: Field3D, eta: SurfaceProfile) -> None:
        """fields/{name}.csv (물리 격자 값) + fields/{name}_coeffs.csv (계수)."""
        self.fields[name] = field_values_frame(field, eta)
        self.fields[f"{name}_coeffs"] = field_coeffs_frame(field)

    def finalize(self) -> list[Path]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name, df in self.tables.items():
            path = self.out_dir / f"{name}.csv"
            write_csv(df, path)
            self.written.append(path)
        for name, df in self.fields.items():
            path = self.out_dir / "fields" / f"{name}.csv"
            write_csv(df, path)
            self.written.append(path)
        text_path = self.out_dir / "report.txt"
        text_path.write_text("\n".join(self.lines) + "\n", encoding="utf-8")
        self.written.append(text_path)
        xlsx = write_workbook(self.out_dir / "report.xlsx", self.command, self.meta, self.tables)
        if xlsx is not None:
            self.written.append(xlsx)
        _logger.info("출력 %d 개 → %s", len(self.written), self.out_dir)
        return self.written


def write_csv(df: pd.DataFrame, path: str | Path) -> Path:
    """왕복 정밀도 CSV (헤더 포함, 인덱스 없음)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=_FLOAT_FORMAT)
    return path


def write_workbook(path: str | Path, command: str, meta: str,
                   tables: dict[str, pd.DataFrame]) -> Path | None:
    """표마다 시트 하나인 xlsx. openpyxl 이 없으면 None."""
    if not _OPENPYXL_OK:
        _logger.warning("openpyxl 미설치: report.xlsx 생략")
        return None
    wb = Workbook()
    wb.remove(wb.active)
    for name, df in tables.items():
        ws = wb.create_sheet(title=name[:_SHEET_NAME_MAX])
        write_table_sheet(ws, f"{command}: {name}", meta, df)
    if not tables:
        wb.create_sheet(title="empty")
    path = Path(path)
    wb.save(path)
    return path
