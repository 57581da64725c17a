# tests/conftest.py
# 공용 fixture: REF 설정 (g = d = 1, σ = 1, α = 1/2, 대칭 격자 |k| = 2, ω = π/3)
# 비선형 해는 계산 비용이 커서 module/session 범위로 공유

import json

import numpy as np
import pytest

from core import Discretization, Lattice, PhysicalParams
from modules.bifurcation import certify_bifurcation, symmetric_c_star
from modules.lyapunov_schmidt import LyapunovSchmidtSolver

REF_K = 2.0
REF_OMEGA = np.pi / 3


@pytest.fixture(scope="session")
def ref_params() -> PhysicalParams:
    return PhysicalParams(g=1.0, sigma=1.0, d=1.0, alpha=0.5)


@pytest.fixture(scope="session")
def ref_lattice() -> Lattice:
    return Lattice.symmetric(REF_K, REF_OMEGA)


@pytest.fixture(scope="session")
def ref_config(ref_params):
    return symmetric_c_star(REF_K, REF_OMEGA, ref_params)[0]


@pytest.fixture(scope="session")
def ref_c_star(ref_config) -> np.ndarray:
    return ref_config.c_star


@pytest.fixture(scope="session")
def ref_bif(ref_lattice, ref_params, ref_c_star):
    return certify_bifurcation(ref_lattice.k1, ref_lattice.k2, ref_params, ref_c_star)


@pytest.fixture(scope="session")
def ref_setup(ref_params, ref_lattice) -> Discretization:
    return Discretization(ref_params, ref_lattice, N=8, M=32)


@pytest.fixture(scope="session")
def small_setup(ref_params, ref_lattice) -> Discretization:
    return Discretization(ref_params, ref_lattice, N=4, M=20)


@pytest.fixture(scope="session")
def ref_solver(ref_bif, ref_setup) -> LyapunovSchmidtSolver:
    return LyapunovSchmidtSolver(ref_bif, ref_setup)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def write_config(tmp_path):
    """REF 설정 파일 작성기 (최상위 키 덮어쓰기)."""

    def _write(name="config.json", **overrides) -> str:
        cfg = {
            "params": {"g": 1.0, "d": 1.0, "sigma": 1.0, "alpha": 0.5},
            "lattice": {"symmetric": {"k": REF_K, "omega": REF_OMEGA}},
            "discretization": {"N": 4, "M": 20},
        }
        cfg.update(overrides)
        path = tmp_path / name
        path.write_text(json.dumps(cfg), encoding="utf-8")
        return str(path)

    return _write
