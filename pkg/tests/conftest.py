import numpy as np
import pytest

from cubicpt.eigensolver import ShootingConfig, fd_oracle, solve_eigenvalue
from cubicpt.instability import kappa
from cubicpt.model import ModelParams
from cubicpt.stokes import build_diagram


@pytest.fixture(scope="session")
def cfg():
    return ShootingConfig()


def _bundle(n, alpha, cfg):
    rec = solve_eigenvalue(n, alpha, cfg)
    diagram = build_diagram(ModelParams(alpha, rec.h), x_max=cfg.x_max)
    irec = kappa(rec, diagram=diagram)
    return rec, irec, diagram


@pytest.fixture(scope="session")
def bundles_a0(cfg):
    """(EigenRecord, InstabilityRecord, StokesDiagram) for alpha=0, n=4..12."""
    return {n: _bundle(n, 0.0, cfg) for n in range(4, 13)}


@pytest.fixture(scope="session")
def bundles_a1(cfg):
    return {n: _bundle(n, 1.0, cfg) for n in (4, 8, 10, 11, 12)}


@pytest.fixture(scope="session")
def bundles_a2(cfg):
    return {n: _bundle(n, 2.0, cfg) for n in range(6, 13)}


@pytest.fixture(scope="session")
def light_lams(cfg):
    """Light eigenvalues lam[alpha][n] for alpha in {0,1,2}, n = 1..12."""
    out = {}
    for alpha in (0.0, 1.0, 2.0):
        out[alpha] = {
            n: complex(solve_eigenvalue(n, alpha, cfg, assemble=False).lam)
            for n in range(1, 13)}
    return out


@pytest.fixture(scope="session")
def oracle_lams():
    """Richardson-extrapolated finite-difference eigenvalues, k=6."""
    return {alpha: fd_oracle(alpha, N=4000, L=12.0, k=6)
            for alpha in (0.0, 1.0, 2.0)}
