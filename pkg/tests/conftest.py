"""Fixtures partagées : configuration isolée, modèles de référence et échantillons simulés."""

import numpy as np
import pytest

from mevforge.core.distributions import GevParams, ParetoPoissonParams
from mevforge.core.hetreg import HetRegModel
from mevforge.core.mixed import MixedModel
from mevforge.core.simulate import SimulationConfig, simulate
from mevforge.utils.config import AnalysisConfig, reset_config, set_config

CASE1_GEV = GevParams(mu=10.0, logpsi=0.5, xi=-0.15)
CASE1_BETA = (-0.5, 0.7, -0.3, 0.1)
CASE2_PP = ParetoPoissonParams(lam=25.0, logpsi=-0.13, xi=-0.05, u=2.5)
CASE2_BETA = (0.16, 0.04, 0.3, 0.06)


@pytest.fixture
def config(tmp_path):
    """Configuration sans fichier .env, résultats dans un répertoire temporaire"""
    cfg = AnalysisConfig(_env_file=None, out_dir=tmp_path / "results")
    set_config(cfg)
    yield cfg
    reset_config()


def make_mixed(ev, beta, config, ev_cov=None, reg_cov=None, n_obs=1000, family="linear"):
    """Modèle mixte à paramètres connus, covariances nulles par défaut"""
    return MixedModel(
        ev=ev,
        reg=HetRegModel(family=family, beta=beta),
        ev_covariance=np.zeros((3, 3)) if ev_cov is None else ev_cov,
        reg_covariance=np.zeros((4, 4)) if reg_cov is None else reg_cov,
        n_obs=n_obs,
        config=config,
    )


@pytest.fixture
def degenerate_mixed(config):
    """Y ≈ 0 presque sûrement : F_Z doit se confondre avec F_X"""
    return make_mixed(CASE1_GEV, (0.0, 0.0, 1e-10, 0.0), config)


@pytest.fixture
def shifted_mixed(config):
    """Y ~ N(0.5, 0.7²) indépendant de X : Z = X + 0.5 + 0.7ε"""
    return make_mixed(CASE1_GEV, (0.5, 0.0, 0.7, 0.0), config,
                      ev_cov=np.diag([0.01, 0.001, 0.001]), reg_cov=np.diag([0.01, 0.001, 0.001, 0.0001]))


@pytest.fixture
def case1_mixed(config):
    return make_mixed(CASE1_GEV, CASE1_BETA, config,
                      ev_cov=np.diag([0.003, 0.0006, 0.0004]), reg_cov=np.diag([0.02, 0.0002, 0.006, 0.00006]))


@pytest.fixture(scope="session")
def case1_sample():
    return simulate(SimulationConfig.case1(years=1000, seed=7))


@pytest.fixture(scope="session")
def case2_sample():
    return simulate(SimulationConfig.case2(years=1000, seed=11))
