"""Scikit-learn style wrapper around the full pipeline."""

import numpy as np
import pytest
from sklearn.base import clone

from minlab import ConstrainedEnergyMinimizer


@pytest.fixture(scope="module")
def fitted():
    est = ConstrainedEnergyMinimizer(
        n=5,
        beta=4.0,
        k=1.0,
        lam_frac=0.9,
        m=256,
        gamma_mesh=2.0,
        max_iter=800,
        n_starts=2,
        seed=0,
    )
    return est.fit()


def test_fit_attributes(fitted):
    assert fitted.converged_
    assert 0.0 <= fitted.s_value_ < fitted.alpha_s_est_
    assert fitted.theta_ > 0.0
    assert fitted.lambda1_ > 0.0
    assert fitted.regime_.tag.value == "ExistenceRange"
    assert len(fitted.reports_) == 2
    assert fitted.report_.s_value == fitted.s_value_


def test_predict_interpolates(fitted):
    r = np.array([0.0, 0.5, 1.0, 2.0])
    vals = fitted.predict(r)
    assert vals[0] == fitted.u_.values[0]
    assert vals[-1] == 0.0  # outside the domain
    assert np.all(vals >= 0.0)


def test_score(fitted):
    assert fitted.score() == -fitted.s_value_


def test_requires_fit():
    est = ConstrainedEnergyMinimizer()
    with pytest.raises(RuntimeError):
        est.predict([0.1])
    with pytest.raises(RuntimeError):
        est.score()


def test_sklearn_clone_roundtrip():
    est = ConstrainedEnergyMinimizer(n=4, beta=3.5, lam=1.0, m=128)
    est2 = clone(est)
    assert est2.get_params() == est.get_params()
