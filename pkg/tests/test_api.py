import pytest

import sailcone
from sailcone import (
    ConfigurationError,
    DegeneratePathError,
    DomainError,
    FitError,
    InfeasibleDirectionError,
    IntegrationError,
    MissionError,
    OracleInfeasibleError,
    SailconeError,
    ScenarioError,
)


def test_public_names_resolve():
    for name in sailcone.__all__:
        assert hasattr(sailcone, name), name


@pytest.mark.parametrize(
    ("sub_cls", "base_cls"),
    [
        pytest.param(DomainError, SailconeError),
        pytest.param(DomainError, ValueError),
        pytest.param(DegeneratePathError, DomainError),
        pytest.param(InfeasibleDirectionError, DomainError),
        pytest.param(ConfigurationError, ValueError),
        pytest.param(MissionError, ValueError),
        pytest.param(ScenarioError, SailconeError),
        pytest.param(FitError, SailconeError),
        pytest.param(IntegrationError, SailconeError),
        pytest.param(OracleInfeasibleError, SailconeError),
    ],
)
def test_subclass(sub_cls, base_cls):
    assert issubclass(sub_cls, base_cls)


def test_error_payloads():
    degenerate = DegeneratePathError(3, 1e-12)
    assert (degenerate.node, degenerate.sp12) == (3, 1e-12)
    assert "node 3" in str(degenerate)
    assert FitError("bad fit", {"kt_poly2": 0.1}).diagnostics == {"kt_poly2": 0.1}
    assert FitError("bad fit").diagnostics == {}
    assert str(ScenarioError("", "not found")) == "not found"
