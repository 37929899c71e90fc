import pytest

from config import Settings
from services.arrangement_service import ArrangementService
from services.bound_service import BoundService
from services.gamma_service import GammaService
from services.network_service import NetworkService
from services.verification_service import VerificationService


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(trials=20, out_dir=str(tmp_path / "artifacts"))


@pytest.fixture
def gamma_service(settings) -> GammaService:
    return GammaService(settings)


@pytest.fixture
def bound_service(settings) -> BoundService:
    return BoundService(settings)


@pytest.fixture
def arrangement_service(settings) -> ArrangementService:
    return ArrangementService(settings)


@pytest.fixture
def network_service(settings, arrangement_service) -> NetworkService:
    return NetworkService(settings, arrangement_service)


@pytest.fixture
def verification_service(settings, gamma_service, bound_service, arrangement_service, network_service):
    return VerificationService(settings, gamma_service, bound_service, arrangement_service, network_service)
