import pytest

from vibron_ratchet.experiments import ratchet_experiment, reference_model, reference_settings


@pytest.fixture(scope="session")
def ref_model():
    return reference_model()


@pytest.fixture(scope="session")
def ref_settings():
    return reference_settings()


@pytest.fixture(scope="session")
def ref_report(ref_model, ref_settings):
    return ratchet_experiment(ref_model, ref_settings["threshold"], ref_settings["horizon_periods"])
