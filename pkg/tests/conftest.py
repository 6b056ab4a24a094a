import pytest

from cbceval import fixtures


@pytest.fixture(scope="session")
def sample_dataset():
    return fixtures.load_sample_dataset()


@pytest.fixture(scope="session")
def sample_spec():
    return fixtures.load_sample_constraint_spec()


@pytest.fixture()
def sample_paths(tmp_path):
    """Sample inputs copied to real files for CLI runs."""
    data = tmp_path / "sample_data.csv"
    data.write_text(fixtures.sample_dataset_text(), encoding="utf-8")
    constraints = tmp_path / "sample_constraints.json"
    constraints.write_text(fixtures.sample_constraints_text(), encoding="utf-8")
    return data, constraints
