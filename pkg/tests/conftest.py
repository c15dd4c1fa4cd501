import pytest

from freevis.spectrum import build_count_table


@pytest.fixture(scope="session")
def table2():
    return build_count_table(2, 201)


@pytest.fixture(scope="session")
def table3():
    return build_count_table(3, 40)


@pytest.fixture(scope="session")
def small_table2():
    return build_count_table(2, 14)
