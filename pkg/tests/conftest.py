import numpy as np
import pytest

from vizpick.tables import DataTable


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_table(rng, n_rows=50, table_id="t", normalized=False):
    x = rng.uniform(0.0, 10.0, n_rows)
    y = rng.uniform(-5.0, 5.0, n_rows)
    if normalized:
        x = (x - x.min()) / (x.max() - x.min())
        y = (y - y.min()) / (y.max() - y.min())
    return DataTable.build(table_id, [("x", x), ("y", y)])
