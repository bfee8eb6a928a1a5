from pathlib import Path

import numpy as np
import pandas as pd
import pytest

TOY = Path(__file__).resolve().parents[2] / "panel" / "tests" / "fixtures" / "toy"


def three_regimes(seed=2008, sigma=0.1):
    rng = np.random.default_rng(seed)
    return np.repeat([0.0, 5.0, 10.0], 20) + rng.normal(scale=sigma, size=60)


@pytest.fixture
def toy_dir():
    return TOY


@pytest.fixture
def panel_file(tmp_path):
    """A panel with a three-regime route series (1949-2008) and a five-year scrap series."""
    rows = [
        ("regimes", 1949 + offset, value, "usd_1995_per_teu")
        for offset, value in enumerate(three_regimes())
    ]
    rows += [("scrap", year, 1.0 + year % 3, "usd_1995_per_teu") for year in range(2000, 2005)]
    path = tmp_path / "panel.csv"
    pd.DataFrame(rows, columns=["key", "year", "value", "unit"]).to_csv(
        path, index=False, float_format="%.10f"
    )
    return path
