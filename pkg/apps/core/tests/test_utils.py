import json
import math
from pathlib import Path

import numpy as np
import pytest

from apps.core.exceptions import ConfigError, LinerBreaksError, PanelBuildError, SeriesTooShort
from apps.core.utils.files import atomic_write_json, atomic_write_text
from apps.core.utils.json import to_json_safe
from apps.inference.service import IntervalStatus
from apps.panel.models import CellFailure


class TestToJsonSafe:
    def test_numpy_and_enums(self):
        payload = {
            "n": np.int64(3),
            "x": np.float64(0.5),
            "ok": np.bool_(True),
            "years": np.array([1990, 1991]),
            "status": IntervalStatus.OK,
            "path": Path("out/panel.csv"),
        }
        assert to_json_safe(payload) == {
            "n": 3,
            "x": 0.5,
            "ok": True,
            "years": [1990, 1991],
            "status": "ok",
            "path": "out/panel.csv",
        }

    def test_non_finite_floats(self):
        assert to_json_safe([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_sets_are_sorted(self):
        assert to_json_safe({3, 1, 2}) == [1, 2, 3]


class TestAtomicWrite:
    def test_creates_parents(self, tmp_path):
        path = atomic_write_text(tmp_path / "a" / "b.txt", "x\n")
        assert path.read_text() == "x\n"
        assert [item.name for item in path.parent.iterdir()] == ["b.txt"]

    def test_json_layout(self, tmp_path):
        path = atomic_write_json(tmp_path / "r.json", {"bic": -math.inf, "m": np.int64(1)})
        assert path.read_text() == '{\n  "bic": "-inf",\n  "m": 1\n}\n'
        assert json.loads(path.read_text())["m"] == 1

    def test_failed_write_leaves_target_untouched(self, tmp_path):
        target = tmp_path / "r.json"
        target.write_text("old")
        with pytest.raises(TypeError):
            atomic_write_json(target, {"bad": object()})
        assert target.read_text() == "old"
        assert [item.name for item in tmp_path.iterdir()] == ["r.json"]


class TestErrors:
    def test_payload(self):
        error = SeriesTooShort("Too short", {"t_len": 3})
        assert error.to_payload() == {
            "code": "series_too_short",
            "message": "Too short",
            "details": {"t_len": 3},
        }
        assert LinerBreaksError("x").to_payload() == {"code": "error", "message": "x"}

    def test_exit_codes(self):
        assert SeriesTooShort("x").exit_code == 2
        assert ConfigError("x").exit_code == 1

    def test_panel_build_error_collects_failures(self):
        failure = CellFailure("cpi", "route", 1990, "missing_cpi_year", "No CPI for 1990")
        error = PanelBuildError([failure, failure])
        assert error.message == "2 panel cell(s) could not be built"
        assert error.to_payload()["details"]["failures"][0]["year"] == 1990
