import numpy as np
import pytest

from colorconcept.datasets import (builtin_bcp37, builtin_fruit_ratings,
                                   builtin_table, builtin_uw58,
                                   check_table_consistency, fruit_ratings_path,
                                   load_color_table, load_ratings, save_ratings)


class TestBuiltinTables:
    def test_uw58_size_and_anchors(self):
        t = builtin_uw58()
        assert len(t) == 58
        assert t.entries[26].lab.L == 100.0  # entry 27 is white
        assert (t.entries[26].lab.a, t.entries[26].lab.b) == (0.0, 0.0)
        assert t.entries[22].lab.L == 0.0  # entry 23 is black

    def test_bcp37_size_and_anchors(self):
        t = builtin_bcp37()
        assert len(t) == 37
        sr = t.entries[0]
        assert sr.label == "SR"
        assert (sr.lch.L, sr.lch.c, sr.lch.h) == (51.573, 70.07, 27.356)
        bk = next(e for e in t.entries if e.label == "BK")
        assert bk.lab.L == 2.3361

    def test_white_points(self):
        assert builtin_uw58().entries[0].white_point.Y == 100.0
        wp = builtin_bcp37().entries[0].white_point
        assert (wp.x, wp.y, wp.Y) == (0.312, 0.318, 116.0)

    @pytest.mark.parametrize("name", ["uw58", "bcp37"])
    def test_cross_space_consistency(self, name):
        check_table_consistency(builtin_table(name))

    def test_unknown_builtin(self):
        with pytest.raises(ValueError):
            builtin_table("munsell")

    def test_csv_round_trip(self, tmp_path):
        t = builtin_uw58()
        path = tmp_path / "uw58.csv"
        t.to_csv(path)
        loaded = load_color_table(path, white_point=t.entries[0].white_point)
        assert len(loaded) == len(t)
        for a, b in zip(loaded.entries, t.entries):
            assert a.index == b.index and a.label == b.label
            assert a.lab == b.lab and a.xyy == b.xyy


class TestRatings:
    def test_shipped_fruit_ratings(self):
        r = builtin_fruit_ratings()
        assert r.values.shape == (12, 58)
        assert r.rating("blueberry", 2) == pytest.approx(0.8081, abs=1e-4)
        assert r.rating("orange", 51) == pytest.approx(0.8497, abs=1e-4)
        assert r.values.min() >= 0.0 and r.values.max() <= 1.0

    def test_round_trip(self, tmp_path):
        r = builtin_fruit_ratings()
        path = tmp_path / "ratings.csv"
        save_ratings(r, path)
        again = load_ratings(path, builtin_uw58())
        assert again.concepts == r.concepts
        np.testing.assert_array_equal(again.values, r.values)

    def test_rejects_out_of_range_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        lines = ["color_index,thing"]
        lines += [f"{i},0.5" for i in range(1, 58)]
        lines.append("58,1.2")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="outside"):
            load_ratings(path, builtin_uw58())

    def test_rejects_dimension_mismatch(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("color_index,thing\n1,0.5\n2,0.5\n")
        with pytest.raises(ValueError, match="indices"):
            load_ratings(path, builtin_uw58())

    def test_rejects_malformed_cell(self, tmp_path):
        path = tmp_path / "mal.csv"
        lines = ["color_index,thing"] + [f"{i},0.5" for i in range(1, 58)] + ["58,zebra"]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="malformed"):
            load_ratings(path, builtin_uw58())

    def test_rejects_missing_column(self, tmp_path):
        path = tmp_path / "missing.csv"
        lines = ["color_index,a,b"] + [f"{i},0.5" for i in range(1, 59)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="cells"):
            load_ratings(path, builtin_uw58())

    def test_tolerates_trailing_whitespace(self, tmp_path):
        path = tmp_path / "ws.csv"
        lines = ["color_index, thing "] + [f"{i}, 0.5 " for i in range(1, 59)]
        path.write_text("\n".join(lines) + "\n")
        r = load_ratings(path, builtin_uw58())
        assert r.concepts == ("thing",)
        assert float(r.values[0, 0]) == 0.5

    def test_shipped_file_exists(self):
        assert fruit_ratings_path().exists()
