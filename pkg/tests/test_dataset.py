import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aivqa.dataset import (
    NUM_DOMAINS,
    DatasetManifest,
    VideoRecord,
    align_by_name,
    format_video_filename,
    load_manifest,
    parse_video_filename,
    read_score_csv,
    split_manifest,
    write_predictions,
)
from aivqa.errors import (
    AlignmentError,
    DomainRangeError,
    DuplicateVideoIdError,
    FilenameParseError,
    SchemaError,
)


class TestFilenameParsing:
    def test_basic(self):
        assert parse_video_filename("1078_4.mp4") == (1078, 4)

    def test_domain_out_of_range(self):
        with pytest.raises(DomainRangeError):
            parse_video_filename("3_12.mp4")

    @pytest.mark.parametrize("bad", ["clip.mp4", "7.mp4", "a_1.mp4", "1_2.avi", "1_2", "_3.mp4"])
    def test_nonconforming(self, bad):
        with pytest.raises(FilenameParseError):
            parse_video_filename(bad)

    @given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=0, max_value=9))
    def test_format_parse_round_trip(self, vid, dom):
        assert parse_video_filename(format_video_filename(vid, dom)) == (vid, dom)


class TestRecords:
    def test_empty_prompt_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            VideoRecord("0_0.mp4", tmp_path / "0_0.mp4", "", 0)

    def test_domain_validated(self, tmp_path):
        with pytest.raises(DomainRangeError):
            VideoRecord("0_0.mp4", tmp_path / "0_0.mp4", "p", 0, domain_label=NUM_DOMAINS)

    def test_duplicate_ids_rejected(self, tmp_path):
        r1 = VideoRecord("3_0.mp4", tmp_path / "a", "p", 3)
        r2 = VideoRecord("3_1.mp4", tmp_path / "b", "p", 3)
        with pytest.raises(DuplicateVideoIdError):
            DatasetManifest(records=(r1, r2), split_tag="train")


def _write_manifest(path, rows, header=("video_name", "prompt", "mos", "domain")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


class TestLoadManifest:
    def test_domain_from_filename(self, tmp_path):
        p = tmp_path / "m.csv"
        _write_manifest(p, [["12_3.mp4", "a cat, sitting", "4.25", ""]])
        m = load_manifest(p, "train")
        assert m.records[0].video_id == 12
        assert m.records[0].domain_label == 3
        assert m.records[0].mos == 4.25
        assert m.records[0].prompt == "a cat, sitting"

    def test_explicit_domain_wins(self, tmp_path):
        p = tmp_path / "m.csv"
        _write_manifest(p, [["12_3.mp4", "x", "1.0", "7"]])
        assert load_manifest(p, "train").records[0].domain_label == 7

    def test_train_requires_mos(self, tmp_path):
        p = tmp_path / "m.csv"
        _write_manifest(p, [["12_3.mp4", "x", "", ""]])
        with pytest.raises(SchemaError):
            load_manifest(p, "train")
        assert load_manifest(p, "test").records[0].mos is None

    def test_missing_column(self, tmp_path):
        p = tmp_path / "m.csv"
        _write_manifest(p, [["12_3.mp4", "x"]], header=("video_name", "prompt"))
        with pytest.raises(SchemaError):
            load_manifest(p, "train")
        load_manifest(p, "test")  # mos optional outside training

    def test_npy_stems_parse(self, tmp_path):
        p = tmp_path / "m.csv"
        _write_manifest(p, [["5_2.npy", "x", "1.0", ""]])
        rec = load_manifest(p, "train").records[0]
        assert (rec.video_id, rec.domain_label) == (5, 2)

    def test_bad_split_tag(self, tmp_path):
        p = tmp_path / "m.csv"
        _write_manifest(p, [["1_1.mp4", "x", "1.0", ""]])
        with pytest.raises(SchemaError):
            load_manifest(p, "holdout")


class TestSplit:
    def _manifest(self, n):
        recs = tuple(
            VideoRecord(f"{i}_0.mp4", f"/v/{i}_0.mp4", "p", i, mos=float(i))
            for i in range(n)
        )
        return DatasetManifest(records=recs, split_tag="train")

    @given(st.integers(min_value=2, max_value=40), st.integers(min_value=0, max_value=10))
    @settings(max_examples=30, deadline=None)
    def test_partition_is_exact(self, n, seed):
        m = self._manifest(n)
        tr, va = split_manifest(m, 0.25, seed)
        ids = sorted(r.video_id for r in tr) + sorted(r.video_id for r in va)
        assert sorted(ids) == list(range(n))
        assert 1 <= len(va) <= n - 1

    def test_deterministic(self):
        m = self._manifest(10)
        a = split_manifest(m, 0.3, 5)
        b = split_manifest(m, 0.3, 5)
        assert [r.video_id for r in a[1]] == [r.video_id for r in b[1]]

    def test_fraction_validation(self):
        m = self._manifest(4)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                split_manifest(m, bad, 0)


class TestScoreCsv:
    def test_round_trip_six_decimals(self, tmp_path):
        p = tmp_path / "pred.csv"
        write_predictions(p, [("1_0.mp4", 0.123456789), ("2_1.mp4", -3.5)])
        text = p.read_text()
        assert "0.123457" in text and "-3.500000" in text
        rows = read_score_csv(p)
        assert rows[0] == ("1_0.mp4", 0.123457)

    def test_mos_column_accepted(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("video_name,mos\n1_0.mp4,2.5\n")
        assert read_score_csv(p) == [("1_0.mp4", 2.5)]

    def test_align_mismatch(self, tmp_path):
        left = [("a", 1.0), ("b", 2.0)]
        right = [("a", 1.0), ("c", 3.0)]
        with pytest.raises(AlignmentError) as err:
            align_by_name(left, right)
        assert "b" in str(err.value) and "c" in str(err.value)

    def test_align_order_follows_left(self):
        left = [("b", 2.0), ("a", 1.0)]
        right = [("a", 10.0), ("b", 20.0)]
        names, lv, rv = align_by_name(left, right)
        assert names == ["b", "a"]
        assert np.allclose(lv, [2.0, 1.0]) and np.allclose(rv, [20.0, 10.0])
