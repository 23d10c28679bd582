"""PNG and JSONL round trips, atomicity, and itemized read errors."""

import numpy as np
import pytest

from hairline.dataio import (
    append_jsonl,
    read_jsonl,
    read_png_mask,
    read_png_rgb,
    write_jsonl,
    write_png,
)
from hairline.errors import IngestError


class TestPng:
    def test_rgb_round_trip(self, tmp_path, rng):
        arr = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
        p = tmp_path / "img.png"
        write_png(p, arr)
        assert np.array_equal(read_png_rgb(p), arr)

    def test_mask_round_trip(self, tmp_path, rng):
        bits = rng.random((16, 16)) < 0.4
        p = tmp_path / "m.png"
        write_png(p, bits)
        assert np.array_equal(read_png_mask(p), bits)

    def test_single_channel_promoted(self, tmp_path):
        arr = np.full((8, 8, 1), 77, dtype=np.uint8)
        p = tmp_path / "g.png"
        write_png(p, arr)
        out = read_png_rgb(p)
        assert out.shape == (8, 8, 3)
        assert (out == 77).all()

    def test_unreadable_rejected(self, tmp_path):
        p = tmp_path / "junk.png"
        p.write_bytes(b"not a png at all")
        with pytest.raises(IngestError):
            read_png_rgb(p)
        with pytest.raises(IngestError):
            read_png_mask(p)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(IngestError):
            read_png_rgb(tmp_path / "absent.png")

    def test_float_dtype_rejected(self, tmp_path):
        with pytest.raises(IngestError):
            write_png(tmp_path / "f.png", np.zeros((4, 4), dtype=np.float64))

    def test_no_temp_file_left_behind(self, tmp_path):
        write_png(tmp_path / "a.png", np.zeros((4, 4, 3), dtype=np.uint8))
        assert [p.name for p in tmp_path.iterdir()] == ["a.png"]


class TestJsonl:
    def test_round_trip(self, tmp_path):
        rows = [{"a": 1, "b": "x"}, {"a": 2, "b": "y"}]
        p = tmp_path / "rows.jsonl"
        write_jsonl(p, rows)
        assert read_jsonl(p) == rows

    def test_append_then_read(self, tmp_path):
        p = tmp_path / "log.jsonl"
        append_jsonl(p, {"n": 1})
        append_jsonl(p, {"n": 2})
        assert read_jsonl(p) == [{"n": 1}, {"n": 2}]

    def test_missing_file_reads_empty(self, tmp_path):
        assert read_jsonl(tmp_path / "nope.jsonl") == []

    def test_bad_line_reports_line_number(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"ok": 1}\n{broken\n{"ok": 2}\n')
        with pytest.raises(IngestError, match=r":2:"):
            read_jsonl(p)

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "gaps.jsonl"
        p.write_text('{"n": 1}\n\n\n{"n": 2}\n')
        assert read_jsonl(p) == [{"n": 1}, {"n": 2}]

    def test_overwrite_is_atomic_replacement(self, tmp_path):
        p = tmp_path / "rows.jsonl"
        write_jsonl(p, [{"v": 1}])
        write_jsonl(p, [{"v": 2}, {"v": 3}])
        assert read_jsonl(p) == [{"v": 2}, {"v": 3}]
        assert [q.name for q in tmp_path.iterdir()] == ["rows.jsonl"]

    def test_unicode_round_trip(self, tmp_path):
        rows = [{"note": "Schraube locker, Blatt 3 prüfen"}]
        p = tmp_path / "u.jsonl"
        write_jsonl(p, rows)
        assert read_jsonl(p) == rows
