from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from thinlens import ExifRecord, classify_dof_bucket, partition_corpus
from thinlens.exif import PartitionConfig

from exif_blobs import (
    TAG_EXPOSURE_TIME,
    TAG_F_NUMBER,
    TAG_MAKE,
    ascii_entry,
    build_tiff,
    rational_entry,
    wrap_jpeg,
)


class TestClassify:
    def test_shallow_below_ten(self):
        rec = ExifRecord(f_number=1.8, make="Canon")
        assert classify_dof_bucket(rec).kind == "shallow"

    def test_deep_between_ten_and_fifty(self):
        rec = ExifRecord(f_number=11.0, exposure_time_s=0.05)
        assert classify_dof_bucket(rec).kind == "deep"

    def test_smartphone_rejected_from_shallow(self):
        rec = ExifRecord(f_number=5.6, make="Apple")
        bucket = classify_dof_bucket(rec)
        assert bucket.kind == "rejected" and bucket.reason == "smartphone"

    def test_long_exposure_rejected_from_deep(self):
        rec = ExifRecord(f_number=11.0, exposure_time_s=0.5)
        bucket = classify_dof_bucket(rec)
        assert bucket.kind == "rejected" and bucket.reason == "long_exposure"

    def test_missing_aperture(self):
        bucket = classify_dof_bucket(ExifRecord(make="Canon"))
        assert bucket.kind == "rejected" and bucket.reason == "no_aperture"

    def test_boundaries(self):
        assert classify_dof_bucket(ExifRecord(f_number=10.0)).kind == "deep"
        assert classify_dof_bucket(ExifRecord(f_number=50.0)).kind == "deep"
        assert classify_dof_bucket(ExifRecord(f_number=9.99)).kind == "shallow"
        bucket = classify_dof_bucket(ExifRecord(f_number=50.1))
        assert bucket.reason == "aperture_out_of_range"

    def test_denylist_case_insensitive_substring(self):
        rec = ExifRecord(f_number=2.0, make="SAMSUNG ELECTRONICS")
        assert classify_dof_bucket(rec).reason == "smartphone"
        rec = ExifRecord(f_number=2.0, make="Canon")
        assert classify_dof_bucket(rec, denylist=("canon",)).reason == "smartphone"

    def test_blur_labels(self):
        shallow = ExifRecord(f_number=2.0)
        deep = ExifRecord(f_number=16.0)
        assert classify_dof_bucket(shallow, blur_label="desirable").kind == "shallow"
        assert classify_dof_bucket(shallow, blur_label="none").reason == "blur_label_mismatch"
        assert classify_dof_bucket(deep, blur_label="none").kind == "deep"
        assert classify_dof_bucket(deep, blur_label="undesirable").reason == "blur_label_mismatch"
        with pytest.raises(ValueError):
            classify_dof_bucket(shallow, blur_label="blurry")

    def test_exposure_only_filters_deep(self):
        rec = ExifRecord(f_number=2.0, exposure_time_s=5.0)
        assert classify_dof_bucket(rec).kind == "shallow"

    @given(
        f_number=st.one_of(st.none(), st.floats(0.1, 100.0)),
        exposure=st.one_of(st.none(), st.floats(1e-4, 10.0)),
        make=st.sampled_from([None, "Canon", "Apple", "google pixel"]),
    )
    def test_total_and_exclusive(self, f_number, exposure, make):
        rec = ExifRecord(f_number=f_number, exposure_time_s=exposure, make=make)
        bucket = classify_dof_bucket(rec)
        assert bucket.kind in ("deep", "shallow", "rejected")
        if bucket.kind == "rejected":
            assert isinstance(bucket.reason, str) and bucket.reason
        else:
            assert bucket.reason is None
        # aperture ranges are mutually exclusive
        if f_number is not None and bucket.kind == "shallow":
            assert f_number < 10
        if f_number is not None and bucket.kind == "deep":
            assert 10 <= f_number <= 50


def _write_jpeg(path: Path, ifd0, exif) -> None:
    path.write_bytes(wrap_jpeg(build_tiff(ifd0, exif, "<").blob))


class TestPartitionCorpus:
    def test_empty_manifest(self, tmp_path):
        report = partition_corpus([], tmp_path / "out")
        assert report.deep_count == report.shallow_count == 0
        assert report.rejected_path.read_text() == ""
        assert report.deep_path.read_text() == ""
        assert report.shallow_path.read_text() == ""

    def test_four_rule_examples(self, tmp_path):
        files = tmp_path / "files"
        files.mkdir()
        _write_jpeg(
            files / "shallow.jpg",
            [ascii_entry(TAG_MAKE, "Canon")],
            [rational_entry(TAG_F_NUMBER, 9, 5, "<")],
        )
        _write_jpeg(
            files / "deep.jpg",
            [],
            [
                rational_entry(TAG_F_NUMBER, 11, 1, "<"),
                rational_entry(TAG_EXPOSURE_TIME, 1, 20, "<"),
            ],
        )
        _write_jpeg(
            files / "phone.jpg",
            [ascii_entry(TAG_MAKE, "Apple")],
            [rational_entry(TAG_F_NUMBER, 28, 5, "<")],
        )
        _write_jpeg(
            files / "tripod.jpg",
            [],
            [
                rational_entry(TAG_F_NUMBER, 11, 1, "<"),
                rational_entry(TAG_EXPOSURE_TIME, 1, 2, "<"),
            ],
        )
        manifest = [
            files / "shallow.jpg",
            files / "deep.jpg",
            files / "phone.jpg",
            files / "tripod.jpg",
        ]
        report = partition_corpus(manifest, tmp_path / "out")
        assert report.deep_count == 1
        assert report.shallow_count == 1
        assert dict(report.rejected) == {"smartphone": 1, "long_exposure": 1}

        shallow_lines = report.shallow_path.read_text().splitlines()
        assert shallow_lines == [f"{files / 'shallow.jpg'}\t1.8\t\t"]
        deep_lines = report.deep_path.read_text().splitlines()
        assert deep_lines == [f"{files / 'deep.jpg'}\t11.0\t\t0.05"]
        rejected_lines = report.rejected_path.read_text().splitlines()
        assert rejected_lines == [
            f"{files / 'phone.jpg'}\tsmartphone",
            f"{files / 'tripod.jpg'}\tlong_exposure",
        ]

    def test_unreadable_path_is_isolated(self, tmp_path):
        files = tmp_path / "files"
        files.mkdir()
        _write_jpeg(
            files / "good.jpg",
            [],
            [rational_entry(TAG_F_NUMBER, 11, 1, "<")],
        )
        report = partition_corpus(
            [files / "missing.jpg", files / "good.jpg"], tmp_path / "out"
        )
        assert report.deep_count == 1
        assert dict(report.rejected) == {"parse_error": 1}

    def test_blur_labels_config(self, tmp_path):
        files = tmp_path / "files"
        files.mkdir()
        path = files / "img.jpg"
        _write_jpeg(path, [], [rational_entry(TAG_F_NUMBER, 2, 1, "<")])
        config = PartitionConfig(blur_labels={str(path): "undesirable"})
        report = partition_corpus([path], tmp_path / "out", config)
        assert dict(report.rejected) == {"blur_label_mismatch": 1}

    def test_output_order_equals_input_order(self, tmp_path):
        files = tmp_path / "files"
        files.mkdir()
        paths = []
        for i, num in enumerate((8, 2, 4)):
            p = files / f"img{i}.jpg"
            _write_jpeg(p, [], [rational_entry(TAG_F_NUMBER, num, 1, "<")])
            paths.append(p)
        report = partition_corpus(paths, tmp_path / "out")
        lines = report.shallow_path.read_text().splitlines()
        assert [ln.split("\t")[0] for ln in lines] == [str(p) for p in paths]
