import numpy as np
import pytest
from PIL import Image

from colorconcept.corpus import (CorpusManifest, ImageRecord,
                                 LocalDirectoryFetcher, fetch, load_manifest,
                                 scan_corpus)
from colorconcept.datasets import ConceptSet


def _write_tree(root, concepts, n, ext="png"):
    for concept in concepts:
        d = root / concept
        d.mkdir(parents=True)
        for i in range(1, n + 1):
            arr = np.full((8, 8, 3), i * 10 % 255, dtype=np.uint8)
            Image.fromarray(arr, "RGB").save(d / f"{i:02d}.{ext}")


class TestScan:
    def test_scan_counts_and_order(self, tmp_path):
        _write_tree(tmp_path, ["apple", "beet"], 3)
        m = scan_corpus(tmp_path, limit=50)
        assert len(m.records) == 6
        assert m.concepts == ("apple", "beet")
        apples = m.by_concept("apple")
        assert [r.rank for r in apples] == [1, 2, 3]
        assert [r.path.name for r in apples] == ["01.png", "02.png", "03.png"]

    def test_limit_truncates(self, tmp_path):
        _write_tree(tmp_path, ["apple", "beet"], 5)
        m = scan_corpus(tmp_path, limit=2)
        assert len(m.records) == 4
        assert all(r.rank <= 2 for r in m.records)

    def test_deterministic_serialization(self, tmp_path):
        _write_tree(tmp_path, ["apple", "beet"], 3)
        a = scan_corpus(tmp_path, limit=50).to_json()
        b = scan_corpus(tmp_path, limit=50).to_json()
        assert a == b

    def test_empty_concept_dir_is_error(self, tmp_path):
        _write_tree(tmp_path, ["apple"], 2)
        (tmp_path / "vacant").mkdir()
        with pytest.raises(ValueError, match="vacant"):
            scan_corpus(tmp_path, limit=50)

    def test_undecodable_skipped_with_warning(self, tmp_path):
        _write_tree(tmp_path, ["apple"], 2)
        (tmp_path / "apple" / "00_broken.png").write_bytes(b"not an image")
        with pytest.warns(UserWarning, match="undecodable"):
            m = scan_corpus(tmp_path, limit=50)
        assert len(m.records) == 2
        assert m.skipped["apple"] == 1
        # ranks stay contiguous over readable files
        assert [r.rank for r in m.by_concept("apple")] == [1, 2]

    def test_missing_root(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            scan_corpus(tmp_path / "nope", limit=5)

    def test_zero_limit_rejected(self, tmp_path):
        _write_tree(tmp_path, ["apple"], 1)
        with pytest.raises(ValueError, match="limit"):
            scan_corpus(tmp_path, limit=0)

    def test_ignores_unknown_extensions(self, tmp_path):
        _write_tree(tmp_path, ["apple"], 2)
        (tmp_path / "apple" / "notes.txt").write_text("hi")
        m = scan_corpus(tmp_path, limit=50)
        assert len(m.records) == 2


class TestManifest:
    def test_json_round_trip(self, tmp_path):
        _write_tree(tmp_path, ["apple", "beet"], 2)
        m = scan_corpus(tmp_path, limit=50)
        path = tmp_path / "manifest.json"
        m.save(path)
        again = load_manifest(path)
        assert again.records == m.records
        assert again.extensions == m.extensions

    def test_duplicate_rank_rejected(self, tmp_path):
        rec = ImageRecord("a", 1, tmp_path / "x.png", "custom")
        with pytest.raises(ValueError, match="duplicate"):
            CorpusManifest(records=(rec, rec))

    def test_bad_provenance_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="provenance"):
            ImageRecord("a", 1, tmp_path / "x.png", "scraped")


class TestFetch:
    def test_local_provider_matches_scan(self, tmp_path):
        src = tmp_path / "mirror"
        _write_tree(src, ["apple", "beet"], 3)
        dest = tmp_path / "fetched"
        provider = LocalDirectoryFetcher(source_root=src)
        m = fetch(provider, ConceptSet(("apple", "beet")), limit=3, dest=dest)
        rescanned = scan_corpus(dest, limit=3)
        assert m.records == rescanned.records
        assert {(r.concept, r.rank) for r in m.records} == \
               {(r.concept, r.rank) for r in scan_corpus(src, limit=3).records}

    def test_provider_with_no_results_is_error(self, tmp_path):
        src = tmp_path / "mirror"
        _write_tree(src, ["apple"], 1)
        provider = LocalDirectoryFetcher(source_root=src)
        with pytest.raises(ValueError, match="pear"):
            fetch(provider, ConceptSet(("pear",)), limit=3, dest=tmp_path / "d")

    def test_zero_limit_is_error(self, tmp_path):
        provider = LocalDirectoryFetcher(source_root=tmp_path)
        with pytest.raises(ValueError, match="limit"):
            fetch(provider, ConceptSet(("apple",)), limit=0, dest=tmp_path / "d")
