import json
import time

import pytest

from poissonflats.corpus import (DEFAULT_CORPUS, GoldenCase, load_corpus,
                                 regenerate_golden)


class TestGoldenCorpus:
    def test_corpus_shipped_and_versioned(self):
        assert DEFAULT_CORPUS.exists()
        payload = json.loads(DEFAULT_CORPUS.read_text())
        assert payload["version"] == 1
        assert len(payload["cases"]) == 20

    def test_fresh_checkout_zero_diffs(self):
        start = time.perf_counter()
        diffs = regenerate_golden()
        elapsed = time.perf_counter() - start
        assert diffs == []
        assert elapsed < 10.0

    def test_nonempty_and_attributable(self):
        cases = load_corpus()
        with_records = [c for c in cases if c.expected["n_records"] > 0]
        assert len(with_records) >= 15
        case = with_records[0]
        # full flat sample stored, not just summaries
        assert len(case.flats["bases"]) == case.expected["n_flats"]
        assert len(case.flats["anchors"]) == case.expected["n_flats"]

    def test_tampered_distance_flagged(self, tmp_path):
        payload = json.loads(DEFAULT_CORPUS.read_text())
        target = next(c for c in payload["cases"]
                      if c["expected"]["n_records"] > 0)
        target["expected"]["distance"][0] += 1e-6
        path = tmp_path / "tampered.json"
        path.write_text(json.dumps(payload))
        diffs = regenerate_golden(path)
        assert any("distance drift" in d for d in diffs)

    def test_tampered_seed_flagged(self, tmp_path):
        payload = json.loads(DEFAULT_CORPUS.read_text())
        target = next(c for c in payload["cases"]
                      if c["expected"]["n_flats"] > 0)
        target["seed"] += 1
        path = tmp_path / "tampered.json"
        path.write_text(json.dumps(payload))
        diffs = regenerate_golden(path)
        assert any(target["name"] in d for d in diffs)

    def test_case_round_trip(self):
        case = load_corpus()[0]
        assert GoldenCase.from_dict(case.to_dict()) == case
