"""Frozen regression corpus: seeded flat samples with their expected pair
statistics.

Each golden case stores the full flat sample (so geometry regressions are
attributable to a specific pair), the qualifying records at full float
precision, and the sampling configuration.  Regeneration re-samples from
the stored seed and recomputes the records both from the regenerated and
from the stored flats; any drift beyond the documented tolerances is
reported as a diff.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .closedform import ModelParams, Window
from .process import FlatProcessSample, SampleRegion, sample_process
from .proximity import distance_point_process

DISTANCE_TOL = 1e-9

DEFAULT_CORPUS = Path(__file__).resolve().parent / "corpus" / "golden_cases.json"


@dataclass(frozen=True)
class GoldenCase:
    """One frozen scenario: sampling config, seed, the sampled flats and
    the expected qualifying records."""

    name: str
    d: int
    k: int
    t: float
    region_radius: float
    window: dict
    u_max: float
    seed: int
    flats: dict
    expected: dict

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_dict(self):
        return {
            "name": self.name, "d": self.d, "k": self.k, "t": self.t,
            "region_radius": self.region_radius, "window": self.window,
            "u_max": self.u_max, "seed": self.seed, "flats": self.flats,
            "expected": self.expected,
        }

    def build_window(self):
        if self.window["shape"] == "ball":
            return Window.ball(self.window["radius"],
                               scale=self.window.get("scale", 1.0))
        return Window.box(self.window["halfwidths"],
                          scale=self.window.get("scale", 1.0))

    def params(self):
        return ModelParams(d=self.d, k=self.k, t=self.t, delta=self.u_max)

    def resample(self):
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        return sample_process(SampleRegion(self.region_radius), self.params(), rng)

    def stored_sample(self):
        bases = np.array(self.flats["bases"], dtype=float)
        anchors = np.array(self.flats["anchors"], dtype=float)
        if bases.size == 0:
            bases = bases.reshape(0, self.d, self.k)
            anchors = anchors.reshape(0, self.d)
        return FlatProcessSample(bases, anchors,
                                 SampleRegion(self.region_radius), self.params())


def _records_payload(sample, window, u_max):
    ordered = distance_point_process(sample, window, u_max)
    return {
        "n_flats": len(sample),
        "n_records": len(ordered),
        "first_index": ordered.first_index.tolist(),
        "second_index": ordered.second_index.tolist(),
        "distance": [float(v) for v in ordered.distance],
        "midpoint": [[float(c) for c in row] for row in ordered.midpoint],
        "rejected_parallel_pairs": sample.rejected_parallel_pairs,
    }


def make_case(name, d, k, t, region_radius, window, u_max, seed) -> GoldenCase:
    params = ModelParams(d=d, k=k, t=t, delta=u_max)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sample = sample_process(SampleRegion(region_radius), params, rng)
    expected = _records_payload(sample, window, u_max)
    window_dict = {"shape": window.shape, "scale": window.scale}
    if window.shape == "ball":
        window_dict["radius"] = window.radius
    else:
        window_dict["halfwidths"] = list(window.halfwidths)
    return GoldenCase(
        name=name, d=d, k=k, t=t, region_radius=region_radius,
        window=window_dict, u_max=u_max, seed=seed,
        flats={"bases": sample.bases.tolist(),
               "anchors": sample.anchors.tolist()},
        expected=expected)


def default_cases():
    """The 20 standing cases: a spread of dimensions, windows and seeds."""
    specs = []
    for idx in range(8):
        specs.append((f"d3k1_ball_{idx}", 3, 1, 1.0, 2.0, Window.ball(1.5),
                      1.0, 1000 + idx))
    for idx in range(4):
        specs.append((f"d3k1_box_{idx}", 3, 1, 1.5, 3.0,
                      Window.box((1.0, 1.0, 2.0)), 0.8, 2000 + idx))
    for idx in range(4):
        specs.append((f"d5k2_ball_{idx}", 5, 2, 1.0, 1.6, Window.ball(1.2),
                      0.7, 3000 + idx))
    for idx in range(2):
        specs.append((f"d5k1_ball_{idx}", 5, 1, 2.0, 1.4, Window.ball(1.0),
                      0.8, 4000 + idx))
    for idx in range(2):
        specs.append((f"d7k3_ball_{idx}", 7, 3, 1.0, 1.4, Window.ball(1.0),
                      0.6, 5000 + idx))
    return [make_case(*spec) for spec in specs]


def build_corpus(path=DEFAULT_CORPUS):
    import time

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cases = default_cases()
    payload = {"version": 1, "distance_tol": DISTANCE_TOL,
               "cases": [case.to_dict() for case in cases]}
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    start = time.perf_counter()
    diffs = regenerate_golden(path)
    if diffs:
        raise RuntimeError(f"fresh corpus does not regenerate cleanly: {diffs}")
    payload["regeneration_seconds"] = round(time.perf_counter() - start, 3)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return cases


def load_corpus(path=DEFAULT_CORPUS):
    data = json.loads(Path(path).read_text())
    return [GoldenCase.from_dict(entry) for entry in data["cases"]]


def _compare_records(case, sample, diffs, label):
    window = case.build_window()
    got = _records_payload(sample, window, case.u_max)
    exp = case.expected
    if got["n_records"] != exp["n_records"]:
        diffs.append(f"{case.name}[{label}]: record count {got['n_records']}"
                     f" != {exp['n_records']}")
        return
    for key in ("first_index", "second_index"):
        if got[key] != exp[key]:
            diffs.append(f"{case.name}[{label}]: pair indices differ")
            return
    dist_err = max((abs(a - b) for a, b in zip(got["distance"], exp["distance"])),
                   default=0.0)
    if dist_err > DISTANCE_TOL:
        diffs.append(f"{case.name}[{label}]: distance drift {dist_err:.3g}")
    mid_err = max((abs(a - b) for ga, ea in zip(got["midpoint"], exp["midpoint"])
                   for a, b in zip(ga, ea)), default=0.0)
    if mid_err > DISTANCE_TOL:
        diffs.append(f"{case.name}[{label}]: midpoint drift {mid_err:.3g}")
    if got["rejected_parallel_pairs"] != exp["rejected_parallel_pairs"]:
        diffs.append(f"{case.name}[{label}]: rejection tally differs")


def regenerate_golden(path=DEFAULT_CORPUS):
    """Re-run every golden case; returns the list of diffs (empty on an
    unchanged tree)."""
    diffs = []
    for case in load_corpus(path):
        resampled = case.resample()
        stored = case.stored_sample()
        if len(resampled) != len(stored):
            diffs.append(f"{case.name}[sample]: flat count "
                         f"{len(resampled)} != {len(stored)}")
            continue
        if len(stored):
            drift = max(
                float(np.max(np.abs(resampled.bases - stored.bases))),
                float(np.max(np.abs(resampled.anchors - stored.anchors))))
            if drift > 1e-12:
                diffs.append(f"{case.name}[sample]: flat drift {drift:.3g}")
        _compare_records(case, stored, diffs, "stored")
        _compare_records(case, resampled, diffs, "resampled")
    return diffs


if __name__ == "__main__":
    import sys

    if len(sys.argv) > 1 and sys.argv[1] == "build":
        built = build_corpus()
        print(f"wrote {len(built)} cases to {DEFAULT_CORPUS}")
    else:
        found = regenerate_golden()
        for line in found:
            print(line)
        print(f"{len(found)} diffs")
        sys.exit(1 if found else 0)
