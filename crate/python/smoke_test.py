"""Smoke test for the serwalk_py extension.

Build and run:

    cargo build --release -p serwalk-py --features extension-module
    cp target/release/libserwalk_py.so python/serwalk_py.so
    python3 python/smoke_test.py
"""

import json
import math

import serwalk_py as sw


def main():
    w = sw.gen_two_lines(3)
    assert w.is_exact and w.palindromic
    assert w.points()[1:5] == [[0.5, 0.0], [1.0, 0.0], [0.5, 0.0], [0.0, 0.0]]
    assert w.to_csv().splitlines()[0] == "index,phase,coord_0,coord_1"

    est = sw.gen_two_lines(6).estimate(window=0.3, resolution=0.1)
    assert len(sw.gap_components(est.points, 0.9)) == 2
    assert len(sw.gap_components(est.points, 1.1)) == 1
    assert est.dichotomy(0.5) == "all-components-escape"

    c0 = sw.gen_c0_two_point(5)
    assert c0.entries()[1:3] == [{2: 1.0}, {1: 1.0, 2: 1.0}]
    assert c0.estimate(resolution=0.2).dichotomy(0.5) == "violation"
    again = sw.read_trace(c0.to_jsonl())
    assert len(again) == len(c0) and again.is_sparse

    verdict, point = sw.gen_c0_singleton_divergent(6).singleton_check(0.2)
    assert verdict == "diverges-with-singleton" and max(point, default=0.0) < 0.1

    assert sw.check_vector_family(2) == (True, 24, 2.0)
    assert sw.find_balanced_permutation(sw.no_rp_block(1), 1.0) is None
    assert sw.find_balanced_permutation([[1.0], [-1.0]], 1.5) == [1, 2]

    harmonic = sw.SeriesPrefix.alternating_harmonic(2000)
    assert harmonic.certify_rp(0.1, budget=200) == (40, 0.05)

    series = sw.SeriesPrefix.full_sum_range(2, 100_000, 1.0)
    tau, walk, report = series.rearrange([[0.2, -0.1]], stages=6)
    assert len(set(tau)) == len(tau)
    assert walk.singleton_check(2.0 ** -6)[0] == "converges-to"
    assert len(json.loads(report)["stages"]) == 6

    circle = [[math.cos(t), math.sin(t)] for t in (2 * math.pi * i / 300 for i in range(300))]
    chain = sw.build_chainable_walk(circle, 4)
    pts = chain.estimate(window=1.0).points
    assert pts and all(abs(math.hypot(x, y) - 1.0) < 0.1 for x, y in pts)
    assert sw.hausdorff_distance([[1.0, 0.0]], [[0.0, 0.0]]) == 1.0

    try:
        sw.gen_two_lines(0)
    except ValueError as e:
        assert "phases" in str(e)
    else:
        raise AssertionError("expected ValueError")
    print("serwalk_py smoke test passed")


if __name__ == "__main__":
    main()
