"""Smoke test for the zerosum_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/zerosum_py-*.whl
"""

import random

import zerosum_py


def naive_has_zero_sum(g, pts):
    sums = set()
    for x in pts:
        new = {tuple((a + b) % g.p for a, b in zip(s, x)) for s in sums}
        new.add(tuple(c % g.p for c in x))
        sums |= new
    return tuple([0] * g.d) in sums


def main():
    g = zerosum_py.Group(5, 1)
    assert g.olson()["olson"] == 3
    assert g.weighted_zero_sum([[1], [2]], [5, 5], 1) == [1, 2]

    g = zerosum_py.Group(3, 2)
    pts = [[1, 0], [0, 1], [1, 1], [2, 1], [1, 2]]
    cert = g.zero_sum_subset(pts)
    assert cert is not None and g.verify_certificate(pts, cert)
    assert g.zero_sum_subset([[1, 0], [0, 1]]) is None

    rng = random.Random(1)
    g = zerosum_py.Group(7, 2)
    for _ in range(50):
        pts = rng.sample([[a, b] for a in range(7) for b in range(7) if (a, b) != (0, 0)], rng.randint(1, 6))
        got = g.zero_sum_subset(pts)
        assert (got is not None) == naive_has_zero_sum(g, pts)

    g = zerosum_py.Group(31, 2)
    cloud = rng.sample([[a, b] for a in range(31) for b in range(31) if (a, b) != (0, 0)], 450)
    run = g.find_zero_sum(cloud, "1/2", 11)
    assert all(c["pass"] for c in run["checks"]), run["checks"]
    if run["certificate"] is not None:
        assert g.verify_certificate(cloud, run["certificate"]["elements"])
        print("pipeline: certificate of size", len(run["certificate"]["elements"]))
    else:
        print("pipeline: stage failure", run["failure"]["number"], run["failure"]["inequality"])

    small = g.find_zero_sum(cloud[:10])
    assert small["failure"]["number"] == 3
    print("ok")


if __name__ == "__main__":
    main()
