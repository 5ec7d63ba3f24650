"""End-to-end check of the Python bindings.

    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
    python python/smoke_test.py
"""

import math

import otsclust


def main():
    series, labels, clusters, lags = otsclust.scenario(1, 300, seed=7)
    assert len(series) == 20 and clusters == 4 and lags == [1, 2]
    assert isinstance(series[0], otsclust.Series) and len(series[0]) == 300

    dm = otsclust.distance_matrix(series, "d1", lags)
    total = dm.total
    assert len(total) == 20 and all(total[i][i] == 0.0 for i in range(20))
    assert all(abs(total[i][j] - total[j][i]) < 1e-15 for i in range(20) for j in range(20))

    p = otsclust.cluster(dm, 4, 1.2, seed=1, restarts=5)
    assert all(abs(sum(row) - 1.0) < 1e-9 for row in p.memberships)
    arif, jif = otsclust.agreement(labels, p.memberships)
    assert 0.5 < arif <= 1.0 and 0.0 < jif <= 1.0, (arif, jif)

    w = otsclust.cluster(otsclust.distance_matrix(series, "d2", lags), 4, 1.5, weighted=True)
    assert 0.0 <= w.beta <= 1.0

    report = otsclust.select_lags(series)
    assert report["lags"][0] == 1 and report["chosen"] >= 1

    rows = otsclust.features(series[:2], [1, 2])
    assert set(rows[0]) >= {"loc", "disp", "asym", "skew", "kappa"}

    points, stress, r2 = otsclust.mds_2d(total)
    assert len(points) == 20 and r2 >= 0.85 and math.isfinite(stress)

    crisp = otsclust.fuzzy_cmedoids([[0, 1, 9, 9], [1, 0, 9, 9], [9, 9, 0, 1], [9, 9, 1, 0]], 2, 1.5, restarts=3)
    hard = crisp.hard_labels()
    assert hard[0] == hard[1] != hard[2] == hard[3]

    s = otsclust.Series("x", 2, [0, 1, 2, 1])
    try:
        otsclust.Series("bad", 2, [0, 3])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range state accepted")
    try:
        otsclust.cluster(dm, 50, 1.2)
    except ValueError:
        pass
    else:
        raise AssertionError("too many clusters accepted")

    print(f"ok: {s!r}, {p!r}, ARIF {arif:.3f}, beta {w.beta:.3f}, R2 {r2:.3f}")


if __name__ == "__main__":
    main()
