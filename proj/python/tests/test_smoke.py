import numpy as np
import pytest

import ssdr


def two_classes(n=60, p=5, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, p))
    b = rng.normal(size=(n, p)) * 2.0 + 1.5
    return np.vstack([a, b]), np.array(["a"] * n + ["b"] * n)


def test_estimators_match_known_values():
    eye = np.eye(2)
    assert np.allclose(ssdr.estimate_precision(eye, 10, "haff")["omega"], 7 * eye, atol=1e-12)
    assert np.allclose(ssdr.estimate_precision(eye, 10, "wang")["omega"], 0.91125 * eye, atol=1e-9)
    out = ssdr.estimate_precision(np.diag([1.0, 2.0]), 10, "bodnar")
    assert np.allclose(out["omega"], np.diag([0.35, 0.85]), atol=1e-9)
    with pytest.raises(ssdr.SsdrError):
        ssdr.estimate_precision(eye, 10, "bodnar")


def test_mry_saturates_to_diagonal_inverse():
    s = np.array([[2.0, 0.3], [0.3, 1.0]])
    out = ssdr.estimate_precision(s, 50, "mry", **{"lambda": 0.5})
    assert np.allclose(out["omega"], np.diag([0.5, 1.0]), atol=1e-6)


def test_qda_and_full_rank_projection_agree():
    x, y = two_classes()
    full = ssdr.QDA().fit(x, y)
    reduced = ssdr.SSDRClassifier(r=x.shape[1]).fit(x, y)
    assert reduced.error_rate(x, y) == pytest.approx(full.error_rate(x, y), abs=1e-10)
    assert set(full.predict(x)) <= {"a", "b"}
    m = ssdr.mhat(x, y)
    assert m.shape == (5, 6)
    u, sv = ssdr.projection_basis(m, 2)
    assert np.allclose(u.T @ u, np.eye(2), atol=1e-12)
    assert np.all(np.diff(sv) <= 0)


def test_bad_option_names_the_key():
    with pytest.raises(ssdr.SsdrError, match="lamda"):
        ssdr.estimate_precision(np.eye(2), 10, "mry", lamda=0.1)


def test_simulate_is_deterministic():
    cfg = {"config_id": 1, "replicates": 2, "seed": 5, "training_sizes": ["p+1"],
           "pool_size": 200, "validation_size": 50,
           "pipelines": [{"estimator": "sample", "dimensions": [1, 10]}], "threads": 1}
    a, b = ssdr.simulate(cfg), ssdr.simulate(cfg)
    assert [r["rates"] for r in a["results"]] == [r["rates"] for r in b["results"]]
    qda = next(r for r in a["results"] if r["method"] == "QDA")
    sample = next(r for r in a["results"] if r["method"] == "SSDR_sample" and r["dimension"] == 10)
    assert qda["rates"] == pytest.approx(sample["rates"], abs=1e-10)


def test_cross_validate_round_trip(tmp_path):
    x, y = two_classes(n=40)
    path = tmp_path / "d.csv"
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i}" for i in range(x.shape[1])) + ",label\n")
        for row, lab in zip(x, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")
    xs, ys, names = ssdr.load_csv(path, "label")
    assert xs.shape == x.shape and names == ["a", "b"]
    rep = ssdr.cross_validate({"data": "d.csv", "label_column": "label", "repeats": 2,
                               "folds": 5, "seed": 3, "threads": 1,
                               "pipelines": [{"estimator": "sample"}]}, base_dir=tmp_path)
    assert rep["schema_version"] == 1
    assert {r["method"] for r in rep["results"]} == {"QDA", "SSDR_sample"}
