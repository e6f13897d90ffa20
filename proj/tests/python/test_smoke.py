# Copyright 2026 The dpvfc Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import numpy as np
import pytest

import dpvfc


def test_gen_data_shapes():
    d = dpvfc.gen_mixed_gaussian(n=600, m=4, k=3, spread=0.0, seed=2)
    assert d["data"].shape == (600, 4)
    assert len(d["ids"]) == 600
    assert np.bincount(d["labels"]).tolist() == [200, 200, 200]


def test_loss_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(200, 3))
    c = rng.uniform(-1, 1, size=(4, 3))
    d2 = ((x[:, None, :] - c[None, :, :]) ** 2).sum(-1)
    assert dpvfc.normalized_loss(x, c) == pytest.approx(d2.min(1).mean())
    assert dpvfc.assign_nearest(x, c) == d2.argmin(1).tolist()


def test_run_report_is_deterministic():
    cfg = {"seed": 3, "data.n": 1000, "sketches": 128, "parties": 2}
    a = dpvfc.run(cfg)
    b = dpvfc.run(cfg)
    assert a["normalized_loss"] == b["normalized_loss"]
    assert np.array_equal(a["centers"], b["centers"])
    assert a["within_budget"]
    assert sum(a["grid"]["weights"]) == pytest.approx(a["nhat"])


def test_errors_carry_codes():
    with pytest.raises(dpvfc.DpvfcError) as info:
        dpvfc.run({"data.n": 100})
    assert info.value.code == "config-invalid"
    with pytest.raises(dpvfc.DpvfcError):
        dpvfc.run({"seed": 1, "no_such_key": 1})


def test_sketch_estimators_against_truth():
    n = 4000
    ids = [f"u{i}" for i in range(n)]
    rng = np.random.default_rng(1)
    la = rng.integers(0, 3, n).astype(np.uint32).tolist()
    lb = rng.integers(0, 3, n).astype(np.uint32).tolist()
    sa = dpvfc.sketch_partition(ids, la, 3, M=2048, key_seed=5, party=0)
    sb = dpvfc.sketch_partition(ids, lb, 3, M=2048, key_seed=5, party=1)
    assert len(sa) == 40 + 2048 * 3 * 8
    truth = dpvfc.truth_grid([la, lb], [3, 3])
    basic = dpvfc.basic_est(float(n), [sa, sb])
    two = dpvfc.two_phase_est(float(n), [sa, sb])
    assert two["converged"]
    np.testing.assert_allclose(two["weights"], basic["weights"], atol=1e-6 * n)
    assert dpvfc.rel_intersection_error(basic, truth) < 0.2
    counts = dpvfc.single_party_counts(sa)
    np.testing.assert_allclose(counts, np.bincount(la), rtol=0.1)


def test_budget_and_kprime():
    s = dpvfc.split_budget(1.0, 1e-5, 2)
    assert s["eps0"] + 2 * (s["eps1"] + s["eps2"]) == pytest.approx(1.0)
    assert 2 <= dpvfc.auto_k_prime(20000, 5, 2, s["eps2"], s["delta2"]) <= 16


def test_matrix_spec():
    out = dpvfc.run_matrix(
        "methods = CENTRAL, DPFMPS-2P\nepsilons = 2\nseeds = 1\n"
        "data.n = 500\nsketches = 64\n",
        workers=1,
    )
    assert not out["any_failed"]
    assert out["rows_csv"].count("\n") == 3
