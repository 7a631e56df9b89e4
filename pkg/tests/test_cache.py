import json

import numpy as np

from hypercube_clusters import cache
from hypercube_clusters.exact import neighborhood_histogram


def test_miss_then_hit(cache_dir):
    cache.provenance.clear()
    h = cache.load_or_build_histogram(3)
    assert cache.provenance["hist_d3.json"] == "miss"
    assert (cache_dir / "v1" / "hist_d3.json").exists()
    cache.provenance.clear()
    h2 = cache.load_or_build_histogram(3)
    assert cache.provenance["hist_d3.json"] == "hit"
    assert np.array_equal(h, h2)


def test_corrupt_file_is_recomputed(cache_dir):
    cache.load_or_build_histogram(4)
    path = cache_dir / "v1" / "hist_d4.json"
    obj = json.loads(path.read_text())
    obj["payload"][1][4] += 1  # tamper without fixing the digest
    path.write_text(json.dumps(obj))
    cache.provenance.clear()
    h = cache.load_or_build_histogram(4)
    assert cache.provenance["hist_d4.json"] == "recomputed-corrupt"
    assert np.array_equal(h, neighborhood_histogram(4))
    # the rewritten file verifies again
    cache.provenance.clear()
    cache.load_or_build_histogram(4)
    assert cache.provenance["hist_d4.json"] == "hit"


def test_garbage_file(cache_dir):
    (cache_dir / "v1").mkdir(parents=True)
    (cache_dir / "v1" / "lk_k2.json").write_text("{not json")
    cache.provenance.clear()
    v = cache.load_or_build_lk(2)
    assert v.k == 2 and cache.provenance["lk_k2.json"] == "recomputed-corrupt"


def test_disabled(monkeypatch, tmp_path):
    monkeypatch.setenv(cache.ENV_VAR, "")
    assert cache.cache_root() is None
    cache.load_or_build_histogram(2)
    assert not any(tmp_path.iterdir())


def test_set_lists_round_trip(cache_dir):
    a = cache.load_or_build_set_lists(3, 4)
    b = cache.load_or_build_set_lists(3, 4)
    assert {m: set(x.entries) for m, x in a.items()} == {m: set(x.entries) for m, x in b.items()}
    assert b[3].exact(3) == a[3].exact(3)
