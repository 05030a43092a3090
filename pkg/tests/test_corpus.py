import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rirkit.audio import save_wav
from rirkit.corpus import (
    PoolEntry,
    RirPool,
    SplitSpec,
    compose_pool,
    read_pool_csv,
    split,
    validate_pool,
    write_pool_csv,
)

from conftest import noise_rir


def fake_pool(n, source="BUT", prefix="r"):
    return RirPool(tuple(
        PoolEntry(f"{prefix}{i:04d}", source, f"/data/{prefix}{i:04d}.wav")
        for i in range(n)
    ))


class TestSplit:
    def test_paper_scale_split(self):
        pool = fake_pool(1209)
        train, dev, test = split(pool, SplitSpec((773, 194, 242), rng_seed=1))
        assert (len(train), len(dev), len(test)) == (773, 194, 242)
        ids = [set(p.ids()) for p in (train, dev, test)]
        assert ids[0] | ids[1] | ids[2] == set(pool.ids())
        assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])

    def test_degenerate_split(self):
        pool = fake_pool(3)
        train, dev, test = split(pool, SplitSpec((3, 0, 0), rng_seed=0))
        assert set(train.ids()) == set(pool.ids())
        assert len(dev) == 0 and len(test) == 0

    def test_seed_determinism_and_sensitivity(self):
        pool = fake_pool(20)
        a = split(pool, SplitSpec((10, 5, 5), rng_seed=4))
        b = split(pool, SplitSpec((10, 5, 5), rng_seed=4))
        assert [p.ids() for p in a] == [p.ids() for p in b]
        c = split(pool, SplitSpec((10, 5, 5), rng_seed=5))
        assert [p.ids() for p in a] != [p.ids() for p in c]

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            split(fake_pool(10), SplitSpec((5, 4, 2), rng_seed=0))

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 60), seed=st.integers(0, 2**16), cut=st.data())
    def test_disjoint_exhaustive_property(self, n, seed, cut):
        a = cut.draw(st.integers(0, n))
        b = cut.draw(st.integers(0, n - a))
        pool = fake_pool(n)
        parts = split(pool, SplitSpec((a, b, n - a - b), rng_seed=seed))
        assert [len(p) for p in parts] == [a, b, n - a - b]
        combined = [i for p in parts for i in p.ids()]
        assert len(combined) == n and set(combined) == set(pool.ids())


class TestCompose:
    def test_equal_mixture(self):
        ganc = fake_pool(773, source="GAN.C", prefix="g")
        gas = fake_pool(773, source="GAS", prefix="s")
        out = compose_pool([(ganc, 773), (gas, 773)], rng_seed=0)
        assert len(out) == 1546
        assert out.source_counts() == {"GAN.C": 773, "GAS": 773}

    def test_identity_on_full_single_pool(self):
        pool = fake_pool(10)
        out = compose_pool([(pool, 10)], rng_seed=0)
        assert sorted(out.ids()) == sorted(pool.ids())

    def test_deterministic_subsample(self):
        a = fake_pool(5, prefix="a")
        b = fake_pool(5, source="GAS", prefix="b")
        out1 = compose_pool([(a, 2), (b, 1)], rng_seed=9)
        out2 = compose_pool([(a, 2), (b, 1)], rng_seed=9)
        assert out1.ids() == out2.ids()
        assert len(out1) == 3

    def test_count_exceeds_pool(self):
        with pytest.raises(ValueError):
            compose_pool([(fake_pool(3), 4)], rng_seed=0)

    @settings(max_examples=20, deadline=None)
    @given(na=st.integers(1, 30), nb=st.integers(1, 30), seed=st.integers(0, 999),
           data=st.data())
    def test_size_and_tag_accounting(self, na, nb, seed, data):
        ka = data.draw(st.integers(0, na))
        kb = data.draw(st.integers(0, nb))
        a = fake_pool(na, source="BUT", prefix="a")
        b = fake_pool(nb, source="AIR", prefix="b")
        out = compose_pool([(a, ka), (b, kb)], rng_seed=seed)
        assert len(out) == ka + kb
        counts = out.source_counts()
        assert counts.get("BUT", 0) == ka and counts.get("AIR", 0) == kb


class TestValidate:
    def test_healthy_pool(self, tmp_path):
        rng = np.random.default_rng(0)
        entries = []
        for i in range(3):
            p = tmp_path / f"air_{i}.wav"
            save_wav(noise_rir(0.4, rng).as_buffer(), p)
            entries.append(PoolEntry(f"air{i}", "AIR", str(p)))
        report = validate_pool(RirPool(tuple(entries)))
        assert report.ok
        assert report.source_counts == {"AIR": 3}

    def test_missing_file_flagged(self, tmp_path):
        pool = RirPool((PoolEntry("x", "BUT", str(tmp_path / "gone.wav")),))
        report = validate_pool(pool)
        assert not report.ok
        assert "missing" in report.findings[0][1]

    def test_duplicate_id_flagged(self, tmp_path):
        rng = np.random.default_rng(1)
        p = tmp_path / "a.wav"
        save_wav(noise_rir(0.4, rng).as_buffer(), p)
        pool = RirPool((PoolEntry("dup", "BUT", str(p)),
                        PoolEntry("dup", "BUT", str(p))))
        report = validate_pool(pool)
        assert any("duplicate" in f[1] for f in report.findings)

    def test_unloadable_flagged(self, tmp_path):
        p = tmp_path / "junk.wav"
        p.write_bytes(b"not audio")
        report = validate_pool(RirPool((PoolEntry("j", "OTHER", str(p)),)))
        assert any("loadable" in f[1] for f in report.findings)


class TestPoolCsv:
    def test_round_trip_with_provenance(self, tmp_path):
        pool = fake_pool(4, source="GAS")
        p = tmp_path / "pool.csv"
        write_pool_csv(pool, p, provenance={"seed": 7, "sizes": "2,1,1"})
        text = p.read_text()
        assert text.startswith("# seed=7\n# sizes=2,1,1\n")
        back = read_pool_csv(p)
        assert back.ids() == pool.ids()
        assert [e.source for e in back.entries] == ["GAS"] * 4

    def test_rejects_malformed_rows(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("id,source,path\nonly_two,fields\n")
        with pytest.raises(ValueError):
            read_pool_csv(p)

    def test_stratification_key_round_trip(self, tmp_path):
        pool = RirPool((PoolEntry("a", "BUT", "/x/a.wav", strat_key="room1"),
                        PoolEntry("b", "BUT", "/x/b.wav", strat_key="room2")))
        p = tmp_path / "keyed.csv"
        write_pool_csv(pool, p)
        back = read_pool_csv(p)
        assert [e.strat_key for e in back.entries] == ["room1", "room2"]
