import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rirkit.audio import AudioBuffer, RIR_LENGTH, RIR_RATE, Rir, convolve, load_wav, save_wav
from rirkit.augment import (
    AugmentSpec,
    MixRecord,
    augment_corpus,
    compute_alpha,
    looped_noise,
    mix,
    read_clean_manifest,
    read_manifest,
)
from rirkit.corpus import PoolEntry, RirPool

from conftest import noise_rir


def buf(samples, rate=RIR_RATE):
    return AudioBuffer(np.asarray(samples, dtype=np.float32), rate)


def delta_rir():
    s = np.zeros(RIR_LENGTH, dtype=np.float32)
    s[0] = 1.0
    return Rir(s)


class TestLoopedNoise:
    def test_modular_indexing(self):
        out = looped_noise(buf([1, 2, 3]), k=1, length=5)
        np.testing.assert_array_equal(out.samples, [2, 3, 1, 2, 3])

    def test_identity(self):
        out = looped_noise(buf([1, 2, 3]), k=0, length=3)
        np.testing.assert_array_equal(out.samples, [1, 2, 3])

    def test_zero_length(self):
        assert looped_noise(buf([1, 2, 3]), k=0, length=0) is None

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            looped_noise(buf([1, 2, 3]), k=3, length=1)
        with pytest.raises(ValueError):
            looped_noise(buf([1, 2, 3]), k=-1, length=1)

    @settings(max_examples=30, deadline=None)
    @given(k=st.integers(0, 9), length=st.integers(1, 40))
    def test_wraparound_property(self, k, length):
        noise = np.arange(10, dtype=np.float32) / 10.0 + 0.05
        out = looped_noise(buf(noise), k, length)
        for i in (0, length // 2, length - 1):
            assert out.samples[i] == noise[(k + i) % 10]


class TestComputeAlpha:
    def test_equal_power_unit_snr(self):
        a = buf([0.5, -0.5, 0.5, -0.5])
        b = buf([0.5, 0.5, -0.5, -0.5])
        assert compute_alpha(a, b, 1.0) == pytest.approx(1.0)

    def test_snr_100_gives_tenth(self):
        a = buf([0.5, -0.5])
        b = buf([0.5, 0.5])
        assert compute_alpha(a, b, 100.0) == pytest.approx(0.1)

    def test_measured_snr_matches_request(self):
        rng = np.random.default_rng(0)
        sig = buf(rng.uniform(-0.8, 0.8, 4000).astype(np.float32))
        noi = buf(rng.uniform(-0.3, 0.3, 4000).astype(np.float32))
        for snr in (10.0, 31.6, 100.0):
            alpha = compute_alpha(sig, noi, snr)
            p_s = np.mean(sig.samples.astype(np.float64) ** 2)
            p_n = np.mean((alpha * noi.samples.astype(np.float64)) ** 2)
            measured_db = 10 * np.log10(p_s / p_n)
            assert abs(measured_db - 10 * np.log10(snr)) < 0.01

    def test_zero_power_noise_rejected(self):
        with pytest.raises(ValueError):
            compute_alpha(buf([0.5]), buf([0.0]), 10.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_alpha(buf([0.5, 0.5]), buf([0.5]), 10.0)


class TestMix:
    def test_identity_when_delta_and_no_noise(self):
        rng = np.random.default_rng(1)
        clean = buf(rng.uniform(-0.5, 0.5, 2000).astype(np.float32))
        noise = buf(rng.uniform(-0.2, 0.2, 500).astype(np.float32))
        out, rec = mix(clean, delta_rir(), noise, snr=50.0, k=0, alpha_override=0.0)
        np.testing.assert_array_equal(out.samples, clean.samples)
        assert rec.alpha == 0.0 and rec.rescale == 1.0

    def test_alpha_zero_equals_truncated_convolution(self, toy_rirs):
        rng = np.random.default_rng(2)
        # quiet input so the reverberant peak stays below 1 (no rescale)
        clean = buf(rng.uniform(-0.01, 0.01, 3000).astype(np.float32))
        noise = buf(rng.uniform(-0.2, 0.2, 500).astype(np.float32))
        rir = toy_rirs[0]
        out, rec = mix(clean, rir, noise, snr=50.0, k=10, alpha_override=0.0)
        assert rec.rescale == 1.0
        expected = convolve(clean, rir).samples[:3000]
        np.testing.assert_allclose(out.samples, expected, atol=2e-7)

    def test_output_length_preserved(self, toy_rirs):
        rng = np.random.default_rng(3)
        clean = buf(rng.uniform(-0.5, 0.5, 5000).astype(np.float32))
        noise = buf(rng.uniform(-0.2, 0.2, 700).astype(np.float32))
        out, _ = mix(clean, toy_rirs[1], noise, snr=20.0, k=3)
        assert len(out) == 5000

    def test_post_hoc_snr_within_tolerance(self, toy_rirs):
        rng = np.random.default_rng(4)
        clean = buf(rng.uniform(-0.5, 0.5, 4000).astype(np.float32))
        noise = buf(rng.uniform(-0.2, 0.2, 900).astype(np.float32))
        snr, k = 42.0, 123
        out, rec = mix(clean, toy_rirs[2], noise, snr=snr, k=k)
        # recompute both components independently from the record
        rev = convolve(clean, toy_rirs[2]).samples[:4000].astype(np.float64)
        seg = looped_noise(noise, rec.k, 4000).samples.astype(np.float64)
        measured = 10 * np.log10(np.mean(rev**2) / np.mean((rec.alpha * seg) ** 2))
        assert abs(measured - 10 * np.log10(snr)) < 0.05

    def test_clipping_rescale_recorded(self):
        clean = buf(np.full(1000, 0.9, dtype=np.float32))
        noise = buf(np.full(100, 0.9, dtype=np.float32))
        out, rec = mix(clean, delta_rir(), noise, snr=1.0, k=0)
        assert rec.rescale < 1.0
        assert np.max(np.abs(out.samples)) <= 1.0 + 1e-6


def make_corpus(tmp_path, n_utts=4, n_rirs=2, n_noise=2, rate=16000):
    rng = np.random.default_rng(99)
    clean_rows = []
    for i in range(n_utts):
        path = tmp_path / f"clean_{i}.wav"
        dur = 2000 + 400 * i
        save_wav(buf(rng.uniform(-0.5, 0.5, dur).astype(np.float32), rate), path)
        clean_rows.append((f"utt{i:02d}", str(path)))
    rir_entries = []
    for i in range(n_rirs):
        path = tmp_path / f"rir_{i}.wav"
        save_wav(noise_rir(0.3 + 0.1 * i, rng).as_buffer(), path)
        rir_entries.append(PoolEntry(f"rir{i}", "GAN.C", str(path)))
    noise_entries = []
    for i in range(n_noise):
        path = tmp_path / f"noise_{i}.wav"
        save_wav(buf(rng.uniform(-0.3, 0.3, 3000).astype(np.float32), rate), path)
        noise_entries.append(PoolEntry(f"noise{i}", "OTHER", str(path)))
    return clean_rows, RirPool(tuple(rir_entries)), RirPool(tuple(noise_entries))


class TestAugmentCorpus:
    def test_end_to_end(self, tmp_path):
        clean, rirs, noises = make_corpus(tmp_path)
        spec = AugmentSpec(rng_seed=5)
        records, failures = augment_corpus(clean, rirs, noises, spec,
                                           tmp_path / "out")
        assert failures == []
        assert len(records) == len(clean)  # 1:1 mapping
        manifest = read_manifest(tmp_path / "out" / "manifest.jsonl")
        assert [r.utt_id for r in manifest] == sorted(r.utt_id for r in records)
        for rec in records:
            assert 10.0 <= rec.snr <= 100.0
            assert 0 <= rec.k < 3000
            out = load_wav(rec.out_path)
            clean_len = len(load_wav(rec.clean_path))
            assert len(out) == clean_len  # duration preserved

    def test_deterministic_across_runs_and_threads(self, tmp_path):
        clean, rirs, noises = make_corpus(tmp_path)
        spec = AugmentSpec(rng_seed=42)
        rec1, _ = augment_corpus(clean, rirs, noises, spec, tmp_path / "a", threads=1)
        rec2, _ = augment_corpus(clean, rirs, noises, spec, tmp_path / "b", threads=3)
        assert [(r.utt_id, r.rir_id, r.noise_id, r.snr, r.k, r.alpha) for r in rec1] \
            == [(r.utt_id, r.rir_id, r.noise_id, r.snr, r.k, r.alpha) for r in rec2]
        for a, b in zip(rec1, rec2):
            np.testing.assert_array_equal(load_wav(a.out_path).samples,
                                          load_wav(b.out_path).samples)

    def test_order_independent(self, tmp_path):
        clean, rirs, noises = make_corpus(tmp_path)
        spec = AugmentSpec(rng_seed=42)
        rec1, _ = augment_corpus(clean, rirs, noises, spec, tmp_path / "c")
        rec2, _ = augment_corpus(list(reversed(clean)), rirs, noises, spec,
                                 tmp_path / "d")
        assert [(r.utt_id, r.snr, r.k) for r in rec1] == \
               [(r.utt_id, r.snr, r.k) for r in rec2]

    def test_alpha_reconstruction_from_record(self, tmp_path):
        clean, rirs, noises = make_corpus(tmp_path)
        spec = AugmentSpec(rng_seed=17)
        records, _ = augment_corpus(clean, rirs, noises, spec, tmp_path / "e")
        from rirkit.audio import to_rir
        rir_by_id = {e.id: to_rir(load_wav(e.path)) for e in rirs.entries}
        noise_by_id = {e.id: load_wav(e.path) for e in noises.entries}
        for rec in records:
            c = load_wav(rec.clean_path)
            rev = convolve(c, rir_by_id[rec.rir_id])
            rev = AudioBuffer(rev.samples[: len(c)], c.sample_rate)
            seg = looped_noise(noise_by_id[rec.noise_id], rec.k, len(c))
            alpha = compute_alpha(rev, seg, rec.snr)
            assert abs(alpha - rec.alpha) / rec.alpha < 1e-6

    def test_failures_logged_not_fatal(self, tmp_path):
        clean, rirs, noises = make_corpus(tmp_path)
        clean.append(("uttXX", str(tmp_path / "missing.wav")))
        records, failures = augment_corpus(clean, rirs, noises,
                                           AugmentSpec(rng_seed=1),
                                           tmp_path / "f")
        assert len(records) == len(clean) - 1
        assert len(failures) == 1 and failures[0][0] == "uttXX"

    def test_snr_db_interpretation(self, tmp_path):
        clean, rirs, noises = make_corpus(tmp_path, n_utts=1)
        spec = AugmentSpec(snr_range=(20.0, 20.0), rng_seed=3, snr_in_db=True)
        records, _ = augment_corpus(clean, rirs, noises, spec, tmp_path / "g")
        rec = records[0]
        assert rec.snr == pytest.approx(20.0)
        # stored alpha corresponds to the linear ratio 10^(20/10) = 100
        c = load_wav(rec.clean_path)
        from rirkit.audio import to_rir
        rev = convolve(c, to_rir(load_wav(dict((e.id, e.path) for e in rirs.entries)[rec.rir_id])))
        rev = AudioBuffer(rev.samples[: len(c)], c.sample_rate)
        seg = looped_noise(load_wav(dict((e.id, e.path) for e in noises.entries)[rec.noise_id]),
                           rec.k, len(c))
        assert abs(compute_alpha(rev, seg, 100.0) - rec.alpha) / rec.alpha < 1e-6


class TestManifests:
    def test_clean_manifest_round_trip(self, tmp_path):
        p = tmp_path / "clean.csv"
        p.write_text("utt_id,path\n# a comment\nu1,/x/a.wav\nu2,/x/b.wav\n")
        rows = read_clean_manifest(p)
        assert rows == [("u1", "/x/a.wav"), ("u2", "/x/b.wav")]

    def test_mix_record_json_round_trip(self):
        rec = MixRecord("u1", "/a.wav", "r1", "n1", 42.0, 17, 0.25, 1.0, "/o.wav")
        back = MixRecord.from_json(rec.to_json())
        assert back == rec
        keys = set(json.loads(rec.to_json()).keys())
        assert keys == {"utt_id", "clean_path", "rir_id", "noise_id", "snr",
                        "k", "alpha", "rescale", "out_path"}


def test_spec_validation():
    with pytest.raises(ValueError):
        AugmentSpec(snr_range=(0.0, 10.0))
    with pytest.raises(ValueError):
        AugmentSpec(snr_range=(5.0, 1.0))
