"""Far-field speech synthesis: convolve clean speech with an RIR and add a
looped, offset, SNR-scaled noise segment.

The reverberant signal is the clean/RIR convolution truncated back to the
clean length, so corpus duration is preserved. The noise weight alpha is
sqrt(P_signal / (snr * P_noise)) for a requested linear power-ratio snr
(a dB interpretation is available via AugmentSpec.snr_in_db). If the mix
would clip, the whole waveform is rescaled and the factor recorded, leaving
the internal SNR untouched.

Each utterance derives its own rng from (global seed, utterance id), so
results do not depend on processing order or worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio import AudioBuffer, RIR_RATE, Rir, convolve, load_wav, resample, save_wav
from .corpus import RirPool

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentSpec:
    snr_range: tuple[float, float] = (10.0, 100.0)
    rng_seed: int = 0
    sample_rate: int = RIR_RATE
    snr_in_db: bool = False

    def __post_init__(self):
        lo, hi = self.snr_range
        if not (0 < lo <= hi) and not self.snr_in_db:
            raise ValueError("snr_range must satisfy 0 < lo <= hi")
        if self.snr_in_db and lo > hi:
            raise ValueError("snr_range must satisfy lo <= hi")


@dataclass(frozen=True)
class MixRecord:
    utt_id: str
    clean_path: str
    rir_id: str
    noise_id: str
    snr: float  # linear power ratio
    k: int  # noise start offset, samples
    alpha: float
    rescale: float
    out_path: str

    def to_json(self) -> str:
        return json.dumps(
            {"utt_id": self.utt_id, "clean_path": self.clean_path,
             "rir_id": self.rir_id, "noise_id": self.noise_id, "snr": self.snr,
             "k": self.k, "alpha": self.alpha, "rescale": self.rescale,
             "out_path": self.out_path}
        )

    @classmethod
    def from_json(cls, line: str) -> "MixRecord":
        d = json.loads(line)
        return cls(d["utt_id"], d["clean_path"], d["rir_id"], d["noise_id"],
                   float(d["snr"]), int(d["k"]), float(d["alpha"]),
                   float(d["rescale"]), d["out_path"])


def looped_noise(noise: AudioBuffer, k: int, length: int) -> AudioBuffer | None:
    """Circular slice: output[i] = noise[(k + i) mod len(noise)].

    length 0 yields None (AudioBuffer cannot be empty)."""
    n = len(noise)
    if not 0 <= k < n:
        raise ValueError(f"offset k={k} out of range [0, {n})")
    if length == 0:
        return None
    idx = (k + np.arange(length)) % n
    return AudioBuffer(noise.samples[idx], noise.sample_rate)


def compute_alpha(reverberant: AudioBuffer, noise_segment: AudioBuffer,
                  snr: float) -> float:
    """Noise weight for a requested linear power-ratio SNR:
    alpha = sqrt(P_signal / (snr * P_noise))."""
    if snr <= 0:
        raise ValueError("snr must be a positive linear power ratio")
    if len(reverberant) != len(noise_segment):
        raise ValueError("reverberant and noise segments must have equal length")
    p_s = float(np.mean(np.square(reverberant.samples, dtype=np.float64)))
    p_n = float(np.mean(np.square(noise_segment.samples, dtype=np.float64)))
    if p_n <= 0.0:
        raise ValueError("noise segment has zero power")
    return float(np.sqrt(p_s / (snr * p_n)))


def mix(clean: AudioBuffer, rir: Rir | AudioBuffer, noise: AudioBuffer,
        snr: float, k: int, alpha_override: float | None = None
        ) -> tuple[AudioBuffer, MixRecord]:
    """One far-field utterance: reverberate, then add scaled looped noise.

    All inputs must already be at a common sample rate. Returns the mixed
    buffer and a MixRecord whose id/path fields are left blank for the
    caller to fill in.
    """
    rev = convolve(clean, rir)
    rev_s = rev.samples[: len(clean)].astype(np.float64)
    rev_buf = AudioBuffer(rev_s.astype(np.float32), clean.sample_rate)
    seg = looped_noise(noise, k, len(clean))
    if alpha_override is not None:
        alpha = float(alpha_override)
    else:
        alpha = compute_alpha(rev_buf, seg, snr)
    y = rev_s + alpha * seg.samples.astype(np.float64)
    peak = float(np.max(np.abs(y)))
    rescale = 1.0 / peak if peak > 1.0 else 1.0
    record = MixRecord("", "", "", "", float(snr), int(k), alpha, rescale, "")
    return AudioBuffer((y * rescale).astype(np.float32), clean.sample_rate), record


def read_clean_manifest(path: str | Path) -> list[tuple[str, str]]:
    """CSV `utt_id,path` (header optional, # comments skipped)."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        utt_id, _, p = line.partition(",")
        if utt_id == "utt_id" and p == "path":
            continue
        if not p:
            raise ValueError(f"{path}: bad manifest line {line!r}")
        rows.append((utt_id, p))
    return rows


def write_manifest(records: Sequence[MixRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for rec in records:
            f.write(rec.to_json() + "\n")


def read_manifest(path: str | Path) -> list[MixRecord]:
    return [MixRecord.from_json(line)
            for line in Path(path).read_text().splitlines() if line.strip()]


def _utt_rng(global_seed: int, utt_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{global_seed}:{utt_id}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _load_at_rate(path: str, rate: int) -> AudioBuffer:
    buf = load_wav(path)
    return resample(buf, rate) if buf.sample_rate != rate else buf


def augment_corpus(
    clean_manifest: Sequence[tuple[str, str]],
    rir_pool: RirPool,
    noise_pool: RirPool,
    spec: AugmentSpec,
    out_dir: str | Path,
    threads: int = 1,
) -> tuple[list[MixRecord], list[tuple[str, str]]]:
    """Mix every clean utterance with a random RIR, noise, SNR, and offset.

    Per-utterance failures are logged and collected rather than aborting the
    whole job. Returns (records sorted by utt_id, failures as (utt_id, error)).
    Also writes the output WAVs and manifest.jsonl into out_dir.
    """
    from .audio import to_rir

    if len(rir_pool.entries) == 0 or len(noise_pool.entries) == 0:
        raise ValueError("rir and noise pools must be non-empty")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)

    rir_cache: dict[str, Rir] = {}
    noise_cache: dict[str, AudioBuffer] = {}

    def one(item: tuple[str, str]) -> MixRecord:
        utt_id, clean_path = item
        rng = _utt_rng(spec.rng_seed, utt_id)
        rir_entry = rir_pool.entries[int(rng.integers(len(rir_pool.entries)))]
        noise_entry = noise_pool.entries[int(rng.integers(len(noise_pool.entries)))]
        lo, hi = spec.snr_range
        snr = float(rng.uniform(lo, hi))
        linear_snr = 10.0 ** (snr / 10.0) if spec.snr_in_db else snr

        clean = _load_at_rate(clean_path, spec.sample_rate)
        if rir_entry.id not in rir_cache:
            rir_cache[rir_entry.id] = to_rir(load_wav(rir_entry.path))
        rir = rir_cache[rir_entry.id]
        if noise_entry.id not in noise_cache:
            noise_cache[noise_entry.id] = _load_at_rate(noise_entry.path, spec.sample_rate)
        noise = noise_cache[noise_entry.id]
        k = int(rng.integers(len(noise)))

        mixed, rec = mix(clean, rir, noise, linear_snr, k)
        out_file = out_path / f"{utt_id}.wav"
        save_wav(mixed, out_file)
        return replace(rec, utt_id=utt_id, clean_path=clean_path,
                       rir_id=rir_entry.id, noise_id=noise_entry.id, snr=snr,
                       out_path=str(out_file))

    records: list[MixRecord] = []
    failures: list[tuple[str, str]] = []

    def run(item):
        try:
            return one(item), None
        except Exception as exc:  # per-utterance isolation
            log.warning("augment failed for %s: %s", item[0], exc)
            return None, (item[0], str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, clean_manifest))
    else:
        results = [run(item) for item in clean_manifest]

    for rec, err in results:
        if rec is not None:
            records.append(rec)
        else:
            failures.append(err)

    records.sort(key=lambda r: r.utt_id)
    write_manifest(records, out_path / "manifest.jsonl")
    return records, failures
