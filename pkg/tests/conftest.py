import numpy as np
import pytest

from rirkit.audio import RIR_LENGTH, RIR_RATE, Rir


def exp_decay(t60: float, n: int = RIR_LENGTH, fs: int = RIR_RATE,
              tail_comp: bool = True) -> np.ndarray:
    """Deterministic single-slope exponential decay h[k] = 10^(-3k/(fs*t60)).

    With tail_comp, the final sample absorbs the energy of the virtual
    infinite tail, which makes the finite-window Schroeder decay curve an
    exact straight line of slope -60/t60 dB/s (a plain truncation would bend
    the curve downward near the end of the window).
    """
    k = np.arange(n)
    h = 10.0 ** (-3.0 * k / (fs * t60))
    if tail_comp:
        r = 10.0 ** (-6.0 / (fs * t60))
        h[-1] = h[-1] / np.sqrt(1.0 - r)
    return h


def exp_decay_rir(t60: float, tail_comp: bool = True) -> Rir:
    return Rir.from_samples(exp_decay(t60, tail_comp=tail_comp).astype(np.float32))


def signal_from_decay_curve(edc_db: np.ndarray) -> np.ndarray:
    """Construct h whose Schroeder decay curve equals edc_db exactly.

    The remaining-energy tail is T[n] = 10^(edc_db[n]/10); per-sample energy
    is the tail difference, with the last sample absorbing the residual.
    """
    tail = 10.0 ** (np.asarray(edc_db, dtype=np.float64) / 10.0)
    if np.any(np.diff(tail) > 0):
        raise ValueError("decay curve must be non-increasing")
    energy = np.empty_like(tail)
    energy[:-1] = tail[:-1] - tail[1:]
    energy[-1] = tail[-1]
    return np.sqrt(energy)


def noise_rir(t60: float, rng: np.random.Generator, direct: float = 1.0) -> Rir:
    """Noise-carrier exponential decay with a direct-path spike; the kind of
    synthetic RIR suitable as GAN training data."""
    n = np.arange(RIR_LENGTH)
    env = 10.0 ** (-3.0 * n / (RIR_RATE * t60))
    h = rng.standard_normal(RIR_LENGTH) * env
    h[0] = direct
    return Rir.from_samples(h.astype(np.float32))


def toy_dataset(count: int = 64, seed: int = 7,
                t60_range: tuple[float, float] = (0.2, 0.8)) -> list[Rir]:
    rng = np.random.default_rng(seed)
    t60s = np.linspace(*t60_range, count)
    return [noise_rir(t, rng) for t in t60s]


@pytest.fixture(scope="session")
def toy_rirs() -> list[Rir]:
    return toy_dataset()
