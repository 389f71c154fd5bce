"""Click model of the displacement photon counter and synthetic count tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fock
from .errors import InvalidInputError, SchemaError
from .povm import PovmSet

PROBE_PHASES = (math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4)
PROBE_MEAN_PHOTONS = (0.25, 0.5, 1.0, 1.3)
DEFAULT_SHOTS = 50_000
MIN_CAPTURED = 0.95

# 310 Hz dark-count rate over a 1 us gate, and the measured interference visibility
MEASURED_DARK_PROB = 310.0 * 1e-6
MEASURED_VISIBILITY = 0.991

CSV_HEADER = ("probe_index", "re_alpha", "im_alpha", "shots", "clicks")


@dataclass(frozen=True)
class DetectorModel:
    beta: complex
    visibility: float = 1.0
    dark_prob: float = 0.0
    loss_eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", complex(self.beta))
        if not np.isfinite(self.beta):
            raise InvalidInputError("beta must be finite")
        if not 0.0 <= self.visibility <= 1.0:
            raise InvalidInputError(f"visibility must lie in [0, 1], got {self.visibility}")
        if not 0.0 <= self.dark_prob < 1.0:
            raise InvalidInputError(f"dark_prob must lie in [0, 1), got {self.dark_prob}")
        if not 0.0 < self.loss_eta <= 1.0:
            raise InvalidInputError(f"loss_eta must lie in (0, 1], got {self.loss_eta}")

    @property
    def is_ideal(self) -> bool:
        return self.visibility == 1.0 and self.dark_prob == 0.0


@dataclass(frozen=True)
class ProbeEnsemble:
    probes: np.ndarray  # complex amplitudes after loss compensation
    shots_per_probe: int = DEFAULT_SHOTS
    truncation_dim: int = 4
    seed: int = 0

    def __post_init__(self):
        probes = np.atleast_1d(np.asarray(self.probes, dtype=complex))
        if probes.ndim != 1 or probes.size < 1:
            raise InvalidInputError("need at least one probe amplitude")
        if self.shots_per_probe < 1:
            raise InvalidInputError("shots_per_probe must be positive")
        if self.truncation_dim < 1:
            raise InvalidInputError("truncation_dim must be positive")
        probes.setflags(write=False)
        object.__setattr__(self, "probes", probes)

    def __len__(self) -> int:
        return self.probes.size

    def captured(self) -> np.ndarray:
        return np.array([fock.coherent_vector(a, self.truncation_dim, renormalize=False)[1] for a in self.probes])

    def densities(self, dim: int | None = None) -> np.ndarray:
        """Renormalized truncated probe states, shape (M, d, d)."""
        d = self.truncation_dim if dim is None else dim
        return np.stack([fock.coherent_density(a, d) for a in self.probes])


@dataclass(frozen=True)
class FrequencyTable:
    counts: np.ndarray  # (M, L); column 0 = no click ("+"), column 1 = click ("-")
    labels: tuple[str, ...] = ("+", "-")
    probes: np.ndarray | None = field(default=None, compare=False)
    integer: bool = True

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[1] != len(self.labels):
            raise InvalidInputError("counts must have one column per outcome label")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise InvalidInputError("counts must be finite and non-negative")
        if self.integer:
            if not np.all(np.equal(np.mod(counts, 1), 0)):
                raise InvalidInputError("counts must be integers")
            counts = counts.astype(np.int64)
        else:
            counts = counts.astype(float)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_frequencies(cls, freqs, labels: tuple[str, ...] = ("+", "-")) -> "FrequencyTable":
        """Table of non-integer frequencies, e.g. exact predicted probabilities times a weight."""
        return cls(np.asarray(freqs, dtype=float), labels, integer=False)

    @property
    def shots(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def clicks(self) -> np.ndarray:
        return self.counts[:, 1]


def default_probe_ensemble(
    dim: int = 4,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    mean_photons: Sequence[float] = PROBE_MEAN_PHOTONS,
    phases: Sequence[float] = PROBE_PHASES,
) -> ProbeEnsemble:
    """Magnitude-major grid of coherent probes: 4 mean photon numbers x 4 phases."""
    probes = np.array([math.sqrt(n) * np.exp(1j * p) for n in mean_photons for p in phases])
    ens = ProbeEnsemble(probes, shots_per_probe=shots, truncation_dim=dim, seed=seed)
    low = ens.captured().min()
    if low < MIN_CAPTURED:
        raise InvalidInputError(f"a probe keeps only {low:.4f} of its norm at dim={dim}; need >= {MIN_CAPTURED}")
    return ens


def mean_photons_at_detector(model: DetectorModel, alpha: complex) -> float:
    """|alpha|^2 + |beta|^2 + 2 v Re(alpha beta^*), clamped at zero."""
    alpha = complex(alpha)
    cross = (alpha * np.conj(model.beta)).real
    # written around |alpha + beta|^2 so that v = 1 and alpha = -beta give exactly 0
    nbar = abs(alpha + model.beta) ** 2 - 2.0 * (1.0 - model.visibility) * cross
    return max(0.0, nbar)


def click_probability(model: DetectorModel, alpha: complex) -> float:
    """Probability of a click for the (loss-compensated) probe amplitude ``alpha``.

    Loss acts on signal and displacement alike and is compensated by the
    amplitude relabelling of :func:`loss_rescale`, so the optical part only
    depends on the compensated amplitudes.
    """
    prepared_alpha = loss_rescale(alpha, model.loss_eta)
    prepared_beta = loss_rescale(model.beta, model.loss_eta)
    root = math.sqrt(model.loss_eta)
    detected = DetectorModel(root * prepared_beta, model.visibility, model.dark_prob)
    no_click = (1.0 - model.dark_prob) * math.exp(-mean_photons_at_detector(detected, root * prepared_alpha))
    return min(1.0, max(0.0, 1.0 - no_click))


def loss_rescale(alpha: complex, eta: float) -> complex:
    """Amplitude to prepare so that after transmission ``eta`` the field is ``alpha``."""
    if not 0.0 < eta <= 1.0:
        raise InvalidInputError(f"efficiency must lie in (0, 1], got {eta}")
    return complex(alpha) / math.sqrt(eta)


def probe_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one probe, derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def simulate_frequency_table(model: DetectorModel, ensemble: ProbeEnsemble) -> FrequencyTable:
    """Draw click counts probe by probe.

    Each probe uses its own seeded substream, so the table does not depend
    on the order in which probes are simulated.
    """
    n = ensemble.shots_per_probe
    counts = np.empty((len(ensemble), 2), dtype=np.int64)
    for m, alpha in enumerate(ensemble.probes):
        p = click_probability(model, alpha)
        clicks = probe_rng(ensemble.seed, m).binomial(n, p)
        counts[m] = (n - clicks, clicks)
    return FrequencyTable(counts, probes=ensemble.probes)


def expected_frequency_table(model: DetectorModel, ensemble: ProbeEnsemble) -> FrequencyTable:
    """Noiseless table: counts rounded from exact click probabilities."""
    n = ensemble.shots_per_probe
    clicks = np.array([round(n * click_probability(model, a)) for a in ensemble.probes], dtype=np.int64)
    return FrequencyTable(np.stack([n - clicks, clicks], axis=1), probes=ensemble.probes)


def detector_povm(model: DetectorModel, dim: int) -> PovmSet:
    """Binary POVM reproducing :func:`click_probability` on every coherent state.

    The no-click probability (1 - p_dc) exp(-|a|^2 - |b|^2 - 2 v Re(a b^*))
    equals c |<0|D(v b)|a>|^2 with c = (1 - p_dc) exp(-(1 - v^2)|b|^2), so the
    no-click element is c D(v b)^dag |0><0| D(v b).
    """
    vb = model.visibility * model.beta
    scale = (1.0 - model.dark_prob) * math.exp(-(1.0 - model.visibility**2) * abs(model.beta) ** 2)
    plus = scale * fock.displaced_vacuum_projector(vb, dim)
    return PovmSet(
        np.stack([plus, np.eye(dim) - plus]),
        ("+", "-"),
        meta={"beta": [model.beta.real, model.beta.imag], "visibility": model.visibility, "dark_prob": model.dark_prob},
    )


# CSV form of a frequency table


def frequency_csv_text(ensemble_probes: np.ndarray, table: FrequencyTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for m, (alpha, row) in enumerate(zip(ensemble_probes, table.counts)):
        w.writerow([m, repr(float(alpha.real)), repr(float(alpha.imag)), int(row.sum()), int(row[1])])
    return buf.getvalue()


def write_frequency_csv(path: str | Path, ensemble_probes: np.ndarray, table: FrequencyTable) -> None:
    Path(path).write_text(frequency_csv_text(ensemble_probes, table), encoding="utf-8", newline="")


def read_frequency_csv(path: str | Path) -> tuple[np.ndarray, FrequencyTable]:
    """Parse a frequency CSV into (probe amplitudes, table); errors name line and column."""
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
        raise SchemaError(f"{path}:1: header must be {','.join(CSV_HEADER)}")
    probes, counts = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise SchemaError(f"{path}:{lineno}: expected {len(CSV_HEADER)} columns, got {len(row)}")
        vals = []
        for col, (name, cell) in enumerate(zip(CSV_HEADER, row), start=1):
            try:
                vals.append(int(cell) if name in ("probe_index", "shots", "clicks") else float(cell))
            except ValueError:
                raise SchemaError(f"{path}:{lineno}:{col}: cannot parse {name}={cell!r}") from None
        idx, re_a, im_a, shots, clicks = vals
        if idx != len(probes):
            raise SchemaError(f"{path}:{lineno}:1: probe_index {idx} out of sequence")
        if shots < 0 or not 0 <= clicks <= shots:
            raise SchemaError(f"{path}:{lineno}:5: clicks must lie in [0, shots]")
        probes.append(complex(re_a, im_a))
        counts.append((shots - clicks, clicks))
    if not probes:
        raise SchemaError(f"{path}: no data rows")
    probes_arr = np.array(probes)
    return probes_arr, FrequencyTable(np.array(counts), probes=probes_arr)
