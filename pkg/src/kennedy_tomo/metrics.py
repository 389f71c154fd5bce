"""Figures of merit for binary POVMs on the qubit block."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fock
from .detector import DetectorModel, detector_povm
from .errors import InvalidInputError, UndefinedFidelityError
from .povm import PovmSet
from .receivers import HOMODYNE_MIN_ERROR, kennedy_error, kennedy_povm

CURVE_HEADER = ("beta", "pe_ideal", "pe_imperfect", "pe_homodyne")


@dataclass(frozen=True)
class DiscriminationReport:
    p_error: float
    p_error_plus_given_minus: float  # <-|Pi_+|->
    p_error_minus_given_plus: float  # <+|Pi_-|+>
    beta_nominal: complex | None = None
    source: str = "reconstructed"

    def to_dict(self) -> dict:
        d = asdict(self)
        b = self.beta_nominal
        d["beta_nominal"] = None if b is None else [b.real, b.imag]
        return d


@dataclass(frozen=True)
class FidelityReport:
    f_plus: float
    f_minus: float


def _require_binary_qubit(povm: PovmSet):
    if povm.dim != 2:
        raise InvalidInputError(f"expected the 2-dimensional qubit block, got dim={povm.dim}")
    if set(povm.labels) != {"+", "-"}:
        raise InvalidInputError(f"expected labels '+' and '-', got {povm.labels}")


def discrimination_error(
    povm2: PovmSet, beta_nominal: complex | None = None, source: str = "reconstructed"
) -> DiscriminationReport:
    """Equal-prior error (<-|Pi_+|-> + <+|Pi_-|+>)/2 on the qubit block."""
    _require_binary_qubit(povm2)
    plus, minus = fock.plus_minus_states(2)
    e_pm = float((minus.conj() @ povm2["+"] @ minus).real)
    e_mp = float((plus.conj() @ povm2["-"] @ plus).real)
    return DiscriminationReport(
        p_error=(e_pm + e_mp) / 2,
        p_error_plus_given_minus=e_pm,
        p_error_minus_given_plus=e_mp,
        beta_nominal=None if beta_nominal is None else complex(beta_nominal),
        source=source,
    )


def element_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2 / (Tr a Tr b)."""
    ta, tb = np.trace(a).real, np.trace(b).real
    if ta <= 0 or tb <= 0:
        raise UndefinedFidelityError("fidelity is undefined for a zero-trace element")
    sa = fock.psd_sqrt(a)
    inner = sa @ b @ sa
    inner = (inner + inner.conj().T) / 2
    root = fock.psd_sqrt(inner)
    return float(min(1.0, max(0.0, np.trace(root).real ** 2 / (ta * tb))))


def povm_fidelity(reconstructed: PovmSet, reference: PovmSet) -> FidelityReport:
    _require_binary_qubit(reconstructed)
    _require_binary_qubit(reference)
    return FidelityReport(
        f_plus=element_fidelity(reference["+"], reconstructed["+"]),
        f_minus=element_fidelity(reference["-"], reconstructed["-"]),
    )


def reference_povm(beta: complex) -> PovmSet:
    """Ideal displacement-counter POVM cropped to the qubit block."""
    return kennedy_povm(beta, 2)


def imperfect_error(model: DetectorModel, dim: int = 4) -> float:
    povm = detector_povm(model, dim).truncate(2)
    return discrimination_error(povm, model.beta, source="analytic").p_error


def theory_curves(beta_grid: Sequence[float], model: DetectorModel | None = None) -> list[dict]:
    """Rows of (beta, ideal error, imperfect-model error, homodyne line)."""
    vis = 1.0 if model is None else model.visibility
    dark = 0.0 if model is None else model.dark_prob
    rows = []
    for b in beta_grid:
        m = DetectorModel(float(b), visibility=vis, dark_prob=dark)
        rows.append(
            {
                "beta": float(b),
                "pe_ideal": kennedy_error(float(b)),
                "pe_imperfect": imperfect_error(m),
                "pe_homodyne": HOMODYNE_MIN_ERROR,
            }
        )
    return rows


def curves_csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for row in rows:
        w.writerow([repr(float(row[k])) for k in CURVE_HEADER])
    return buf.getvalue()


def write_curves_csv(path: str | Path, rows: list[dict]) -> None:
    Path(path).write_text(curves_csv_text(rows), encoding="utf-8", newline="")
