"""Labeled sets of POVM elements and their JSON document form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidInputError, SchemaError

SCHEMA = "povm-set/1"


@dataclass(frozen=True)
class PovmSet:
    """Ordered POVM elements in a truncated Fock basis.

    ``complete`` is False for blocks cropped out of a larger POVM, where the
    elements are PSD but no longer sum to the identity.
    """

    elements: np.ndarray  # shape (L, d, d)
    labels: tuple[str, ...]
    complete: bool = True
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        elements = np.array(self.elements, dtype=complex)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise InvalidInputError(f"elements must have shape (L, d, d), got {elements.shape}")
        if len(self.labels) != elements.shape[0]:
            raise InvalidInputError("one label per element is required")
        if len(set(self.labels)) != len(self.labels):
            raise InvalidInputError(f"labels must be distinct: {self.labels}")
        elements.setflags(write=False)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @classmethod
    def from_elements(cls, elements: Sequence[np.ndarray], labels: Sequence[str], **kw) -> "PovmSet":
        return cls(np.stack([np.asarray(e, dtype=complex) for e in elements]), tuple(labels), **kw)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, label: str) -> np.ndarray:
        try:
            return self.elements[self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None

    def completeness_error(self) -> float:
        """Frobenius distance of the element sum from the identity."""
        return float(np.linalg.norm(self.elements.sum(axis=0) - np.eye(self.dim)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().transpose(0, 2, 1))))

    def min_eigenvalue(self) -> float:
        herm = (self.elements + self.elements.conj().transpose(0, 2, 1)) / 2
        return float(np.linalg.eigvalsh(herm).min())

    def constraint_violation(self) -> float:
        """Largest of: completeness error (if complete), negativity, non-Hermiticity."""
        worst = max(self.hermiticity_error(), max(0.0, -self.min_eigenvalue()))
        if self.complete:
            worst = max(worst, self.completeness_error())
        return worst

    def truncate(self, sub_dim: int) -> "PovmSet":
        if not 1 <= sub_dim <= self.dim:
            raise InvalidInputError(f"cannot truncate dimension {self.dim} to {sub_dim}")
        block = self.elements[:, :sub_dim, :sub_dim]
        complete = self.complete and sub_dim == self.dim
        return PovmSet(block, self.labels, complete=complete, meta=dict(self.meta))

    # serialization

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "dim": self.dim,
            "labels": list(self.labels),
            "complete": self.complete,
            "elements": [
                [[[float(z.real), float(z.imag)] for z in row] for row in el] for el in self.elements
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "PovmSet":
        try:
            dim = int(doc["dim"])
            labels = doc["labels"]
            raw = np.asarray(doc["elements"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed POVM document: {exc}") from exc
        if raw.ndim != 4 or raw.shape[1:] != (dim, dim, 2):
            raise SchemaError(f"elements must be nested [re, im] pairs of shape (L, {dim}, {dim}, 2)")
        if not labels or len(labels) != raw.shape[0]:
            raise SchemaError("labels missing or not one per element")
        elements = raw[..., 0] + 1j * raw[..., 1]
        return cls(elements, tuple(labels), complete=bool(doc.get("complete", True)), meta=doc.get("meta", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PovmSet":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(doc)
