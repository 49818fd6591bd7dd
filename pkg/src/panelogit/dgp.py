"""Population choice probabilities from discrete mixing distributions,
and seeded panel simulation for empirical frequencies.

Simulation uses numpy's Philox counter-based bit generator.  Each
(x, y0) cell draws from a stream keyed ``[seed, cell_position]`` and the
per-individual uniforms are consumed in individual-major order, so results
do not depend on chunking or scheduling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec, Theta, enumerate_histories, likelihood_vector

__all__ = [
    "DiscreteMixture",
    "PopulationProbs",
    "population_cell",
    "population_probs",
    "simulate_panel",
]

_SIM_CHUNK = 200_000


@dataclass(frozen=True)
class DiscreteMixture:
    """Finite-support distribution of the fixed effect alpha."""

    alphas: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "weights", w)
        if len(a) != len(w) or not a:
            raise ValueError("alphas and weights must be equal-length and nonempty")
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to one")
        if any(a2 <= a1 for a1, a2 in zip(a, a[1:])):
            raise ValueError("alphas must be strictly increasing")

    @property
    def atoms(self) -> np.ndarray:
        """Support on the A = exp(alpha) scale."""
        return np.exp(np.asarray(self.alphas))


class PopulationProbs:
    """Choice probabilities per (x, y0) cell, canonical history order."""

    def __init__(self, spec: ModelSpec, cells: dict):
        self.spec = spec
        self.cells = {}
        for key, p in cells.items():
            p = np.asarray(p, dtype=float)
            if p.shape != (spec.n_hist,):
                raise ValueError(f"cell {key}: expected {spec.n_hist} probabilities")
            if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError(f"cell {key}: not a probability vector")
            self.cells[(int(key[0]), int(key[1]))] = p

    def cell(self, x_index: int = 0, y0: int | None = None) -> np.ndarray:
        y0 = self.spec.y0 if y0 is None else y0
        return self.cells[(x_index, y0)]

    def items(self):
        return sorted(self.cells.items())

    @property
    def y0_values(self) -> tuple[int, ...]:
        return tuple(sorted({y0 for _, y0 in self.cells}))

    def to_csv(self) -> str:
        lines = ["x_index,y0," + ",".join(f"y{t+1}" for t in range(self.spec.T)) + ",probability"]
        hs = enumerate_histories(self.spec.T)
        for (xi, y0), p in self.items():
            for h, v in zip(hs, p):
                bits = ",".join(str(b) for b in h)
                lines.append(f"{xi},{y0},{bits},{v:.12g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "spec": json.loads(self.spec.to_json()),
                "cells": [
                    {"x_index": xi, "y0": y0, "probs": [float(v) for v in p]}
                    for (xi, y0), p in self.items()
                ],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, doc: str) -> "PopulationProbs":
        d = json.loads(doc)
        spec = ModelSpec.from_json(json.dumps(d["spec"]))
        cells = {(c["x_index"], c["y0"]): np.array(c["probs"]) for c in d["cells"]}
        return cls(spec, cells)


def population_cell(spec: ModelSpec, theta: Theta, mixture: DiscreteMixture,
                    x_index: int = 0, y0: int | None = None) -> np.ndarray:
    """Exact mixture integration: P_j = sum_k w_k L_j(exp(alpha_k))."""
    y0 = spec.y0 if y0 is None else y0
    p = np.zeros(spec.n_hist)
    for a, w in zip(mixture.alphas, mixture.weights):
        p += w * likelihood_vector(spec, theta, float(np.exp(a)), x_index=x_index, y0=y0)
    return p


def population_probs(spec: ModelSpec, theta: Theta, mixtures) -> PopulationProbs:
    """Population probabilities for one mixture per cell.

    ``mixtures`` is either a single :class:`DiscreteMixture` (applied to the
    spec's reference cell for every support point) or a mapping
    ``(x_index, y0) -> DiscreteMixture``.
    """
    if isinstance(mixtures, DiscreteMixture):
        mixtures = {(xi, spec.y0): mixtures for xi in range(spec.n_cells)}
    cells = {
        key: population_cell(spec, theta, mix, x_index=key[0], y0=key[1])
        for key, mix in mixtures.items()
    }
    return PopulationProbs(spec, cells)


def _simulate_cell(spec, theta, mixture, n, key, y0, x_index):
    rng = np.random.Generator(np.random.Philox(key=key))
    T = spec.T
    x = spec.x_values(x_index)
    counts = np.zeros(spec.n_hist, dtype=np.int64)
    alphas = np.asarray(mixture.alphas)
    cumw = np.cumsum(mixture.weights)
    done = 0
    while done < n:
        m = min(_SIM_CHUNK, n - done)
        u = rng.random((m, T + 1))
        a = alphas[np.searchsorted(cumw, u[:, 0], side="right").clip(max=len(alphas) - 1)]
        A = np.exp(a)
        yprev = np.full(m, y0)
        yprev2 = np.full(m, spec.y_minus1)
        code = np.zeros(m, dtype=np.int64)
        for t in range(T):
            mult = A * np.exp(theta.beta[0] * yprev)
            if spec.family == "ar2":
                mult = mult * np.exp(theta.beta[1] * yprev2)
            if x is not None:
                mult = mult * theta.shift(x[t])
            p1 = mult / (1.0 + mult)
            y = (u[:, t + 1] < p1).astype(np.int64)
            code = (code << 1) | y
            yprev2 = yprev
            yprev = y
        counts += np.bincount(code, minlength=spec.n_hist)
        done += m
    return counts / n


def simulate_panel(spec: ModelSpec, theta: Theta, mixtures, n: int,
                   seed: int) -> PopulationProbs:
    """Empirical history frequencies from n simulated individuals per cell.

    Deterministic given ``seed``.  Every cell draws its own n individuals
    (empty cells cannot arise) and frequencies are never smoothed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(mixtures, DiscreteMixture):
        mixtures = {(xi, spec.y0): mixtures for xi in range(spec.n_cells)}
    cells = {}
    for pos, (key, mix) in enumerate(sorted(mixtures.items())):
        xi, y0 = key
        freq = _simulate_cell(spec, theta, mix, n, [seed, pos], y0, xi)
        cells[key] = freq
    return PopulationProbs(spec, cells)
