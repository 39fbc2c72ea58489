"""Random quantum distributions as LP seeds for scenarios without a known NS seed set."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import InvalidScenario
from .exactlp import solve_scaled
from .facetgen import FULL, Registry, _drive, _dual_of
from .scenario import Distribution, Scenario
from ._rational import scale_to_integers

DEFAULT_DENOMINATOR = 10 ** 12


@dataclass
class QuantumSample:
    schmidt: np.ndarray
    unitariesA: list
    unitariesB: list
    distribution: Distribution
    seed: Optional[int] = None

    def unitarity_residual(self) -> float:
        res = 0.0
        for U in list(self.unitariesA) + list(self.unitariesB):
            res = max(res, float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max()))
        return res

    def to_json(self) -> str:
        def cplx(U):
            return [[[z.real, z.imag] for z in row] for row in U.tolist()]
        return json.dumps({
            "seed": self.seed,
            "scenario": str(self.distribution.scenario),
            "schmidt": self.schmidt.tolist(),
            "unitariesA": [cplx(U) for U in self.unitariesA],
            "unitariesB": [cplx(U) for U in self.unitariesB],
            "distribution": [float(v) for v in self.distribution.entries],
        })


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Gaussian matrix with the phases of ``diag(R)`` divided out."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def quantum_distribution(s: Scenario, schmidt, unitariesA, unitariesB) -> Distribution:
    """``p(ab|xy) = |<u_a^x (x) v_b^y | phi>|^2`` for ``phi = sum_i s_i |ii>``, projectors from columns."""
    sch = np.asarray(schmidt, dtype=float)
    out = [0.0] * s.n_entries
    for x, U in enumerate(unitariesA):
        for y, V in enumerate(unitariesB):
            amp = U.conj().T @ np.diag(sch) @ V.conj()
            P = np.abs(amp) ** 2
            for a in range(s.kA):
                for b in range(s.kB):
                    out[s.index(a, b, x, y)] = float(P[a, b])
    return Distribution(s, out)


def sample_quantum(s: Scenario, seed: int) -> QuantumSample:
    """Random pure state (|Gaussian| Schmidt coefficients) measured in Haar-random bases."""
    if s.kA != s.kB or s.kA < 2:
        raise InvalidScenario(f"quantum sampling needs kA == kB >= 2, got {s}")
    d = s.kA
    rng = np.random.default_rng(seed)
    sch = np.abs(rng.standard_normal(d))
    sch /= np.linalg.norm(sch)
    UA = [haar_unitary(d, rng) for _ in range(s.mA)]
    UB = [haar_unitary(d, rng) for _ in range(s.mB)]
    return QuantumSample(sch, UA, UB, quantum_distribution(s, sch, UA, UB), seed)


def rationalize(d: Distribution, denominator: int = DEFAULT_DENOMINATOR) -> Distribution:
    """Round to ``n / D`` and fix each ``(x, y)`` block's sum through its largest entry."""
    s = d.scenario
    D = int(denominator)
    nums = [int(round(float(v) * D)) for v in d.entries]
    for x in range(s.mA):
        for y in range(s.mB):
            idx = [s.index(a, b, x, y) for a in range(s.kA) for b in range(s.kB)]
            top = max(idx, key=lambda i: nums[i])
            nums[top] += D - sum(nums[i] for i in idx)
    return Distribution(s, [Fraction(n, D) for n in nums])


def _sample_tasks(s: Scenario, seed: int, denominator: int):
    q = rationalize(sample_quantum(s, seed).distribution, denominator)
    Qs, Lq = scale_to_integers(list(q.entries))
    tab, rhs, _ = solve_scaled(s, Qs)
    prov = {"source": "quantum", "sample_seed": seed}
    if rhs[tab.N] == tab.D * Lq:
        yield dict(prov, local=True), None
        return
    yield prov, _dual_of(tab)


def _solve_sample(args):
    return list(_sample_tasks(*args))


def run_search_quantum(s: Scenario, samples: int, seed: int = 0, mode: str = FULL,
                       registry: Optional[Registry] = None, workers: int = 1,
                       denominator: int = DEFAULT_DENOMINATOR, patience: Optional[int] = None,
                       progress=None, checkpoint=None, checkpoint_every: int = 10000) -> Registry:
    """Facet search seeded by ``samples`` quantum distributions with seeds ``seed + i``."""
    if s.kA != s.kB or s.kA < 3:
        raise InvalidScenario(f"quantum search needs kA == kB >= 3, got {s}")
    jobs = [(s, seed + i, denominator) for i in range(samples)]
    return _drive(s, jobs, _solve_sample, _sample_tasks, mode, registry, workers, patience, progress,
                  checkpoint, checkpoint_every)
