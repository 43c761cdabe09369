"""Stochastic toy model of two-branch collapse with an ensemble energy ledger.

Each trajectory is a single Poisson decay event: a collapse time drawn from
Exponential(rate) and an outcome branch drawn with the configured weights.
The model deliberately stops there (no continuous localization dynamics); the
ledger then compares the ensemble's post-collapse mean energy against the
pre-collapse expectation value, whose difference converges to minus the
interference energy when outcomes follow the configured weights.

Trajectories are generated from the Philox-4x64 counter-based generator with
one counter block per trajectory index, so the ensemble is bit-reproducible
and independent of evaluation order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .errors import ProvenanceError
from .massdist import SuperpositionSpec, e_delta
from .quantities import CODATA2018, PhysicalConstants

#: Outcome statistics are a modeling choice, not a derived result.
BORN_WEIGHT_NOTE = (
    "outcome statistics assumed: Born weights (squared branch amplitudes); "
    "collapse modeled as a single Poisson event per trajectory"
)


@dataclass(frozen=True)
class CollapseModel:
    """Two-branch collapse parameters: decay rate, outcome weights, energies."""

    rate: float                                # 1/s
    outcome_weights: tuple[float, float]       # (w_a, w_b), sum to 1
    branch_energies: tuple[float, float] = (0.0, 0.0)   # J
    interference_energy: float = 0.0           # J, cross-term <psi_a|H|psi_b>
    spec_digest: str | None = None

    def __post_init__(self) -> None:
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be finite and >= 0, got {self.rate}")
        wa, wb = self.outcome_weights
        if wa < 0.0 or wb < 0.0 or abs(wa + wb - 1.0) > 1e-12:
            raise ValueError(f"outcome weights must be nonnegative and sum to 1, got {self.outcome_weights}")

    @property
    def pre_collapse_mean_energy(self) -> float:
        wa, wb = self.outcome_weights
        ea, eb = self.branch_energies
        return wa * ea + wb * eb + self.interference_energy

    @classmethod
    def from_superposition(
        cls,
        spec: SuperpositionSpec,
        branch_energies: tuple[float, float] = (0.0, 0.0),
        interference_energy: float = 0.0,
        prefactor: float = 1.0,
        constants: PhysicalConstants = CODATA2018,
    ) -> "CollapseModel":
        """Rate defaults to E_delta / (prefactor * hbar), the criterion's inverse lifetime."""
        energy = e_delta(spec, constants=constants)
        return cls(
            rate=energy / (prefactor * constants.hbar),
            outcome_weights=spec.weights,
            branch_energies=branch_energies,
            interference_energy=interference_energy,
            spec_digest=spec.content_digest(),
        )

    def content_digest(self) -> str:
        payload = {
            "rate": self.rate,
            "weights": list(self.outcome_weights),
            "energies": list(self.branch_energies),
            "interference": self.interference_energy,
            "spec": self.spec_digest,
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EnsembleSummary:
    survival_times: np.ndarray        # s
    survival_fractions: np.ndarray
    outcome_frequencies: tuple[float, float]
    mean_collapse_time: float         # s; inf when nothing collapses
    median_collapse_time: float
    mean_post_collapse_energy: float  # J
    assumption_note: str = BORN_WEIGHT_NOTE


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Per-trajectory events plus summary statistics; bit-reproducible from
    (model_digest, n_trajectories, seed)."""

    n_trajectories: int
    seed: int
    collapse_times: np.ndarray        # s; +inf marks a surviving trajectory
    outcomes: np.ndarray              # 0 = branch a, 1 = branch b
    model_digest: str
    infinite_lifetime: bool
    summary: EnsembleSummary

    def to_dict(self) -> dict:
        s = self.summary
        return {
            "n_trajectories": self.n_trajectories,
            "seed": self.seed,
            "model_digest": self.model_digest,
            "infinite_lifetime": self.infinite_lifetime,
            "outcome_frequencies": list(s.outcome_frequencies),
            "mean_collapse_time_s": None if math.isinf(s.mean_collapse_time) else s.mean_collapse_time,
            "median_collapse_time_s": None if math.isinf(s.median_collapse_time) else s.median_collapse_time,
            "mean_post_collapse_energy_J": s.mean_post_collapse_energy,
            "assumption_note": s.assumption_note,
        }


def _trajectory_uniforms(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two uniforms per trajectory from Philox counter block i = trajectory index.

    A single stream advancing the low counter word visits exactly the blocks
    Philox(counter=[i, 0, 0, 0], key=[seed, 0]) in order (4 outputs per
    block), so this vectorized draw is bit-identical to constructing one
    generator per trajectory; tests pin that equivalence.
    """
    gen = Generator(Philox(counter=[0, 0, 0, 0], key=[seed, 0]))
    block = gen.random(4 * n).reshape(n, 4)
    return block[:, 0], block[:, 1]


def simulate(model: CollapseModel, n: int, seed: int) -> TrajectoryEnsemble:
    """Draw n independent collapse trajectories.

    rate = 0 is the identical-branch limit: nothing ever collapses and the
    ensemble is flagged infinite_lifetime rather than erroring.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u_time, u_branch = _trajectory_uniforms(n, seed)
    if model.rate > 0.0:
        times = -np.log1p(-u_time) / model.rate
    else:
        times = np.full(n, np.inf)
    wa = model.outcome_weights[0]
    outcomes = (u_branch >= wa).astype(np.int8)

    collapsed = np.isfinite(times)
    any_collapse = bool(np.any(collapsed))
    if any_collapse:
        horizon = 5.0 / model.rate
        grid = np.linspace(0.0, horizon, 51)
        fractions = np.mean(times[None, :] > grid[:, None], axis=1)
        mean_t = float(np.mean(times))
        median_t = float(np.median(times))
    else:
        grid = np.zeros(1)
        fractions = np.ones(1)
        mean_t = math.inf
        median_t = math.inf

    freq_b = float(np.count_nonzero(outcomes)) / n
    freqs = (1.0 - freq_b, freq_b)
    ea, eb = model.branch_energies
    # compensated summation keeps the reduction order-insensitive
    post_mean = math.fsum(np.where(outcomes == 0, ea, eb).tolist()) / n

    summary = EnsembleSummary(
        survival_times=grid,
        survival_fractions=fractions,
        outcome_frequencies=freqs,
        mean_collapse_time=mean_t,
        median_collapse_time=median_t,
        mean_post_collapse_energy=post_mean,
    )
    return TrajectoryEnsemble(
        n_trajectories=n,
        seed=int(seed),
        collapse_times=times,
        outcomes=outcomes,
        model_digest=model.content_digest(),
        infinite_lifetime=not any_collapse,
        summary=summary,
    )


@dataclass(frozen=True)
class EnergyLedger:
    """Pre/post collapse energy bookkeeping for one ensemble."""

    pre_collapse_mean: float      # J
    post_collapse_mean: float     # J
    residual: float               # post - pre
    expected_residual: float      # -interference_energy as n -> inf
    standard_error: float         # of the post-collapse mean
    n_trajectories: int
    assumption_note: str = BORN_WEIGHT_NOTE

    @property
    def within_three_sigma(self) -> bool:
        return abs(self.residual - self.expected_residual) <= 3.0 * self.standard_error

    def to_dict(self) -> dict:
        return {
            "assumption_note": self.assumption_note,
            "pre_collapse_mean_J": self.pre_collapse_mean,
            "post_collapse_mean_J": self.post_collapse_mean,
            "residual_J": self.residual,
            "expected_residual_J": self.expected_residual,
            "standard_error_J": self.standard_error,
            "within_three_sigma": self.within_three_sigma,
            "n_trajectories": self.n_trajectories,
        }


def energy_ledger(ensemble: TrajectoryEnsemble, model: CollapseModel) -> EnergyLedger:
    """Energy balance of the ensemble against the model's pre-collapse mean.

    The residual estimates -interference_energy: collapsing kills the cross
    term, while the weighted branch mean is preserved in expectation.
    """
    if ensemble.model_digest != model.content_digest():
        raise ProvenanceError(
            "ensemble was not produced from this model (content digests differ)"
        )
    wa, wb = model.outcome_weights
    ea, eb = model.branch_energies
    post = ensemble.summary.mean_post_collapse_energy
    pre = model.pre_collapse_mean_energy
    sem = abs(ea - eb) * math.sqrt(wa * wb / ensemble.n_trajectories)
    return EnergyLedger(
        pre_collapse_mean=pre,
        post_collapse_mean=post,
        residual=post - pre,
        expected_residual=-model.interference_energy,
        standard_error=sem,
        n_trajectories=ensemble.n_trajectories,
    )
