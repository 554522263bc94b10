"""Simulated correlation measurements and process-map reconstruction.

The measurement model mirrors the pulsed experiment: the emitter is
initialized in one of four named states, one or two cycles are applied,
each emitted photon is projected on one of {H, V, D, R}, and the emitter
is read out projectively in the Z or Y basis (the timed analysis pulse
reaches Z at 3/4 of a precession period and Y at 1/2; X is not reachable,
which is why single-cycle data pin down only 48 of the 64 channel
parameters - the sigma_x output components of the emitter never enter the
measured probabilities).  Two-cycle data, quadratic in the parameters
because the same map acts twice, complete the set.

Counts are multinomial per setting over the full outcome set (each
measured qubit yields either the chosen state or its orthogonal partner),
drawn from a per-setting RNG stream derived from the user seed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import least_squares

from .linalg import SIGMA, PAULI_LABELS, DensityMatrix, pauli_decompose
from .process import ProcessMap, choi, ideal_process_map, process_map_from_choi
from .states import ORTHOGONAL_PARTNER, named_ket

DEFAULT_INITS = ("+X", "-X", "-Y", "+Z")
PHOTON_PROJECTIONS = ("H", "V", "D", "R")
DE_PROJECTIONS = ("+Z", "-Z", "+Y", "-Y")

#: sigma_x output index of the emitter, unobservable in single-cycle data.
_OBSERVABLE_ALPHA = (0, 2, 3)

_TP_COLUMN = np.array([0.5, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class MeasurementSetting:
    """One correlation-measurement configuration.

    ``photon_projections`` lists the projection per cycle in emission
    order (photon_1 first).  ``de_projection`` fixes the emitter readout
    basis through the analysis-pulse delay: Z at 3/4 and Y at 1/2 of the
    emitter precession period.
    """

    init: str
    photon_projections: tuple
    de_projection: str

    def __post_init__(self):
        object.__setattr__(self, "photon_projections", tuple(self.photon_projections))
        if self.init not in ("+X", "-X", "+Y", "-Y", "+Z", "-Z"):
            raise ValueError(f"unknown init {self.init!r}")
        if not self.photon_projections:
            raise ValueError("at least one photon projection is required")
        for p in self.photon_projections:
            if p not in PHOTON_PROJECTIONS:
                raise ValueError(f"photon projection must be one of {PHOTON_PROJECTIONS}, got {p!r}")
        if self.de_projection not in DE_PROJECTIONS:
            raise ValueError(f"emitter projection must be one of {DE_PROJECTIONS}, got {self.de_projection!r}")

    @property
    def n_cycles(self) -> int:
        return len(self.photon_projections)

    @property
    def analysis_delay_fraction(self) -> float:
        """Analysis-pulse delay in units of the emitter precession period."""
        return 0.75 if self.de_projection in ("+Z", "-Z") else 0.5

    def outcomes(self) -> list:
        """All outcome tuples, ordered (emitter, photon_n, ..., photon_1)."""
        choices = [(self.de_projection, ORTHOGONAL_PARTNER[self.de_projection])]
        for p in reversed(self.photon_projections):
            choices.append((p, ORTHOGONAL_PARTNER[p]))
        return [tuple(c) for c in itertools.product(*choices)]

    def chosen_outcome(self) -> tuple:
        return (self.de_projection,) + tuple(reversed(self.photon_projections))

    def to_json_dict(self) -> dict:
        return {
            "init": self.init,
            "photon_projections": list(self.photon_projections),
            "de_projection": self.de_projection,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MeasurementSetting":
        return cls(data["init"], tuple(data["photon_projections"]), data["de_projection"])


@dataclass
class CountRecord:
    """Per-setting outcome tallies.  ``counts`` keys join outcome tuples with commas.

    Tallies are integers for sampled data; the noiseless path stores exact
    probabilities as float tallies with ``shots`` acting as the total weight.
    """

    setting: MeasurementSetting
    shots: Union[int, float]
    counts: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def frequencies(self) -> dict:
        return {k: v / self.shots for k, v in self.counts.items()}


def outcome_key(outcome: Sequence[str]) -> str:
    return ",".join(outcome)


def one_cycle_settings(inits: Sequence[str] = DEFAULT_INITS) -> list:
    """The single-cycle set: inits x 4 photon projections x 4 emitter projections."""
    return [
        MeasurementSetting(i, (q,), dp)
        for i in inits
        for q in PHOTON_PROJECTIONS
        for dp in DE_PROJECTIONS
    ]


def two_cycle_settings(inits: Sequence[str] = DEFAULT_INITS) -> list:
    """The two-cycle completion set with full polarization tomography on both photons."""
    return [
        MeasurementSetting(i, (q1, q2), dp)
        for i in inits
        for q1 in PHOTON_PROJECTIONS
        for q2 in PHOTON_PROJECTIONS
        for dp in DE_PROJECTIONS
    ]


def default_settings(inits: Sequence[str] = DEFAULT_INITS) -> list:
    return one_cycle_settings(inits) + two_cycle_settings(inits)


def _projector_pauli(name: str) -> np.ndarray:
    """Vector of Tr[|v><v| sigma_g] for a named single-qubit state."""
    ket = named_ket(name)
    proj = np.outer(ket, ket.conj())
    return np.einsum("gij,ji->g", SIGMA, proj).real


def _init_pauli(setting: MeasurementSetting, init_state: Optional[DensityMatrix]) -> np.ndarray:
    if init_state is None:
        return _projector_pauli(setting.init) / 2.0
    if init_state.n_qubits != 1:
        raise ValueError("init_state must be a single-qubit state")
    return pauli_decompose(init_state.matrix)


def _outcome_vectors(setting: MeasurementSetting, outcome: Sequence[str]):
    """Pauli-trace vectors (emitter, photon_n .. photon_1) for one outcome."""
    return [_projector_pauli(name) for name in outcome]


def _outcome_probability(phi: np.ndarray, r: np.ndarray, vectors: list) -> float:
    if len(vectors) == 2:
        a, b1 = vectors
        return float(np.einsum("gab,g,a,b->", phi, r, a, b1))
    if len(vectors) == 3:
        a, b2, b1 = vectors
        return float(np.einsum("gab,acd,g,c,d,b->", phi, phi, r, a, b2, b1, optimize=True))
    raise ValueError("only one- and two-cycle settings are supported")


def predict_probability(pmap: ProcessMap, setting: MeasurementSetting,
                        init_state: Optional[DensityMatrix] = None) -> float:
    """Probability of the setting's chosen outcome under the given channel."""
    if setting.n_cycles not in (1, 2):
        raise ValueError("only one- and two-cycle settings are supported")
    r = _init_pauli(setting, init_state)
    vectors = _outcome_vectors(setting, setting.chosen_outcome())
    return _outcome_probability(pmap.phi, r, vectors)


def outcome_probabilities(pmap: ProcessMap, setting: MeasurementSetting,
                          init_state: Optional[DensityMatrix] = None) -> dict:
    """Probabilities for the full outcome set of one setting (sums to 1 for TP maps)."""
    if setting.n_cycles not in (1, 2):
        raise ValueError("only one- and two-cycle settings are supported")
    r = _init_pauli(setting, init_state)
    probs = {}
    for outcome in setting.outcomes():
        vectors = _outcome_vectors(setting, outcome)
        probs[outcome_key(outcome)] = _outcome_probability(pmap.phi, r, vectors)
    return probs


def simulate_counts(pmap: ProcessMap, settings: Iterable[MeasurementSetting],
                    shots: int, seed: int) -> list:
    """Multinomial coincidence counts per setting, deterministic for a fixed seed.

    Each setting draws from its own RNG stream derived from ``(seed,
    setting index)``, so the per-setting counts are independent of the
    composition of the full list.
    """
    if shots <= 0:
        raise ValueError("shots must be > 0")
    records = []
    for index, setting in enumerate(settings):
        probs = outcome_probabilities(pmap, setting)
        keys = list(probs)
        p = np.array([probs[k] for k in keys])
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"outcome probabilities sum to {total}; map is not trace preserving")
        rng = np.random.default_rng([seed, index])
        draws = rng.multinomial(shots, p / total)
        records.append(CountRecord(
            setting=setting,
            shots=shots,
            counts={k: int(n) for k, n in zip(keys, draws)},
            seed=seed,
        ))
    return records


def expected_counts(pmap: ProcessMap, settings: Iterable[MeasurementSetting],
                    shots: float = 1.0) -> list:
    """Noiseless records whose tallies are the exact outcome probabilities."""
    records = []
    for setting in settings:
        probs = outcome_probabilities(pmap, setting)
        records.append(CountRecord(
            setting=setting,
            shots=shots,
            counts={k: shots * p for k, p in probs.items()},
            seed=None,
        ))
    return records


def save_counts_jsonl(records: Iterable[CountRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({
                "setting": rec.setting.to_json_dict(),
                "shots": rec.shots,
                "counts": rec.counts,
                "seed": rec.seed,
            }, sort_keys=True))
            fh.write("\n")


def load_counts_jsonl(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            records.append(CountRecord(
                setting=MeasurementSetting.from_json_dict(data["setting"]),
                shots=data["shots"],
                counts=dict(data["counts"]),
                seed=data.get("seed"),
            ))
    return records


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------


def _design_rows(records: list):
    """Stacked contraction vectors and observed frequencies, split by cycle count."""
    one = {"freq": [], "r": [], "a": [], "b1": []}
    two = {"freq": [], "r": [], "a": [], "b2": [], "b1": []}
    for rec in records:
        setting = rec.setting
        if setting.n_cycles not in (1, 2):
            raise ValueError("only one- and two-cycle settings are supported")
        r = _projector_pauli(setting.init) / 2.0
        freqs = rec.frequencies()
        for outcome in setting.outcomes():
            f = freqs.get(outcome_key(outcome), 0.0)
            vectors = _outcome_vectors(setting, outcome)
            if setting.n_cycles == 1:
                one["freq"].append(f)
                one["r"].append(r)
                one["a"].append(vectors[0])
                one["b1"].append(vectors[1])
            else:
                two["freq"].append(f)
                two["r"].append(r)
                two["a"].append(vectors[0])
                two["b2"].append(vectors[1])
                two["b1"].append(vectors[2])
    return ({k: np.asarray(v) for k, v in one.items()},
            {k: np.asarray(v) for k, v in two.items()})


def _two_cycle_predictions(phi: np.ndarray, two: dict) -> np.ndarray:
    return np.einsum("gab,acd,kg,kc,kd,kb->k", phi, phi,
                     two["r"], two["a"], two["b2"], two["b1"], optimize=True)


def _two_cycle_jacobian(phi: np.ndarray, two: dict) -> np.ndarray:
    # product rule over the two occurrences of phi in the quadratic form
    j_first = np.einsum("ycd,kx,kc,kd,kz->kxyz", phi,
                        two["r"], two["a"], two["b2"], two["b1"], optimize=True)
    j_second = np.einsum("gxb,kg,ky,kz,kb->kxyz", phi,
                         two["r"], two["a"], two["b2"], two["b1"], optimize=True)
    return (j_first + j_second).reshape(len(two["freq"]), 64)


def _stage1_unconstrained(design: np.ndarray) -> list:
    """Labels of parameter directions missing from the design row space."""
    _, svals, vt = np.linalg.svd(design, full_matrices=True)
    tol = max(design.shape) * np.finfo(float).eps * (svals[0] if svals.size else 1.0)
    rank = int((svals > tol).sum())
    labels = []
    for row in vt[rank:]:
        idx = int(np.argmax(np.abs(row)))
        g, rest = divmod(idx, 12)
        a_obs, b = divmod(rest, 4)
        labels.append(f"phi[{PAULI_LABELS[g]},{PAULI_LABELS[_OBSERVABLE_ALPHA[a_obs]]},{PAULI_LABELS[b]}]")
    return labels


def reconstruct(records: list, project: bool = True, restarts: int = 5, seed: int = 0):
    """Estimate the one-cycle channel from count records.

    Stage 1 inverts the single-cycle data for the 48 parameters with an
    observable emitter output component; stage 2 refines all 64 parameters
    by nonlinear least squares against both data sets, seeded with the
    stage-1 values plus the ideal-cycle values for the missing sigma_x
    block; stage 3 optionally projects onto the nearest CP-TP map.

    Returns ``(ProcessMap, diagnostics)``.
    """
    records = list(records)
    one, two = _design_rows(records)
    if not len(one["freq"]):
        raise ValueError("no single-cycle records: the 48-parameter inversion is impossible")
    if not len(two["freq"]):
        raise ValueError("no two-cycle records: the sigma_x output block is unconstrained")

    design64 = np.einsum("kg,ka,kb->kgab", one["r"], one["a"], one["b1"]).reshape(-1, 64)
    design48 = np.einsum("kg,ka,kb->kgab", one["r"], one["a"][:, _OBSERVABLE_ALPHA],
                         one["b1"]).reshape(-1, 48)
    rank = int(np.linalg.matrix_rank(design48))
    if rank < 48:
        missing = _stage1_unconstrained(design48)
        raise ValueError(
            f"rank-deficient single-cycle design matrix (rank {rank} < 48); "
            f"unconstrained parameters: {missing}")
    x48, residual, *_ = np.linalg.lstsq(design48, one["freq"], rcond=None)
    stage1_residual = float(np.linalg.norm(design48 @ x48 - one["freq"]))

    phi_seed = np.zeros((4, 4, 4))
    phi_seed[:, _OBSERVABLE_ALPHA, :] = x48.reshape(4, 3, 4)
    phi_seed[:, 1, :] = ideal_process_map().phi[:, 1, :]

    def residuals(x):
        phi = x.reshape(4, 4, 4)
        return np.concatenate([design64 @ x - one["freq"],
                               _two_cycle_predictions(phi, two) - two["freq"]])

    def jacobian(x):
        phi = x.reshape(4, 4, 4)
        return np.vstack([design64, _two_cycle_jacobian(phi, two)])

    def solve(x0):
        return least_squares(residuals, x0.ravel(), jac=jacobian, method="trf",
                             xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=400)

    solution = solve(phi_seed)
    phi_fit = solution.x.reshape(4, 4, 4)

    spreads = []
    for i in range(restarts):
        rng = np.random.default_rng([seed, 7919, i])
        phi_restart = phi_seed.copy()
        phi_restart[:, 1, :] = rng.uniform(-0.5, 0.5, size=(4, 4))
        alt = solve(phi_restart)
        spreads.append(float(np.abs(alt.x.reshape(4, 4, 4) - phi_fit).max()))

    diagnostics = {
        "stage1_rank": rank,
        "stage1_residual_norm": stage1_residual,
        "stage2_cost": float(solution.cost),
        "stage2_residual_norm": float(np.linalg.norm(solution.fun)),
        "stage2_converged": bool(solution.status > 0),
        "restart_max_spread": max(spreads) if spreads else None,
        "restart_flag": bool(spreads and max(spreads) > 1e-3),
        "n_one_cycle_points": int(len(one["freq"])),
        "n_two_cycle_points": int(len(two["freq"])),
    }
    if not solution.status > 0:
        diagnostics["stage2_message"] = solution.message

    result = ProcessMap(phi_fit, meta={"kind": "reconstructed"})
    if project:
        projected = project_cptp(result)
        diagnostics["projection_shift"] = float(np.abs(projected.phi - phi_fit).max())
        result = ProcessMap(projected.phi, meta={"kind": "reconstructed"})
    return result, diagnostics


def project_cptp(pmap: ProcessMap, tol: float = 1e-10, max_iter: int = 10000) -> ProcessMap:
    """Nearest CP-TP map by alternating Choi-space projections.

    Complete positivity is enforced by eigenvalue clipping, trace
    preservation by the orthogonal projection onto the affine subspace
    Tr_out[C] = I.  Iterates until the Frobenius change drops below
    ``tol``; the final step is the TP projection, so the trace condition
    holds exactly on return.
    """
    if np.abs(pmap.phi[:, 0, 0] - _TP_COLUMN).max() > 0.1:
        raise ValueError("map is too far from trace preserving for CP-TP projection")
    c = choi(pmap)
    c = (c + c.conj().T) / 2
    for _ in range(max_iter):
        previous = c
        vals, vecs = np.linalg.eigh(c)
        c = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
        partial = np.einsum("ipjp->ij", c.reshape(2, 4, 2, 4))
        c = c - np.kron(partial - np.eye(2), np.eye(4)) / 4.0
        c = (c + c.conj().T) / 2
        if np.linalg.norm(c - previous) < tol:
            return process_map_from_choi(c, meta=dict(pmap.meta))
    raise RuntimeError(f"CP-TP projection did not converge within {max_iter} iterations")
