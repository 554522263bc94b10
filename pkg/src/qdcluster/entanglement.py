"""Entanglement metrics: negativity, fidelity, localizable entanglement.

Localizable entanglement between two chosen qubits is the outcome-averaged
negativity of their conditional state, maximized over products of
single-qubit projective measurement bases on all other qubits.  The
maximization is non-convex; the optimizer (multi-start coordinate ascent
with a final simplex refinement) therefore reports a lower bound, with the
per-start spread available in the diagnostics.

Qubit positions in this module are 1-based in register order (position 1
is the first label, i.e. the emitter for chain states), matching the pair
notation (m, m+d) used for chain distances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import curve_fit, minimize

from .linalg import (
    EIGENVALUE_FLOOR,
    SIGMA,
    PAULI_LABELS,
    DensityMatrix,
    hermitian_fidelity,
    project_position,
)
from .process import CHAIN_CAP, ProcessMap, basis_action, chain_step
from .states import PureState

XI_GUARD = 1e6

_BRANCH_EPS = 1e-14


def _as_matrix(rho: Union[DensityMatrix, np.ndarray], n_qubits: Optional[int] = None) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        if n_qubits is not None and rho.n_qubits != n_qubits:
            raise ValueError(f"expected a {n_qubits}-qubit state, got {rho.n_qubits} qubits")
        return rho.matrix
    mat = np.asarray(rho, dtype=complex)
    if n_qubits is not None and mat.shape != (2 ** n_qubits,) * 2:
        raise ValueError(f"expected a {2 ** n_qubits}-dim matrix, got {mat.shape}")
    return mat


def negativity(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """Summed magnitude of the negative partial-transpose eigenvalues.

    Zero for separable two-qubit states, 1/2 for maximally entangled ones.
    """
    mat = _as_matrix(rho, 2)
    pt = mat.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    vals = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    return float((np.abs(vals) - vals).sum() / 2)


def fidelity_states(a: Union[DensityMatrix, np.ndarray], b: Union[DensityMatrix, np.ndarray],
                    eig_floor: float = EIGENVALUE_FLOOR) -> float:
    """Trace-normalized state fidelity; symmetric, 1 iff the states coincide."""
    return hermitian_fidelity(_as_matrix(a), _as_matrix(b), eig_floor=eig_floor)


def measurement_basis(theta: float, phi: float):
    """Orthonormal single-qubit basis at Bloch angles (theta, phi)."""
    v0 = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)
    v1 = np.array([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)], dtype=complex)
    return v0, v1


X_BASIS_ANGLES = (np.pi / 2, 0.0)
Y_BASIS_ANGLES = (np.pi / 2, np.pi / 2)
Z_BASIS_ANGLES = (0.0, 0.0)


@dataclass
class LEResult:
    """Outcome of a localizable-entanglement maximization."""

    pair: tuple
    negativity: float
    optimal_bases: dict = field(default_factory=dict)  # position -> (theta, phi)
    outcome_table: list = field(default_factory=list)  # (outcome, probability, negativity)
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Objective evaluators (dense register and branch-iterative chain paths)
# ---------------------------------------------------------------------------


def _outcome_average_dense(mat: np.ndarray, n_qubits: int, measured: Sequence[int],
                           angles: np.ndarray, want_table: bool = False):
    """Average conditional negativity on a dense register.

    ``measured`` holds 0-based positions in ascending order; ``angles``
    holds a (theta, phi) pair per measured position in that order.
    """
    total = 0.0
    table = []
    bases = [measurement_basis(angles[2 * i], angles[2 * i + 1]) for i in range(len(measured))]
    order = sorted(range(len(measured)), key=lambda i: -measured[i])
    for bits in itertools.product((0, 1), repeat=len(measured)):
        sub = mat
        n = n_qubits
        for i in order:
            sub = project_position(sub, n, measured[i], bases[i][bits[i]])
            n -= 1
        p = float(np.trace(sub).real)
        if p > _BRANCH_EPS:
            neg = negativity(sub / p)
            total += p * neg
        else:
            p, neg = max(p, 0.0), 0.0
        if want_table:
            table.append(("".join(str(b) for b in bits), p, neg))
    return (total, table) if want_table else total


def _outcome_average_chain(blocks: np.ndarray, init_mat: np.ndarray, n_cycles: int,
                           pair: tuple, angles: np.ndarray, want_table: bool = False):
    """Branch-iterative evaluation for chain states.

    Measured photons are projected right after their emission cycle (the
    later cycles act trivially on them), so a branch never holds more than
    the emitter, the kept photons and the photon in flight.  Must agree
    with the dense path on the full chain state.
    """
    n_total = n_cycles + 1
    measured = [p for p in range(1, n_total + 1) if p not in pair]
    slot = {pos: i for i, pos in enumerate(measured)}
    bases = {pos: measurement_basis(angles[2 * i], angles[2 * i + 1]) for pos, i in slot.items()}
    branches = [(1.0, init_mat, ())]  # (probability, normalized state, outcome bits)
    for k in range(1, n_cycles + 1):
        position = n_total + 1 - k  # register position of photon_k in the final state
        stepped = [(w, chain_step(blocks, m), bits) for w, m, bits in branches]
        if position not in slot:
            branches = stepped
            continue
        branches = []
        for w, m, bits in stepped:
            n = int(np.log2(m.shape[0]))
            for b, ket in enumerate(bases[position]):
                sub = project_position(m, n, 1, ket)
                p = float(np.trace(sub).real)
                if p > _BRANCH_EPS:
                    branches.append((w * p, sub / p, bits + ((position, b),)))
    if 1 not in pair:
        final = []
        for w, m, bits in branches:
            n = int(np.log2(m.shape[0]))
            for b, ket in enumerate(bases[1]):
                sub = project_position(m, n, 0, ket)
                p = float(np.trace(sub).real)
                if p > _BRANCH_EPS:
                    final.append((w * p, sub / p, bits + ((1, b),)))
        branches = final
    total = sum(w * negativity(m) for w, m, _ in branches)
    if not want_table:
        return total
    table = []
    for w, m, bits in branches:
        by_slot = dict(bits)
        key = "".join(str(by_slot[pos]) for pos in measured)
        table.append((key, w, negativity(m)))
    return total, table


# ---------------------------------------------------------------------------
# Basis optimization
# ---------------------------------------------------------------------------


def _coordinate_ascent(objective, x0: np.ndarray, sweep_tol: float = 1e-6):
    x = np.array(x0, dtype=float)
    best = objective(x)
    n = x.size // 2
    for _ in range(40):
        gain = 0.0
        for q in range(n):
            def local(y, q=q):
                trial = x.copy()
                trial[2 * q:2 * q + 2] = y
                return -objective(trial)

            res = minimize(local, x[2 * q:2 * q + 2], method="Nelder-Mead",
                           options={"maxiter": 120, "xatol": 1e-6, "fatol": 1e-10})
            if -res.fun > best:
                gain += -res.fun - best
                best = -res.fun
                x[2 * q:2 * q + 2] = res.x
        if gain < sweep_tol:
            break
    res = minimize(lambda y: -objective(y), x, method="Nelder-Mead",
                   options={"maxiter": 400 * max(n, 1), "xatol": 1e-7, "fatol": 1e-11})
    if -res.fun > best:
        best = -res.fun
        x = res.x
    return best, x


def _maximize_over_bases(objective, n_measured: int, seed: int = 0,
                         n_random_starts: int = 5, extra_starts: Sequence = ()):
    """Multi-start maximization over per-qubit Bloch angles.

    Deterministic starts are the all-X, all-Y and all-Z bases plus any
    caller-supplied extras; random starts are drawn from a seeded stream.
    Ties resolve to the lowest start index.
    """
    starts = [
        np.array(X_BASIS_ANGLES * n_measured),
        np.array(Y_BASIS_ANGLES * n_measured),
        np.array(Z_BASIS_ANGLES * n_measured),
    ]
    starts.extend(np.asarray(s, dtype=float) for s in extra_starts)
    rng = np.random.default_rng([seed, n_measured])
    for _ in range(n_random_starts):
        thetas = rng.uniform(0.0, np.pi, size=n_measured)
        phis = rng.uniform(0.0, 2 * np.pi, size=n_measured)
        starts.append(np.column_stack([thetas, phis]).reshape(-1))
    best_value, best_angles = -np.inf, starts[0]
    start_values = []
    for x0 in starts:
        value, angles = _coordinate_ascent(objective, x0)
        start_values.append(value)
        if value > best_value + 1e-12:
            best_value, best_angles = value, angles
    diagnostics = {
        "start_values": start_values,
        "start_spread": float(max(start_values) - min(start_values)),
    }
    return best_value, best_angles, diagnostics


def localizable_entanglement(rho: DensityMatrix, m: int, n: int, seed: int = 0,
                             n_random_starts: int = 5) -> LEResult:
    """Maximal outcome-averaged negativity between qubits ``m`` and ``n`` (1-based).

    All other qubits are measured in optimized projective bases.  For a
    two-qubit input there is nothing to measure and the plain negativity
    is returned.
    """
    total = rho.n_qubits
    if total < 2:
        raise ValueError("need at least two qubits")
    for pos in (m, n):
        if not 1 <= pos <= total:
            raise ValueError(f"qubit position {pos} outside 1..{total}")
    if m == n:
        raise ValueError("the two chosen qubits must differ")
    pair = (min(m, n), max(m, n))
    measured = [p for p in range(1, total + 1) if p not in pair]
    if not measured:
        value = negativity(rho)
        return LEResult(pair=pair, negativity=value,
                        outcome_table=[("", 1.0, value)])
    measured0 = [p - 1 for p in measured]

    def objective(angles):
        return _outcome_average_dense(rho.matrix, total, measured0, angles)

    value, angles, diagnostics = _maximize_over_bases(
        objective, len(measured), seed=seed, n_random_starts=n_random_starts)
    _, table = _outcome_average_dense(rho.matrix, total, measured0, angles, want_table=True)
    bases = {pos: (float(angles[2 * i]), float(angles[2 * i + 1]))
             for i, pos in enumerate(measured)}
    return LEResult(pair=pair, negativity=float(value), optimal_bases=bases,
                    outcome_table=table, diagnostics=diagnostics)


def le_curve(pmap: ProcessMap, init: DensityMatrix, d_max: int, m: int = 1,
             seed: int = 0, cap: int = CHAIN_CAP) -> list:
    """Localizable entanglement of the pair (m, m+d) for d = 1..d_max.

    The chain state for distance d is grown by m+d-1 cycles; the branch
    evaluator keeps the state small by measuring each intermediate photon
    as soon as it is emitted.  Returns a list of (d, value) pairs.
    """
    if init.n_qubits != 1:
        raise ValueError("chain init must be a single-qubit state")
    if m < 1 or d_max < 1:
        raise ValueError("m and d_max must be >= 1")
    if m + d_max > cap + 1:
        raise ValueError(f"m + d_max = {m + d_max} exceeds chain cap + 1 = {cap + 1}")
    blocks = basis_action(pmap)
    curve = []
    previous_angles = None
    for d in range(1, d_max + 1):
        n_cycles = m + d - 1
        pair = (m, m + d)
        n_measured = n_cycles - 1

        def objective(angles, n_cycles=n_cycles, pair=pair):
            return _outcome_average_chain(blocks, init.matrix, n_cycles, pair, angles)

        if n_measured == 0:
            value = objective(np.array([]))
        else:
            extra = []
            cluster = np.array(X_BASIS_ANGLES * n_measured)
            if m > 1:
                cluster[:2] = Z_BASIS_ANGLES  # emitter slot when the emitter is measured
            extra.append(cluster)
            if previous_angles is not None and previous_angles.size == 2 * (n_measured - 1):
                extra.append(np.concatenate([previous_angles, X_BASIS_ANGLES]))
            value, angles, _ = _maximize_over_bases(
                objective, n_measured, seed=seed, extra_starts=extra)
            previous_angles = angles
        curve.append((d, float(value)))
    return curve


@dataclass
class ExponentialFit:
    """Result of fitting N(d) = N0 exp(-d / xi)."""

    n0: float
    xi: float
    residual: float  # rms misfit over the fitted points
    message: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.message is None


def fit_exponential(curve: Sequence, min_value: float = 1e-4) -> ExponentialFit:
    """Least-squares exponential-decay fit of an LE curve, in linear space.

    Tail points at or below ``min_value`` are excluded to avoid bias from
    numerically dead values; at least three usable points are required.  A
    curve with no resolvable decay is flagged ("no decay") with the decay
    length pinned at the 1e6 guard.
    """
    points = [(d, v) for d, v in curve if v > min_value]
    if len(points) < 3:
        raise ValueError(f"need at least 3 points above {min_value}, got {len(points)}")
    ds = np.array([d for d, _ in points], dtype=float)
    vs = np.array([v for _, v in points], dtype=float)

    if vs[0] > vs[-1] * (1 + 1e-9):
        xi0 = (ds[-1] - ds[0]) / np.log(vs[0] / vs[-1])
    else:
        xi0 = XI_GUARD
    xi0 = float(np.clip(xi0, 1e-6, XI_GUARD))

    def decay(d, n0, xi):
        return n0 * np.exp(-d / xi)

    popt, _ = curve_fit(decay, ds, vs, p0=[vs[0] * np.exp(ds[0] / xi0), xi0],
                        bounds=([0.0, 1e-9], [np.inf, XI_GUARD]), maxfev=10000)
    n0, xi = float(popt[0]), float(popt[1])
    residual = float(np.sqrt(np.mean((decay(ds, n0, xi) - vs) ** 2)))
    message = "no decay" if xi >= XI_GUARD * (1 - 1e-6) else None
    return ExponentialFit(n0=n0, xi=xi, residual=residual, message=message)


# ---------------------------------------------------------------------------
# Tripartite fidelity bounds
# ---------------------------------------------------------------------------


def all_paulis(n_qubits: int = 3) -> list:
    """Pauli-product keys like "0yz", one character per qubit in register order."""
    return ["".join(p) for p in itertools.product(PAULI_LABELS, repeat=n_qubits)]


def measurable_paulis() -> list:
    """Three-qubit Pauli products observable without an emitter sigma_x readout."""
    return [key for key in all_paulis(3) if key[0] != "x"]


def _pauli_operator(key: str) -> np.ndarray:
    op = np.array([[1.0]], dtype=complex)
    for ch in key:
        op = np.kron(op, SIGMA[PAULI_LABELS.index(ch)])
    return op


def pauli_expectations(rho: DensityMatrix, keys: Optional[Sequence[str]] = None) -> dict:
    """Expectation values Tr[P rho] for the requested Pauli products."""
    mat = rho.matrix
    if keys is None:
        keys = all_paulis(rho.n_qubits)
    out = {}
    for key in keys:
        if len(key) != rho.n_qubits:
            raise ValueError(f"key {key!r} does not match a {rho.n_qubits}-qubit state")
        out[key] = float(np.trace(_pauli_operator(key) @ mat).real)
    return out


def tripartite_fidelity_bounds(expectations: Mapping[str, float], target: PureState):
    """Fidelity interval to a 3-qubit pure target from a partial expectation set.

    The target is expanded over Pauli products, the measurable terms (no
    emitter sigma_x component) are summed with the supplied expectations,
    and every unmeasured term is bounded by |<P>| <= 1.  Returns
    ``(f_low, f_high)``.
    """
    if target.n_qubits != 3:
        raise ValueError("target must be a 3-qubit pure state")
    rho_t = np.outer(target.amplitudes, target.amplitudes.conj())
    measurable = set(measurable_paulis())
    missing = sorted(k for k in measurable if k not in expectations)
    if missing:
        raise ValueError(f"missing measurable expectations: {missing}")
    f_measured = 0.0
    width = 0.0
    for key in all_paulis(3):
        coeff = float(np.trace(_pauli_operator(key) @ rho_t).real)
        if key in expectations:
            value = float(expectations[key])
            f_measured += coeff * value
        else:
            width += abs(coeff)
    f_measured /= 8.0
    width /= 8.0
    return f_measured - width, f_measured + width
