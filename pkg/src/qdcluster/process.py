"""One-cycle channel from the emitter qubit to the emitter-photon pair.

The channel Phi is stored through its 64 real Pauli-expansion parameters
``phi[gamma, alpha, beta]``:

    Phi(rho) = sum_{alpha beta gamma} phi[gamma, alpha, beta]
               * r_gamma * sigma_alpha (x) sigma_beta,

where ``r_gamma`` are the input Pauli coefficients (``rho = sum_g r_g
sigma_g``), ``sigma_alpha`` acts on the output emitter factor and
``sigma_beta`` on the new photon.  Trace preservation pins the first
column: phi[:, 0, 0] = (1/2, 0, 0, 0).

The Choi matrix convention is the unnormalized C = sum_ij |i><j| (x)
Phi(|i><j|), an 8x8 operator with the 2-dim input factor first and trace 2
for trace-preserving maps.  Fidelities normalize by traces, so the
convention cancels there.
"""

from __future__ import annotations

import json
from collections import namedtuple
from typing import Sequence

import numpy as np

from .linalg import (
    SIGMA,
    PAULI_LABELS,
    DensityMatrix,
    hermitian_fidelity,
    is_hermitian,
    pauli_decompose,
)
from .states import chain_labels, ideal_cycle_isometry

CHAIN_CAP = 10

TP_ATOL = 1e-10
CP_EIG_FLOOR = -1e-8

#: Row order of the serialized 16x4 parameter table (output index pair).
ROW_ORDER = tuple(a + b for a in PAULI_LABELS for b in PAULI_LABELS)

_TP_COLUMN = np.array([0.5, 0.0, 0.0, 0.0])


class ProcessMap:
    """64-parameter one-cycle channel; treated as immutable after creation."""

    __slots__ = ("phi", "meta")

    def __init__(self, phi, meta: dict | None = None):
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (4, 4, 4):
            raise ValueError(f"phi must have shape (4, 4, 4) [gamma, alpha, beta], got {phi.shape}")
        self.phi = phi
        self.meta = dict(meta or {})

    def is_tp(self, atol: float = TP_ATOL) -> bool:
        return bool(np.abs(self.phi[:, 0, 0] - _TP_COLUMN).max() <= atol)

    def to_json_dict(self) -> dict:
        """Serializable layout: 16 rows (output pair alpha-beta) x 4 columns (gamma)."""
        table = self.phi.transpose(1, 2, 0).reshape(16, 4)
        return {
            "format": "pauli-process-map",
            "rows": "alpha_beta",
            "row_order": list(ROW_ORDER),
            "columns": "gamma",
            "column_order": list(PAULI_LABELS),
            "phi": [[float(x) for x in row] for row in table],
            "meta": self.meta,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ProcessMap":
        if data.get("format") != "pauli-process-map":
            raise ValueError("not a pauli-process-map document")
        if tuple(data["row_order"]) != ROW_ORDER or tuple(data["column_order"]) != PAULI_LABELS:
            raise ValueError("unsupported index order in process-map document")
        table = np.asarray(data["phi"], dtype=float)
        if table.shape != (16, 4):
            raise ValueError(f"expected a 16x4 table, got {table.shape}")
        phi = table.reshape(4, 4, 4).transpose(2, 0, 1)
        return cls(phi, meta=data.get("meta"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ProcessMap":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def __repr__(self) -> str:  # pragma: no cover
        return f"ProcessMap(tp={self.is_tp()})"


def map_from_kraus(kraus_ops: Sequence[np.ndarray], meta: dict | None = None) -> ProcessMap:
    """Build the parameter tensor of Phi(rho) = sum_k K rho K^dag for 4x2 Kraus ops."""
    phi = np.zeros((4, 4, 4))
    for g in range(4):
        out = sum(k @ SIGMA[g] @ k.conj().T for k in kraus_ops)
        phi[g] = _pauli_pair_coefficients(out)
    return ProcessMap(phi, meta=meta)


def _pauli_pair_coefficients(out: np.ndarray) -> np.ndarray:
    """Coefficients c[alpha, beta] of a 4x4 operator in the sigma_a (x) sigma_b basis."""
    t = out.reshape(2, 2, 2, 2)
    coeffs = np.einsum("aij,bkl,ikjl->ab", SIGMA.conj(), SIGMA.conj(), t) / 4.0
    if np.abs(coeffs.imag).max() > 1e-9:
        raise ValueError("operator is not Hermiticity-preserving: complex Pauli coefficients")
    return coeffs.real


def ideal_process_map() -> ProcessMap:
    """Channel of the ideal cycle isometry (rank-1 Choi, exactly TP)."""
    return map_from_kraus([ideal_cycle_isometry()], meta={"kind": "ideal"})


def depolarizing_process_map() -> ProcessMap:
    """Reference channel mapping every input to the maximally mixed pair I/4."""
    phi = np.zeros((4, 4, 4))
    phi[0, 0, 0] = 0.5
    return ProcessMap(phi, meta={"kind": "depolarizing"})


def basis_action(pmap: ProcessMap) -> np.ndarray:
    """Tensor M[i, j] = Phi(|i><j|) as an (2, 2, 4, 4) array.

    This is the linear extension of the channel to non-Hermitian inputs and
    the workhorse for Choi construction and chain application.
    """
    phi_sigma = np.einsum("gab,aij,bkl->gikjl", pmap.phi, SIGMA, SIGMA).reshape(4, 4, 4)
    return np.einsum("gji,gpq->ijpq", SIGMA, phi_sigma) / 2.0


def apply(pmap: ProcessMap, rho: DensityMatrix) -> DensityMatrix:
    """Apply the one-cycle channel to a single-qubit state.

    Output register is (emitter, new photon).  Raises when the map is not
    trace preserving or when the output fails positivity beyond the CP
    tolerance ("map not CP on this input").
    """
    if rho.n_qubits != 1:
        raise ValueError("apply expects a single-qubit input state")
    if not pmap.is_tp():
        raise ValueError("process map violates the trace-preservation condition")
    r = pauli_decompose(rho.matrix)
    coeffs = np.einsum("gab,g->ab", pmap.phi, r)
    out = np.einsum("ab,aij,bkl->ikjl", coeffs, SIGMA, SIGMA).reshape(4, 4)
    smallest = float(np.linalg.eigvalsh(out)[0])
    if smallest < CP_EIG_FLOOR:
        raise ValueError(f"map not CP on this input: output eigenvalue {smallest}")
    return DensityMatrix(out, (rho.labels[0], "photon_1"), check_psd=False)


def chain_step(blocks: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """One cycle on the emitter factor of a (2R x 2R) matrix -> (4R x 4R).

    ``blocks`` is the :func:`basis_action` tensor.  The new photon lands
    directly after the emitter in the tensor ordering.
    """
    rest = mat.shape[0] // 2
    four = mat.reshape(2, rest, 2, rest)
    out = np.einsum("ijpq,iajb->paqb", blocks, four)
    return out.reshape(4 * rest, 4 * rest)


def apply_chain(pmap: ProcessMap, init: DensityMatrix, n: int, cap: int = CHAIN_CAP) -> DensityMatrix:
    """State of emitter plus n photons after n cycles, acting trivially on old photons."""
    if init.n_qubits != 1:
        raise ValueError("chain init must be a single-qubit state")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > cap:
        raise ValueError(f"chain length {n} exceeds cap {cap} (state dim 2**{n + 1})")
    if not pmap.is_tp():
        raise ValueError("process map violates the trace-preservation condition")
    blocks = basis_action(pmap)
    mat = init.matrix
    for _ in range(n):
        mat = chain_step(blocks, mat)
    labels = (init.labels[0],) + chain_labels(n)[1:]
    # PSD verification is O(dim^3); skip it on large chains, callers test it separately
    return DensityMatrix(mat, labels, check_psd=(mat.shape[0] <= 256), eig_floor=CP_EIG_FLOOR)


def choi(pmap: ProcessMap) -> np.ndarray:
    """Choi matrix C = sum_ij |i><j| (x) Phi(|i><j|), input factor first (8x8)."""
    blocks = basis_action(pmap)
    return blocks.transpose(0, 2, 1, 3).reshape(8, 8)


def process_map_from_choi(c: np.ndarray, meta: dict | None = None) -> ProcessMap:
    """Inverse of :func:`choi`; exact linear bijection."""
    c = np.asarray(c, dtype=complex)
    if c.shape != (8, 8):
        raise ValueError("Choi matrix must be 8x8 (2-dim input x 4-dim output)")
    blocks = c.reshape(2, 4, 2, 4).transpose(0, 2, 1, 3)
    phi_sigma = np.einsum("gij,ijpq->gpq", SIGMA, blocks)
    phi = np.zeros((4, 4, 4))
    for g in range(4):
        phi[g] = _pauli_pair_coefficients(phi_sigma[g])
    return ProcessMap(phi, meta=meta)


CptpCheck = namedtuple("CptpCheck", ["cp", "tp", "min_choi_eigenvalue"])


def is_cptp(pmap: ProcessMap, cp_floor: float = CP_EIG_FLOOR, tp_atol: float = TP_ATOL) -> CptpCheck:
    """Complete positivity and trace preservation flags plus the smallest Choi eigenvalue."""
    c = choi(pmap)
    smallest = float(np.linalg.eigvalsh((c + c.conj().T) / 2)[0])
    return CptpCheck(cp=smallest >= cp_floor, tp=pmap.is_tp(tp_atol), min_choi_eigenvalue=smallest)


def process_fidelity(a: ProcessMap, b: ProcessMap) -> float:
    """Trace-normalized fidelity of the two Choi matrices, in [0, 1]."""
    for name, m in (("first", a), ("second", b)):
        if not m.is_tp():
            raise ValueError(f"{name} map violates the trace-preservation condition")
    ca, cb = choi(a), choi(b)
    for name, c in (("first", ca), ("second", cb)):
        smallest = float(np.linalg.eigvalsh((c + c.conj().T) / 2)[0])
        if smallest < CP_EIG_FLOOR:
            raise ValueError(f"{name} map has a non-PSD Choi matrix (eigenvalue {smallest})")
    return hermitian_fidelity(ca, cb, eig_floor=CP_EIG_FLOOR)
