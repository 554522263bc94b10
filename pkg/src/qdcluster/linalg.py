"""Dense complex linear algebra primitives shared by all other modules.

Qubit registers are ordered: the emitter ("DE") comes first, photons follow
newest to oldest, e.g. ``("DE", "photon_2", "photon_1")``.  Matrices are
dense row-major ``numpy`` arrays; the largest register handled here is 11
qubits, so no sparse structure is needed.

Eigendecomposition is the single numerical backbone for matrix square
roots, fidelities and positivity checks.  Eigenvalues below
``EIGENVALUE_FLOOR`` are treated as errors; values in
``[EIGENVALUE_FLOOR, 0)`` are clipped to zero, which absorbs the tiny
negative eigenvalues produced by statistical reconstructions.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

PAULI_LABELS = ("0", "x", "y", "z")

#: Pauli matrices indexed (0, x, y, z).
SIGMA = np.array(
    [
        [[1.0, 0.0], [0.0, 1.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)

HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
EIGENVALUE_FLOOR = -1e-10


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two matrices, dims (rA*rB) x (cA*cB)."""
    return np.kron(np.asarray(a), np.asarray(b))


def is_hermitian(mat: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    mat = np.asarray(mat)
    return bool(np.abs(mat - mat.conj().T).max() <= atol)


class DensityMatrix:
    """Hermitian, unit-trace, PSD operator on an ordered qubit register.

    Parameters
    ----------
    matrix : array_like, shape (2**n, 2**n)
        The operator in the computational product basis of the labels.
    labels : sequence of str
        Qubit labels, first label = leftmost tensor factor.
    check_psd : bool
        Verify the smallest eigenvalue against ``eig_floor``.  Chain
        builders disable this on large intermediates for speed.
    eig_floor : float
        Smallest admissible eigenvalue (negative tolerance).

    Instances are treated as immutable.
    """

    __slots__ = ("matrix", "labels")

    def __init__(
        self,
        matrix,
        labels: Sequence[str],
        check_psd: bool = True,
        eig_floor: float = EIGENVALUE_FLOOR,
    ):
        mat = np.asarray(matrix, dtype=complex)
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate qubit labels: {labels}")
        dim = 2 ** len(labels)
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match {len(labels)} qubits")
        if not is_hermitian(mat):
            raise ValueError("density matrix is not Hermitian within 1e-12")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"trace {tr} differs from 1 beyond {TRACE_ATOL}")
        if check_psd:
            smallest = float(np.linalg.eigvalsh(mat)[0])
            if smallest < eig_floor:
                raise ValueError(f"smallest eigenvalue {smallest} below floor {eig_floor}")
        self.matrix = mat
        self.labels = labels

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown qubit label {label!r}; known: {self.labels}") from None

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(labels={self.labels})"


def ptrace_positions(mat: np.ndarray, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a 2**n x 2**n matrix keeping the given qubit positions."""
    keep = sorted(keep)
    t = np.asarray(mat).reshape((2,) * (2 * n_qubits))
    row = list(range(n_qubits))
    col = [n_qubits + q if q in keep else q for q in range(n_qubits)]
    out = keep + [n_qubits + q for q in keep]
    reduced = np.einsum(t, row + col, out)
    d = 2 ** len(keep)
    return reduced.reshape(d, d)


def project_position(mat: np.ndarray, n_qubits: int, position: int, ket: np.ndarray) -> np.ndarray:
    """Unnormalized conditional matrix <v|_q rho |v>_q, removing qubit ``position``."""
    t = np.asarray(mat).reshape((2,) * (2 * n_qubits))
    v = np.asarray(ket, dtype=complex)
    t = np.tensordot(v.conj(), t, axes=([0], [position]))
    t = np.tensordot(v, t, axes=([0], [n_qubits - 1 + position]))
    d = 2 ** (n_qubits - 1)
    return t.reshape(d, d)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduced density matrix over the kept labels (original label order)."""
    keep = list(keep)
    positions = [rho.position(lbl) for lbl in keep]
    reduced = ptrace_positions(rho.matrix, rho.n_qubits, positions)
    kept_labels = [lbl for lbl in rho.labels if lbl in set(keep)]
    return DensityMatrix(reduced, kept_labels, check_psd=False)


def partial_transpose(rho: DensityMatrix, subsystem: str) -> np.ndarray:
    """Matrix with the row/column indices of one qubit transposed."""
    q = rho.position(subsystem)
    n = rho.n_qubits
    t = rho.matrix.reshape((2,) * (2 * n))
    t = np.swapaxes(t, q, n + q)
    return t.reshape(rho.dim, rho.dim)


def clipped_eigh(mat: np.ndarray, eig_floor: float = EIGENVALUE_FLOOR):
    """Eigendecomposition of a Hermitian PSD matrix with negative clipping.

    Raises if any eigenvalue falls below ``eig_floor``; eigenvalues in
    ``[eig_floor, 0)`` are clipped to zero.
    """
    if not is_hermitian(mat):
        raise ValueError("matrix is not Hermitian within 1e-12")
    vals, vecs = np.linalg.eigh(mat)
    if vals[0] < eig_floor:
        raise ValueError(f"eigenvalue {vals[0]} below PSD floor {eig_floor}")
    return np.clip(vals, 0.0, None), vecs


def psd_sqrt(a: np.ndarray, eig_floor: float = EIGENVALUE_FLOOR) -> np.ndarray:
    """Hermitian square root S of a PSD matrix, S @ S = a."""
    vals, vecs = clipped_eigh(np.asarray(a, dtype=complex), eig_floor)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def hermitian_fidelity(a: np.ndarray, b: np.ndarray, eig_floor: float = EIGENVALUE_FLOOR) -> float:
    """Trace-normalized Uhlmann fidelity of two Hermitian PSD matrices.

    F(A, B) = Tr[sqrt(sqrt(B) A sqrt(B))]**2 / (Tr[A] Tr[B]).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    sb = psd_sqrt(b, eig_floor)
    inner = sb @ a @ sb
    # roundoff in the triple product warrants a slightly looser floor
    vals, _ = clipped_eigh((inner + inner.conj().T) / 2, min(eig_floor, -1e-9))
    total = np.sqrt(vals).sum() ** 2
    return float(total / (np.trace(a).real * np.trace(b).real))


def pauli_decompose(rho: np.ndarray) -> np.ndarray:
    """Real coefficients r_g with rho = sum_g r_g sigma_g, for Hermitian 2x2 rho."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got {rho.shape}")
    if not is_hermitian(rho):
        raise ValueError("matrix is not Hermitian within 1e-12")
    coeffs = np.einsum("gij,ji->g", SIGMA, rho) / 2.0
    return coeffs.real


def pauli_recompose(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pauli_decompose`."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (4,):
        raise ValueError("expected 4 coefficients")
    return np.einsum("g,gij->ij", coeffs, SIGMA)
