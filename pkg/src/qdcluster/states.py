"""Exact pure states and gates of the idealized generation protocol.

One protocol cycle maps the emitter qubit (DE) to the emitter plus a newly
emitted photon: a polarization-tagged emission followed by a timed quarter
precession of the emitter.  Repeating the cycle grows a one-dimensional
cluster state, with each new photon inserted between the emitter and the
previously emitted photons.

Phase conventions are fixed so that the textbook chain states come out
literally, including the photon basis phase |V> = i(|R> - |L>)/sqrt(2)
under which projecting the emitter of the two-photon chain onto |+Z>
leaves (|V_2>|R_1> + |H_2>|L_1>) / (sqrt(2) i).
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .linalg import DensityMatrix

_S2 = 1.0 / np.sqrt(2.0)

#: Emitter (DE) basis kets in the (+Z, -Z) computational basis.
DE_KETS = {
    "+Z": np.array([1.0, 0.0], dtype=complex),
    "-Z": np.array([0.0, 1.0], dtype=complex),
    "+X": np.array([_S2, _S2], dtype=complex),
    "-X": np.array([_S2, -_S2], dtype=complex),
    "+Y": np.array([_S2, 1j * _S2], dtype=complex),
    "-Y": np.array([_S2, -1j * _S2], dtype=complex),
}

#: Photon polarization kets in the (R, L) circular basis.
PHOTON_KETS = {
    "R": np.array([1.0, 0.0], dtype=complex),
    "L": np.array([0.0, 1.0], dtype=complex),
    "H": np.array([_S2, _S2], dtype=complex),
    "V": np.array([1j * _S2, -1j * _S2], dtype=complex),
    "D": np.array([(1 + 1j) / 2, (1 - 1j) / 2], dtype=complex),
    "B": np.array([(1 - 1j) / 2, (1 + 1j) / 2], dtype=complex),
}

#: For each named single-qubit state, the orthogonal state of the same basis.
ORTHOGONAL_PARTNER = {
    "+Z": "-Z", "-Z": "+Z", "+X": "-X", "-X": "+X", "+Y": "-Y", "-Y": "+Y",
    "R": "L", "L": "R", "H": "V", "V": "H", "D": "B", "B": "D",
}

DEFAULT_CYCLE_CAP = 12

PROJECTION_EPS = 1e-14


def named_ket(name: str) -> np.ndarray:
    """Look up a named single-qubit ket (emitter or photon convention)."""
    if name in DE_KETS:
        return DE_KETS[name]
    if name in PHOTON_KETS:
        return PHOTON_KETS[name]
    raise KeyError(f"unknown basis state {name!r}")


def chain_labels(n_photons: int) -> tuple:
    """Register labels after n cycles: emitter first, photons newest to oldest."""
    return ("DE",) + tuple(f"photon_{k}" for k in range(n_photons, 0, -1))


class PureState:
    """Unit-norm state vector on an ordered qubit register.

    Treated as immutable.  ``amplitudes[i]`` is the coefficient of the
    computational product state whose bits (MSB first) follow ``labels``.
    """

    __slots__ = ("amplitudes", "labels")

    def __init__(self, amplitudes, labels: Sequence[str]):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        labels = tuple(labels)
        if amps.shape != (2 ** len(labels),):
            raise ValueError(f"amplitude length {amps.size} does not match {len(labels)} qubits")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm} differs from 1 beyond 1e-12")
        self.amplitudes = amps
        self.labels = labels

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown qubit label {label!r}; known: {self.labels}") from None

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.labels,
                             check_psd=False)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:  # pragma: no cover
        return f"PureState(labels={self.labels})"


def de_state(name: str, label: str = "DE") -> PureState:
    """Single-qubit emitter state by name, e.g. ``de_state("-X")``."""
    return PureState(DE_KETS[name], (label,))


def gate_G() -> np.ndarray:
    """Quarter-precession emitter gate exp(i pi/4 sigma_x) = (I + i sigma_x)/sqrt(2)."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return (np.eye(2, dtype=complex) + 1j * sx) / np.sqrt(2.0)


def emission_isometry() -> np.ndarray:
    """Polarization-tagged emission E: |+Z> -> |+Z>|R>, |-Z> -> |-Z>|L> (4x2)."""
    e = np.zeros((4, 2), dtype=complex)
    e[0, 0] = 1.0  # |+Z, R>
    e[3, 1] = 1.0  # |-Z, L>
    return e


def ideal_cycle_isometry() -> np.ndarray:
    """One full ideal cycle V = (G x I_photon) E, a 4x2 isometry.

    Output ordering is (emitter, new photon).  Equivalent to initializing
    the photon in |R>, applying a CNOT controlled by the emitter, then the
    precession gate G on the emitter.
    """
    return np.kron(gate_G(), np.eye(2, dtype=complex)) @ emission_isometry()


def ideal_state(n_cycles: int, init: Union[PureState, str] = "-X",
                cap: int = DEFAULT_CYCLE_CAP) -> PureState:
    """Chain state after ``n_cycles`` ideal cycles applied to a 1-qubit init.

    The new photon is inserted adjacent to the emitter each cycle, so the
    final register reads (DE, photon_n, ..., photon_1).
    """
    if isinstance(init, str):
        init = de_state(init)
    if init.n_qubits != 1:
        raise ValueError("init must be a single-qubit state")
    if n_cycles < 0:
        raise ValueError("n_cycles must be >= 0")
    if n_cycles > cap:
        raise ValueError(f"n_cycles {n_cycles} exceeds cap {cap} (state dim 2**{n_cycles + 1})")
    v = ideal_cycle_isometry()
    amps = init.amplitudes
    for _ in range(n_cycles):
        rest = amps.size // 2
        amps = np.tensordot(v, amps.reshape(2, rest), axes=([1], [0])).reshape(-1)
    return PureState(amps, chain_labels(n_cycles))


def project_qubit(state: PureState, label: str,
                  direction: Union[PureState, str, np.ndarray]):
    """Project one qubit onto ``direction`` and renormalize.

    Returns ``(projected_state, probability)`` where the probability is the
    squared norm before renormalization.  Raises when the projection is
    incompatible (probability below 1e-14).
    """
    if isinstance(direction, PureState):
        ket = direction.amplitudes
    elif isinstance(direction, str):
        ket = named_ket(direction)
    else:
        ket = np.asarray(direction, dtype=complex).reshape(-1)
    if ket.shape != (2,):
        raise ValueError("direction must be a single-qubit state")
    nrm = np.linalg.norm(ket)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError("direction must be unit norm")
    q = state.position(label)
    t = state.amplitudes.reshape((2,) * state.n_qubits)
    t = np.tensordot(ket.conj(), t, axes=([0], [q]))
    prob = float(np.linalg.norm(t) ** 2)
    if prob < PROJECTION_EPS:
        raise ValueError(f"incompatible projection: probability {prob} below {PROJECTION_EPS}")
    remaining = tuple(lbl for lbl in state.labels if lbl != label)
    return PureState(t.reshape(-1) / np.sqrt(prob), remaining), prob
