"""Pauli operators, Pauli channels, transfer matrices, Choi states and twirls.

Index convention used everywhere: a Pauli is labelled by a pair of n-bit
vectors ``a = (x, z)`` with matrix ``P_a = prod_i i^(x_i z_i) X_i^{x_i} Z_i^{z_i}``.
Transfer-matrix rows and columns run over these labels in lexicographic
order with x major (qubit 1 is the most significant bit), so index
``k = int(x) * 2^n + int(z)``.  PTM entries are
``A[a, b] = tr(P_a N(P_b)) / 2^n``; a trace-preserving channel has first row
``(1, 0, ..., 0)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidChannel, InvalidInput, Unsupported

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_SINGLE = {(0, 0): _I, (1, 0): _X, (1, 1): _Y, (0, 1): _Z}
_LABEL = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


@dataclass(frozen=True)
class PauliIndex:
    """Symplectic label (x, z) of an n-qubit Pauli operator."""

    x: tuple[int, ...]
    z: tuple[int, ...]

    def __post_init__(self):
        if len(self.x) != len(self.z):
            raise InvalidInput("x and z must have equal length")
        if any(b not in (0, 1) for b in self.x + self.z):
            raise InvalidInput("x and z must be binary vectors")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def is_identity(self) -> bool:
        return not any(self.x) and not any(self.z)

    @property
    def label(self) -> str:
        return "".join(_LABEL[(xi, zi)] for xi, zi in zip(self.x, self.z))

    @classmethod
    def from_label(cls, label: str) -> "PauliIndex":
        inv = {v: k for k, v in _LABEL.items()}
        try:
            bits = [inv[c] for c in label.upper()]
        except KeyError as exc:
            raise InvalidInput(f"unknown Pauli letter in {label!r}") from exc
        return cls(tuple(b[0] for b in bits), tuple(b[1] for b in bits))

    def symplectic(self, other: "PauliIndex") -> int:
        """Symplectic form <a, b> = x_a.z_b + z_a.x_b mod 2 (0 iff commuting)."""
        s = sum(xa * zb for xa, zb in zip(self.x, other.z))
        s += sum(za * xb for za, xb in zip(self.z, other.x))
        return s % 2


@lru_cache(maxsize=None)
def pauli_indices(n: int) -> tuple[PauliIndex, ...]:
    """All 4^n Pauli labels in the canonical (x-major lexicographic) order."""
    bits = list(itertools.product((0, 1), repeat=n))
    return tuple(PauliIndex(x, z) for x in bits for z in bits)


def index_position(a: PauliIndex) -> int:
    ix = int("".join(map(str, a.x)), 2) if a.n else 0
    iz = int("".join(map(str, a.z)), 2) if a.n else 0
    return ix * 2**a.n + iz


@lru_cache(maxsize=None)
def _pauli_matrices(n: int) -> tuple[np.ndarray, ...]:
    mats = []
    for a in pauli_indices(n):
        m = np.array([[1.0]], dtype=complex)
        for xi, zi in zip(a.x, a.z):
            m = np.kron(m, _SINGLE[(xi, zi)])
        m.setflags(write=False)
        mats.append(m)
    return tuple(mats)


def pauli_matrix(a: PauliIndex) -> np.ndarray:
    """Dense 2^n x 2^n matrix of P_a (Hermitian, unitary, squares to identity)."""
    return _pauli_matrices(a.n)[index_position(a)]


def num_qubits(dim4: int) -> int:
    n = round(np.log2(dim4) / 2)
    if 4**n != dim4:
        raise InvalidInput(f"size {dim4} is not 4^n")
    return n


def pauli_coefficients(rho, n: int) -> np.ndarray:
    """Expansion coefficients c_a = tr(P_a rho) / 2^n so that rho = sum_a c_a P_a."""
    rho = np.asarray(rho, dtype=complex)
    d = 2**n
    if rho.shape != (d, d):
        raise InvalidInput(f"operator shape {rho.shape} does not match n={n}")
    return np.array([np.trace(p @ rho).real / d for p in _pauli_matrices(n)])


def operator_from_coefficients(coeffs, n: int) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for c, p in zip(coeffs, _pauli_matrices(n)):
        if c != 0.0:
            out = out + c * p
    return out


# ---------------------------------------------------------------------------
# Pauli channels: error rates <-> eigenvalues
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _symplectic_sign_matrix(n: int) -> np.ndarray:
    idx = pauli_indices(n)
    m = np.empty((len(idx), len(idx)))
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            m[i, j] = -1.0 if a.symplectic(b) else 1.0
    return m


@dataclass(frozen=True)
class PauliChannel:
    """Pauli channel stored as full rate and eigenvalue vectors (canonical order).

    ``rates[0]`` is the no-error probability; ``eigenvalues[0] == 1``.  The two
    representations are related by the symplectic Walsh-Hadamard transform
    ``lambda_b = sum_a (-1)^<a,b> p_a`` and its inverse (same transform scaled
    by 4^-n).
    """

    n: int
    rates: np.ndarray
    eigenvalues: np.ndarray

    @classmethod
    def from_rates(cls, n: int, rates) -> "PauliChannel":
        p = _rates_vector(n, rates)
        if np.any(p < -1e-12):
            raise InvalidChannel("Pauli error rates must be nonnegative")
        if p[1:].sum() > 1.0 + 1e-12:
            raise InvalidChannel("Pauli error rates must sum to at most one")
        lam = _symplectic_sign_matrix(n) @ p
        return cls(n, p, lam)

    @classmethod
    def from_eigenvalues(cls, n: int, eigenvalues) -> "PauliChannel":
        lam = _eigenvalue_vector(n, eigenvalues)
        p = _symplectic_sign_matrix(n) @ lam / 4**n
        return cls(n, p, lam)

    def rate_of(self, a: PauliIndex) -> float:
        return float(self.rates[index_position(a)])

    def eigenvalue_of(self, a: PauliIndex) -> float:
        return float(self.eigenvalues[index_position(a)])


def _rates_vector(n: int, rates) -> np.ndarray:
    idx = pauli_indices(n)
    if isinstance(rates, dict):
        p = np.zeros(len(idx))
        for key, val in rates.items():
            a = key if isinstance(key, PauliIndex) else PauliIndex.from_label(str(key))
            if a.is_identity:
                raise InvalidInput("specify only non-identity error rates")
            p[index_position(a)] = float(val)
        p[0] = 1.0 - p[1:].sum()
        return p
    p = np.asarray(rates, dtype=float).ravel()
    if p.size == len(idx) - 1:
        p = np.concatenate([[1.0 - p.sum()], p])
    if p.size != len(idx):
        raise InvalidInput(f"expected {len(idx)} (or {len(idx)-1}) rates, got {p.size}")
    return p


def _eigenvalue_vector(n: int, eigenvalues) -> np.ndarray:
    idx = pauli_indices(n)
    if isinstance(eigenvalues, dict):
        lam = np.ones(len(idx))
        for key, val in eigenvalues.items():
            a = key if isinstance(key, PauliIndex) else PauliIndex.from_label(str(key))
            lam[index_position(a)] = float(val)
    else:
        lam = np.asarray(eigenvalues, dtype=float).ravel()
        if lam.size == len(idx) - 1:
            lam = np.concatenate([[1.0], lam])
    if lam.size != len(idx):
        raise InvalidInput(f"expected {len(idx)} (or {len(idx)-1}) eigenvalues, got {lam.size}")
    if abs(lam[0] - 1.0) > 1e-12:
        raise InvalidChannel("identity eigenvalue must be 1 (trace preservation)")
    return lam


def rates_to_eigenvalues(n: int, rates) -> np.ndarray:
    """Pauli eigenvalues lambda_b = sum_a (-1)^<a,b> p_a from error rates."""
    return PauliChannel.from_rates(n, rates).eigenvalues


def eigenvalues_to_rates(n: int, eigenvalues) -> np.ndarray:
    """Inverse transform; round-trips with :func:`rates_to_eigenvalues` exactly."""
    return PauliChannel.from_eigenvalues(n, eigenvalues).rates


# ---------------------------------------------------------------------------
# Pauli transfer matrices
# ---------------------------------------------------------------------------

def assert_ptm(a, tol: float = 1e-9) -> np.ndarray:
    """Validate shape and the trace-preservation row, return a float copy."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidChannel(f"PTM must be square, got {a.shape}")
    n = num_qubits(a.shape[0])
    first = np.zeros(a.shape[0])
    first[0] = 1.0
    if np.abs(a[0] - first).max() > tol:
        raise InvalidChannel("PTM first row must be (1, 0, ..., 0) for a TP channel")
    return a.copy(), n


def ptm_of(channel, n: int | None = None) -> np.ndarray:
    """Pauli transfer matrix of a channel given as Kraus list, PauliChannel or PTM.

    A Pauli channel maps to the diagonal matrix of its eigenvalues.
    """
    if isinstance(channel, PauliChannel):
        return np.diag(channel.eigenvalues)
    if isinstance(channel, np.ndarray) and channel.ndim == 2 and not np.iscomplexobj(channel):
        a, _ = assert_ptm(channel)
        return a
    kraus = [np.asarray(k, dtype=complex) for k in channel]
    d = kraus[0].shape[0]
    if n is None:
        n = round(np.log2(d))
    if 2**n != d:
        raise InvalidInput("Kraus operators must act on 2^n dimensions")
    tp = sum(k.conj().T @ k for k in kraus)
    if np.abs(tp - np.eye(d)).max() > 1e-9:
        raise InvalidChannel("Kraus operators are not trace-preserving within 1e-9")
    mats = _pauli_matrices(n)
    a = np.empty((4**n, 4**n))
    for j, pj in enumerate(mats):
        out = sum(k @ pj @ k.conj().T for k in kraus)
        for i, pi in enumerate(mats):
            a[i, j] = np.trace(pi @ out).real / d
    return a


def unitary_ptm(u) -> np.ndarray:
    """PTM of the unitary channel rho -> U rho U†."""
    return ptm_of([np.asarray(u, dtype=complex)])


def compose(a, b) -> np.ndarray:
    """PTM of the composition 'a after b' (matrix product a @ b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise InvalidInput("composed PTMs must be square with equal shape")
    return a @ b


@lru_cache(maxsize=None)
def _tensor_permutation(n1: int, n2: int) -> np.ndarray:
    # kron(A1, A2) carries joint index (i1, i2); the canonical order interleaves
    # the x and z halves instead, so permute.
    n = n1 + n2
    perm = np.empty(4**n, dtype=int)
    for i1, a1 in enumerate(pauli_indices(n1)):
        for i2, a2 in enumerate(pauli_indices(n2)):
            joint = PauliIndex(a1.x + a2.x, a1.z + a2.z)
            perm[index_position(joint)] = i1 * 4**n2 + i2
    return perm


def tensor(a, b) -> np.ndarray:
    """PTM of the tensor product channel in the canonical joint index order."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = num_qubits(a.shape[0]), num_qubits(b.shape[0])
    perm = _tensor_permutation(n1, n2)
    k = np.kron(a, b)
    return k[perm][:, perm]


def apply_ptm(a, rho) -> np.ndarray:
    """Act with a PTM on a density matrix via its Pauli coefficients."""
    a = np.asarray(a, dtype=float)
    n = num_qubits(a.shape[0])
    return operator_from_coefficients(a @ pauli_coefficients(rho, n), n)


# ---------------------------------------------------------------------------
# Choi states
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _transpose_signs(n: int) -> np.ndarray:
    # c_a = +1 for symmetric Paulis (even number of Y factors), -1 otherwise.
    return np.array([(-1) ** (sum(xi * zi for xi, zi in zip(a.x, a.z)) % 2)
                     for a in pauli_indices(n)])


def choi_of(ptm) -> np.ndarray:
    """Trace-one Choi state (N ⊗ id)(|Psi><Psi|) of the channel with the given PTM.

    |Psi> is the normalized maximally entangled state, so
    Choi = 4^-n sum_ab c_b A[a, b] P_a ⊗ P_b with c_b the transpose sign of P_b.
    The map is linear, so it also applies to PTM derivatives (first row zero).
    """
    a = np.asarray(ptm, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"PTM must be square, got {a.shape}")
    n = num_qubits(a.shape[0])
    mats = _pauli_matrices(n)
    c = _transpose_signs(n)
    d2 = 4**n
    choi = np.zeros((d2, d2), dtype=complex)
    for i in range(len(mats)):
        for j in range(len(mats)):
            w = c[j] * a[i, j]
            if w != 0.0:
                choi += w * np.kron(mats[i], mats[j])
    return choi / d2


def ptm_of_choi(choi) -> np.ndarray:
    """Inverse of :func:`choi_of`; exact round trip for valid inputs."""
    choi = np.asarray(choi, dtype=complex)
    if choi.ndim != 2 or choi.shape[0] != choi.shape[1]:
        raise InvalidInput(f"Choi matrix must be square, got {choi.shape}")
    n = num_qubits(choi.shape[0])
    mats = _pauli_matrices(n)
    c = _transpose_signs(n)
    a = np.empty((4**n, 4**n))
    for i in range(len(mats)):
        for j in range(len(mats)):
            a[i, j] = c[j] * np.trace(np.kron(mats[i], mats[j]) @ choi).real
    return a


def choi_is_positive(ptm, tol: float = 1e-9) -> bool:
    w = np.linalg.eigvalsh(choi_of(ptm))
    return bool(w.min() >= -tol)


# ---------------------------------------------------------------------------
# Symmetric Clifford twirling
# ---------------------------------------------------------------------------

def symmetric_clifford_twirl(ptm) -> np.ndarray:
    """Average of the channel over the Z-symmetric Clifford group, in closed form.

    Entry rules, with dz = z XOR z' and m = x AND dz (elementwise):
      * x != x'           -> 0
      * x == x' == 0      -> unchanged
      * x == x' != 0      -> (-1)^(z.m) * mean_v (-1)^(v.m) A[(x,v), (x,v+dz)]
    """
    a, n = assert_ptm(ptm)
    idx = pauli_indices(n)
    bits = list(itertools.product((0, 1), repeat=n))
    out = np.zeros_like(a)
    for p in idx:
        i = index_position(p)
        for q in idx:
            if p.x != q.x:
                continue
            j = index_position(q)
            if not any(p.x):
                out[i, j] = a[i, j]
                continue
            dz = tuple(zi ^ zj for zi, zj in zip(p.z, q.z))
            m = tuple(xi & di for xi, di in zip(p.x, dz))
            pref = (-1) ** (sum(zi & mi for zi, mi in zip(p.z, m)) % 2)
            acc = 0.0
            for v in bits:
                row = index_position(PauliIndex(p.x, v))
                col = index_position(PauliIndex(p.x, tuple(vi ^ di for vi, di in zip(v, dz))))
                sign = (-1) ** (sum(vi & mi for vi, mi in zip(v, m)) % 2)
                acc += sign * a[row, col]
            out[i, j] = pref * acc / 2**n
    return out


@lru_cache(maxsize=None)
def _zsym_clifford_unitaries(n: int) -> tuple[np.ndarray, ...]:
    # C = prod CZ_ij^nu prod S_i†^mu prod Z_i^xi, enumerated over all exponent
    # choices; global phases are irrelevant at PTM level.
    if n > 2:
        raise Unsupported("brute-force twirl supports n <= 2")
    d = 2**n
    diag_z = [np.array([1.0 if ((b >> (n - 1 - q)) & 1) == 0 else -1.0 for b in range(d)])
              for q in range(n)]
    diag_sdg = [np.array([1.0 + 0j if ((b >> (n - 1 - q)) & 1) == 0 else -1j for b in range(d)])
                for q in range(n)]
    cz_pairs = list(itertools.combinations(range(n), 2))
    diag_cz = [np.array([-1.0 if (((b >> (n - 1 - i)) & 1) and ((b >> (n - 1 - j)) & 1)) else 1.0
                         for b in range(d)]) for i, j in cz_pairs]
    out = []
    for nu in itertools.product((0, 1), repeat=len(cz_pairs)):
        for mu in itertools.product((0, 1), repeat=n):
            for xi in itertools.product((0, 1), repeat=n):
                diag = np.ones(d, dtype=complex)
                for k, v in enumerate(nu):
                    if v:
                        diag = diag * diag_cz[k]
                for q in range(n):
                    if mu[q]:
                        diag = diag * diag_sdg[q]
                for q in range(n):
                    if xi[q]:
                        diag = diag * diag_z[q]
                u = np.diag(diag)
                u.setflags(write=False)
                out.append(u)
    return tuple(out)


def zsym_clifford_group_size(n: int) -> int:
    return 2 ** (n * (n + 1) // 2 + n)


def brute_force_twirl(ptm) -> np.ndarray:
    """Matrix-level group average E_C[C† ∘ N ∘ C]; oracle for the closed form (n <= 2)."""
    a, n = assert_ptm(ptm)
    acc = np.zeros_like(a)
    for u in _zsym_clifford_unitaries(n):
        au = unitary_ptm(u)
        aud = unitary_ptm(u.conj().T)
        acc += aud @ a @ au
    return acc / len(_zsym_clifford_unitaries(n))


# ---------------------------------------------------------------------------
# Conjugation bookkeeping
# ---------------------------------------------------------------------------

def conjugate_pauli_index(u, a: PauliIndex) -> tuple[PauliIndex, int]:
    """Classify U P_a U† as (P_b, sign); raises if it is not a signed Pauli."""
    u = np.asarray(u, dtype=complex)
    n = a.n
    out = u @ pauli_matrix(a) @ u.conj().T
    d = 2**n
    for b in pauli_indices(n):
        ov = np.trace(pauli_matrix(b) @ out) / d
        if abs(ov) > 0.5:
            sign = int(round(ov.real))
            if abs(ov - sign) > 1e-9:
                raise InvalidInput("conjugation does not map Pauli to a signed Pauli")
            return b, sign
    raise InvalidInput("conjugation does not map Pauli to a signed Pauli")


def cnot_unitary() -> np.ndarray:
    u = np.eye(4, dtype=complex)
    u[[2, 3]] = u[[3, 2]]
    return u


def rz_unitary(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def rotation_xy_ptm(angle: float) -> np.ndarray:
    """Single-qubit PTM with XY block [[cos, sin], [-sin, cos]] and Z fixed.

    Index order is the canonical (I, Z, X, Y).  Equals the PTM of
    exp(+i * angle * Z / 2); the sign of the generator is a labelling
    convention, fixed so that composing a rotation by phi with an
    over-rotating noise angle theta yields the combined angle phi + theta.
    """
    a = np.eye(4)
    c, s = np.cos(angle), np.sin(angle)
    a[2, 2] = a[3, 3] = c
    a[2, 3] = s
    a[3, 2] = -s
    return a
