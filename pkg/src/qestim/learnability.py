"""Channel-parameter learnability: derivative span tests on cycle-benchmarking stacks.

A channel parameter is learnable (admits an unbiased estimator under
arbitrary probes, ancillas and sequential uses) iff its channel derivative
is not a linear combination of the other parameters' derivatives.  For
cycle benchmarking the accessible object is the depth-indexed family
``N_d = meas ∘ (noise ∘ gate)^d ∘ prep`` together with a classical depth
register; the register is represented as a direct sum of per-depth blocks
rather than a literal tensor factor, which leaves every span verdict
unchanged while keeping sizes at 16 * |depths| numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import pauli
from .errors import DomainError, InvalidInput, InvalidModel
from .estimability import DEFAULT_SPAN_TOL, EstimabilityVerdict
from .linalg import residual_in_span
from .states import ParameterizedState

DEFAULT_DEPTHS = tuple(range(9))
GRAM_RANK_TOL = 1e-12


@dataclass(frozen=True)
class ParameterizedChannel:
    """Differentiable family theta -> PTM with named parameters."""

    n: int
    param_names: tuple[str, ...]
    eval_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fns: tuple[Callable[[np.ndarray], np.ndarray], ...] | None = None
    fd_step: float = 1e-6
    validator: Callable[[np.ndarray], str | None] | None = None

    @property
    def num_params(self) -> int:
        return len(self.param_names)

    def index_of(self, parameter: int | str) -> int:
        if isinstance(parameter, str):
            return self.param_names.index(parameter)
        return int(parameter)


def evaluate_channel(ch: ParameterizedChannel, theta0) -> tuple[np.ndarray, list[np.ndarray]]:
    """PTM and per-parameter PTM derivatives at theta0 (TP checked at the point)."""
    theta0 = np.asarray(theta0, dtype=float).ravel()
    if theta0.size != ch.num_params:
        raise InvalidInput(f"expected {ch.num_params} parameters, got {theta0.size}")
    if ch.validator is not None:
        msg = ch.validator(theta0)
        if msg:
            raise DomainError(msg)
    ptm, _ = pauli.assert_ptm(ch.eval_fn(theta0))
    if ch.deriv_fns is not None:
        derivs = [np.asarray(f(theta0), dtype=float) for f in ch.deriv_fns]
    else:
        derivs = []
        for i in range(ch.num_params):
            up, down = theta0.copy(), theta0.copy()
            up[i] += ch.fd_step
            down[i] -= ch.fd_step
            derivs.append((np.asarray(ch.eval_fn(up), float)
                           - np.asarray(ch.eval_fn(down), float)) / (2 * ch.fd_step))
    return ptm, derivs


def check_corollary1(ch: ParameterizedChannel, theta0, parameter: int | str,
                     tol: float = DEFAULT_SPAN_TOL) -> EstimabilityVerdict:
    """Span test on channel derivatives; verdict semantics match the state test.

    PTM derivatives are vectorized directly (the Choi map is a linear
    bijection, so the span verdict is identical).  No variance bound is
    defined at channel level: the bound field is NaN when learnable and
    infinite otherwise.
    """
    k = ch.index_of(parameter)
    _, derivs = evaluate_channel(ch, theta0)
    vecs = [d.ravel() for d in derivs]
    others = [v for i, v in enumerate(vecs) if i != k]
    verdict = residual_in_span(vecs[k], others, tol)
    relative = verdict.residual_norm / max(verdict.target_norm, 1e-300)
    if verdict.in_span:
        return EstimabilityVerdict(ch.param_names[k], False, np.inf, relative, tol,
                                   dependency=verdict)
    return EstimabilityVerdict(ch.param_names[k], True, float("nan"), relative, tol)


def choi_state_model(ch: ParameterizedChannel) -> ParameterizedState:
    """The channel's Choi state as a parameterized state (used to cross-check
    the channel criterion against the state criterion)."""

    def eval_fn(theta):
        return pauli.choi_of(ch.eval_fn(theta))

    deriv_fns = None
    if ch.deriv_fns is not None:
        deriv_fns = tuple((lambda f: (lambda theta: pauli.choi_of(f(theta))))(f)
                          for f in ch.deriv_fns)
    return ParameterizedState(dim=4**ch.n, param_names=ch.param_names,
                              eval_fn=eval_fn, deriv_fns=deriv_fns, fd_step=ch.fd_step)


# ---------------------------------------------------------------------------
# Cycle benchmarking models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PtmFamily:
    """One component of a cycle (noise or SPAM): PTM plus its nonzero partials.

    ``partials`` maps global parameter index -> derivative of the PTM.
    """

    eval_fn: Callable[[np.ndarray], np.ndarray]
    partials: dict[int, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class CycleModel:
    """Noisy gate cycle with SPAM: meas ∘ (noise ∘ gate)^d ∘ prep over a depth set."""

    n: int
    param_names: tuple[str, ...]
    theta0: np.ndarray
    depths: tuple[int, ...]
    gate: np.ndarray
    noise: PtmFamily
    spam_prep: PtmFamily
    spam_meas: PtmFamily

    @property
    def num_params(self) -> int:
        return len(self.param_names)

    def index_of(self, parameter: int | str) -> int:
        if isinstance(parameter, str):
            return self.param_names.index(parameter)
        return int(parameter)


def cycle_ptms(m: CycleModel, theta=None) -> tuple[list[np.ndarray], list[list[np.ndarray]]]:
    """Per-depth PTMs A_d and their per-parameter derivatives (product rule).

    Returns ``(ptms, derivs)`` where ``derivs[k][j]`` is the derivative of the
    j-th depth block along parameter k.
    """
    theta = m.theta0 if theta is None else np.asarray(theta, dtype=float)
    zero = np.zeros((4**m.n, 4**m.n))
    step = m.noise.eval_fn(theta) @ m.gate
    dstep = {k: f(theta) @ m.gate for k, f in m.noise.partials.items()}
    prep = m.spam_prep.eval_fn(theta)
    dprep = {k: f(theta) for k, f in m.spam_prep.partials.items()}
    meas = m.spam_meas.eval_fn(theta)
    dmeas = {k: f(theta) for k, f in m.spam_meas.partials.items()}

    dmax = max(m.depths)
    powers = [np.eye(4**m.n)]
    for _ in range(dmax):
        powers.append(step @ powers[-1])
    ptms = [meas @ powers[d] @ prep for d in m.depths]
    derivs = []
    for k in range(m.num_params):
        rows = []
        for d in m.depths:
            acc = zero
            if k in dmeas:
                acc = acc + dmeas[k] @ powers[d] @ prep
            if k in dprep:
                acc = acc + meas @ powers[d] @ dprep[k]
            if k in dstep:
                inner = zero
                for j in range(d):
                    inner = inner + powers[j] @ dstep[k] @ powers[d - 1 - j]
                acc = acc + meas @ inner @ prep
            rows.append(acc)
        derivs.append(rows)
    return ptms, derivs


@dataclass(frozen=True)
class CycleStack:
    """Choi blocks of the depth-register channel, one per depth, weighted uniformly."""

    depths: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]
    derivative_blocks: tuple[tuple[np.ndarray, ...], ...]


def build_cycle_stack(m: CycleModel, theta=None) -> CycleStack:
    """Choi representation of the cycle family: block d is Choi(N_d) / |depths|."""
    if not m.depths:
        raise InvalidInput("depth set must be non-empty")
    ptms, derivs = cycle_ptms(m, theta)
    w = 1.0 / len(m.depths)
    blocks = tuple(w * pauli.choi_of(a) for a in ptms)
    dblocks = tuple(tuple(w * pauli.choi_of(da) for da in rows) for rows in derivs)
    return CycleStack(tuple(m.depths), blocks, dblocks)


# ---------------------------------------------------------------------------
# Learnability report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Relation:
    """A null-space direction rendered around a pivot parameter.

    ``coefficients[name] * theta_name * d/d theta_name`` summed over entries
    annihilates the cycle family; the pivot coefficient is normalized to +1.
    """

    pivot: str
    coefficients: dict[str, float]
    rendering: str


@dataclass(frozen=True)
class LearnabilityReport:
    """Per-parameter learnability verdicts plus the detected null-space relations."""

    param_names: tuple[str, ...]
    verdicts: dict[str, tuple[bool, float]]
    relations: tuple[Relation, ...]
    null_basis: np.ndarray
    depths_used: tuple[int, ...]
    tolerance: float
    gram_rank_tol: float
    raw_scaled: tuple[str, ...]
    scaled_derivatives: np.ndarray

    @property
    def learnable(self) -> tuple[str, ...]:
        return tuple(n for n in self.param_names if self.verdicts[n][0])

    @property
    def unlearnable(self) -> tuple[str, ...]:
        return tuple(n for n in self.param_names if not self.verdicts[n][0])

    def relation_residual(self, coefficients: dict[str, float]) -> float:
        """Residual norm of sum_k c_k * theta_k d_k (relative to the largest
        derivative norm); ~0 iff the combination is a valid null relation."""
        c = np.zeros(len(self.param_names))
        for name, value in coefficients.items():
            c[self.param_names.index(name)] = value
        combo = c @ self.scaled_derivatives
        scale = max(np.linalg.norm(self.scaled_derivatives, axis=1).max(), 1e-300)
        return float(np.linalg.norm(combo) / (scale * max(np.linalg.norm(c), 1e-300)))

    def null_space_contains(self, coefficients: dict[str, float], tol: float | None = None) -> bool:
        return self.relation_residual(coefficients) <= (tol if tol is not None else self.tolerance)

    def relation_for(self, parameter: str) -> Relation | None:
        for r in self.relations:
            if r.pivot == parameter:
                return r
        return None


def _render_relation(pivot: str, coeffs: dict[str, float]) -> str:
    # Null vector c_pivot=1 means pivot*d_pivot = -sum_{k != pivot} c_k * k*d_k.
    moved = [(name, -c) for name, c in coeffs.items()
             if name != pivot and abs(c) > 1e-12]
    moved.sort(key=lambda item: item[1] < 0)
    parts = []
    for i, (name, c) in enumerate(moved):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if abs(mag - 1.0) < 1e-9 else f"{mag:.6g}*"
        term = f"{coef}{name}*d_{name}"
        if i == 0:
            parts.append(term if sign == "+" else f"-{term}")
        else:
            parts.append(f" {sign} {term}")
    return f"{pivot}*d_{pivot} = " + ("".join(parts) or "0")


def learnability_report(m: CycleModel, theta=None, tol: float = DEFAULT_SPAN_TOL,
                        gram_rank_tol: float = GRAM_RANK_TOL) -> LearnabilityReport:
    """Null-space analysis of the log-scaled cycle derivatives.

    Derivatives are scaled by their parameter values (theta_k * d_k), so
    detected relations read as dimensionless identities between relative
    parameter changes.  A parameter is learnable iff its unit vector has no
    component in the null space of the Gram matrix (support test at the
    shared rank tolerance); each unlearnable parameter gets a canonical
    relation: the projection of its unit vector onto the null space.
    """
    theta = m.theta0 if theta is None else np.asarray(theta, dtype=float)
    _, derivs = cycle_ptms(m, theta)
    rows = []
    raw = []
    for k, name in enumerate(m.param_names):
        v = np.concatenate([d.ravel() for d in derivs[k]])
        if theta[k] == 0.0:
            raw.append(name)
        else:
            v = theta[k] * v
        rows.append(v)
    v = np.array(rows)
    gram = v @ v.T
    w, u = np.linalg.eigh(gram)
    cut = gram_rank_tol * max(w.max(initial=0.0), 1e-300)
    null = u[:, w <= cut]
    verdicts = {}
    relations = []
    for k, name in enumerate(m.param_names):
        component = null.T @ _unit_vec(len(m.param_names), k)
        residual = float(np.linalg.norm(component))
        learnable = residual <= tol
        verdicts[name] = (learnable, residual)
        if not learnable:
            direction = null @ component
            direction = direction / direction[k]
            coeffs = {n: float(c) for n, c in zip(m.param_names, direction) if abs(c) > 1e-9}
            relations.append(Relation(name, coeffs, _render_relation(name, coeffs)))
    return LearnabilityReport(m.param_names, verdicts, tuple(relations), null,
                              tuple(m.depths), tol, gram_rank_tol, tuple(raw), v)


def _unit_vec(m: int, k: int) -> np.ndarray:
    e = np.zeros(m)
    e[k] = 1.0
    return e


# ---------------------------------------------------------------------------
# The Rz(phi) cycle model
# ---------------------------------------------------------------------------

def rz_noise_ptm(lam1: float, lam2: float, alpha: float, theta: float) -> np.ndarray:
    """Twirled single-qubit noise: XY rotation-with-contraction, Z damping and shift.

    Canonical index order (I, Z, X, Y): lam1 and theta act on the XY block,
    lam2 and the shift alpha on the Z sector.  A mixture of depolarizing,
    dephasing, amplitude-damping and coherent over-rotation effects.
    """
    a = np.eye(4)
    c, s = np.cos(theta), np.sin(theta)
    a[2, 2] = a[3, 3] = lam1 * c
    a[2, 3] = lam1 * s
    a[3, 2] = -lam1 * s
    a[1, 0] = alpha
    a[1, 1] = lam2
    return a


def _rz_noise_partials(lam1, lam2, alpha, theta):
    c, s = np.cos(theta), np.sin(theta)
    d_lam1 = np.zeros((4, 4))
    d_lam1[2, 2] = d_lam1[3, 3] = c
    d_lam1[2, 3] = s
    d_lam1[3, 2] = -s
    d_lam2 = np.zeros((4, 4))
    d_lam2[1, 1] = 1.0
    d_alpha = np.zeros((4, 4))
    d_alpha[1, 0] = 1.0
    d_theta = np.zeros((4, 4))
    d_theta[2, 2] = d_theta[3, 3] = -lam1 * s
    d_theta[2, 3] = lam1 * c
    d_theta[3, 2] = -lam1 * c
    return d_lam1, d_lam2, d_alpha, d_theta


def closed_form_rz_ad(d: int, phi: float, lam1: float, lam2: float, alpha: float,
                      theta: float, spam_prep: Sequence[float],
                      spam_meas: Sequence[float]) -> np.ndarray:
    """Closed-form depth-d PTM of the Rz cycle (matches explicit composition).

    The damped-shift corner entry carries the geometric sum of the Z-sector
    eigenvalue: meas_3 * alpha * (1 - lam2^d) / (1 - lam2); the X/Y block is
    meas_i * prep_j * lam1^d * rot(d * (phi + theta)).
    """
    l1s, l2s, l3s = spam_prep
    l1m, l2m, l3m = spam_meas
    tp = phi + theta
    c, s = np.cos(d * tp), np.sin(d * tp)
    a = np.eye(4)
    a[2, 2] = l1m * l1s * lam1**d * c
    a[2, 3] = l1m * l2s * lam1**d * s
    a[3, 2] = -l2m * l1s * lam1**d * s
    a[3, 3] = l2m * l2s * lam1**d * c
    geom = float(d) if abs(1.0 - lam2) < 1e-14 else (1.0 - lam2**d) / (1.0 - lam2)
    a[1, 0] = l3m * alpha * geom
    a[1, 1] = l3m * l3s * lam2**d
    return a


def _diag_spam_family(offset: int, positions, size: int) -> PtmFamily:
    # Pauli-diagonal PTM: theta[offset + i] is the eigenvalue at diagonal
    # position positions[i] (canonical index order).
    positions = list(positions)

    def eval_fn(theta):
        d = np.ones(size)
        for i, pos in enumerate(positions):
            d[pos] = theta[offset + i]
        return np.diag(d)

    def partial(k):
        def f(theta):
            d = np.zeros((size, size))
            pos = positions[k - offset]
            d[pos, pos] = 1.0
            return d
        return f

    return PtmFamily(eval_fn, {k: partial(k) for k in range(offset, offset + len(positions))})


def rz_cycle_model(phi: float = 0.3, lam1: float = 0.95, lam2: float = 0.92,
                   alpha: float = 0.05, theta: float = 0.05,
                   spam_prep: Sequence[float] = (0.97, 0.94, 0.91),
                   spam_meas: Sequence[float] = (0.96, 0.93, 0.92),
                   depths: Sequence[int] = DEFAULT_DEPTHS,
                   split_phase: bool = False) -> CycleModel:
    """Cycle benchmarking of the twirled noise on an Rz(phi) gate with Pauli SPAM.

    By default the gate angle phi is treated as known and the rotation
    parameter exposed for learnability is the combined angle
    theta_prime = phi + theta (the only combination entering the cycle).
    With ``split_phase=True`` the gate is folded into the parameterized step
    and phi and theta appear as separate parameters; each is then individually
    unlearnable (only their sum is), which serves as a regression check.
    """
    for name, lam in (("lam1", lam1), ("lam2", lam2)):
        if not 0.0 < lam <= 1.0:
            raise InvalidModel(f"{name} must lie in (0, 1]")
    for name, vals in (("spam_prep", spam_prep), ("spam_meas", spam_meas)):
        if len(vals) != 3 or not all(0.0 < v <= 1.0 for v in vals):
            raise InvalidModel(f"{name} must be three eigenvalues in (0, 1]")
    if abs(alpha) >= 1.0 - lam2:
        raise InvalidModel("need |alpha| < 1 - lam2 (subnormalization guard)")
    if not pauli.choi_is_positive(rz_noise_ptm(lam1, lam2, alpha, theta)):
        raise InvalidModel("noise PTM is not completely positive")

    depths = tuple(sorted(set(int(d) for d in depths)))
    if any(d < 0 for d in depths):
        raise InvalidInput("depths must be non-negative")
    if split_phase:
        names = ("phi", "theta", "lam1", "lam2", "alpha",
                 "lam1S", "lam2S", "lam3S", "lam1M", "lam2M", "lam3M")
        theta0 = np.array([phi, theta, lam1, lam2, alpha, *spam_prep, *spam_meas])
        gate = np.eye(4)

        def noise_eval(t):
            return rz_noise_ptm(t[2], t[3], t[4], t[1]) @ pauli.rotation_xy_ptm(t[0])

        def noise_partial(k):
            def f(t):
                dl1, dl2, dal, dth = _rz_noise_partials(t[2], t[3], t[4], t[1])
                rot = pauli.rotation_xy_ptm(t[0])
                if k == 0:
                    drot = np.zeros((4, 4))
                    c, s = np.cos(t[0]), np.sin(t[0])
                    drot[2, 2] = drot[3, 3] = -s
                    drot[2, 3] = c
                    drot[3, 2] = -c
                    return rz_noise_ptm(t[2], t[3], t[4], t[1]) @ drot
                return {1: dth, 2: dl1, 3: dl2, 4: dal}[k] @ rot
            return f

        noise = PtmFamily(noise_eval, {k: noise_partial(k) for k in range(5)})
        prep = _diag_spam_family(5, (2, 3, 1), 4)
        meas = _diag_spam_family(8, (2, 3, 1), 4)
    else:
        names = ("lam1", "lam2", "theta_prime", "alpha",
                 "lam1S", "lam2S", "lam3S", "lam1M", "lam2M", "lam3M")
        theta0 = np.array([lam1, lam2, phi + theta, alpha, *spam_prep, *spam_meas])
        gate = pauli.rotation_xy_ptm(phi)

        def noise_eval(t):
            return rz_noise_ptm(t[0], t[1], t[3], t[2] - phi)

        def noise_partial(k):
            def f(t):
                dl1, dl2, dal, dth = _rz_noise_partials(t[0], t[1], t[3], t[2] - phi)
                return {0: dl1, 1: dl2, 2: dth, 3: dal}[k]
            return f

        noise = PtmFamily(noise_eval, {k: noise_partial(k) for k in range(4)})
        prep = _diag_spam_family(4, (2, 3, 1), 4)
        meas = _diag_spam_family(7, (2, 3, 1), 4)
    return CycleModel(1, names, theta0, depths, gate, noise, prep, meas)


# ---------------------------------------------------------------------------
# The CNOT cycle model
# ---------------------------------------------------------------------------

def cnot_ptm() -> np.ndarray:
    return pauli.unitary_ptm(pauli.cnot_unitary())


def cnot_commutant() -> tuple[tuple[pauli.PauliIndex, ...],
                              tuple[tuple[pauli.PauliIndex, pauli.PauliIndex], ...]]:
    """Partition of the 15 nontrivial two-qubit Paulis under CNOT conjugation.

    Returns (fixed, swapped_pairs) classified by matrix conjugation; each pair
    is ordered with the lower canonical index first.
    """
    u = pauli.cnot_unitary()
    fixed, pairs, seen = [], [], set()
    for a in pauli.pauli_indices(2)[1:]:
        if a in seen:
            continue
        b, _ = pauli.conjugate_pauli_index(u, a)
        if b == a:
            fixed.append(a)
        else:
            pairs.append((a, b))
            seen.add(b)
    return tuple(fixed), tuple(pairs)


def cnot_conjugation_map() -> dict[str, tuple[str, int]]:
    """label -> (conjugated label, sign) for all 15 nontrivial two-qubit Paulis."""
    u = pauli.cnot_unitary()
    out = {}
    for a in pauli.pauli_indices(2)[1:]:
        b, sign = pauli.conjugate_pauli_index(u, a)
        out[a.label] = (b.label, sign)
    return out


def cnot_cycle_model(eigenvalues, spam_prep=None, spam_meas=None,
                     depths: Sequence[int] = DEFAULT_DEPTHS) -> CycleModel:
    """Cycle benchmarking of Pauli noise on the CNOT gate with Pauli SPAM.

    ``eigenvalues``, ``spam_prep`` and ``spam_meas`` each supply the 15
    nontrivial Pauli eigenvalues (sequence in canonical order, or a mapping
    from labels like "XI"); SPAM defaults to mild damping.  All three
    channels must be completely positive.
    """
    labels = [a.label for a in pauli.pauli_indices(2)[1:]]

    def as_vector(vals, default):
        if vals is None:
            return np.full(15, default)
        if isinstance(vals, dict):
            out = np.ones(15)
            unknown = set(vals) - set(labels)
            if unknown:
                raise InvalidInput(f"unknown Pauli labels: {sorted(unknown)}")
            for lbl, v in vals.items():
                out[labels.index(lbl)] = float(v)
            return out
        out = np.asarray(vals, dtype=float).ravel()
        if out.size != 15:
            raise InvalidInput("expected 15 Pauli eigenvalues")
        return out

    lam = as_vector(eigenvalues, None)
    lam_s = as_vector(spam_prep, 0.97)
    lam_m = as_vector(spam_meas, 0.96)
    for name, vec in (("noise", lam), ("spam_prep", lam_s), ("spam_meas", lam_m)):
        rates = pauli.eigenvalues_to_rates(2, np.concatenate([[1.0], vec]))
        if rates.min() < -1e-9:
            raise InvalidModel(f"{name} eigenvalues are not completely positive "
                               f"(min rate {rates.min():.3e})")

    names = (*(f"lam_{l}" for l in labels),
             *(f"lamS_{l}" for l in labels),
             *(f"lamM_{l}" for l in labels))
    theta0 = np.concatenate([lam, lam_s, lam_m])
    depths = tuple(sorted(set(int(d) for d in depths)))

    noise = _diag_spam_family(0, range(1, 16), 16)
    prep = _diag_spam_family(15, range(1, 16), 16)
    meas = _diag_spam_family(30, range(1, 16), 16)
    return CycleModel(2, names, theta0, depths, cnot_ptm(), noise, prep, meas)


# ---------------------------------------------------------------------------
# Builtin single-channel families (for the channel analysis front-end)
# ---------------------------------------------------------------------------

def depolarizing_family(n: int = 1) -> ParameterizedChannel:
    """Single-parameter depolarizing channel: PTM diag(1, 1-p, ..., 1-p)."""
    size = 4**n

    def eval_fn(theta):
        d = np.ones(size) * (1.0 - theta[0])
        d[0] = 1.0
        return np.diag(d)

    def d_p(theta):
        d = -np.ones(size)
        d[0] = 0.0
        return np.diag(d)

    return ParameterizedChannel(n, ("p",), eval_fn, (d_p,))


def pauli_eigenvalue_family(n: int) -> ParameterizedChannel:
    """Pauli channel parameterized by its nontrivial eigenvalues."""
    labels = [a.label for a in pauli.pauli_indices(n)[1:]]
    size = 4**n

    def eval_fn(theta):
        return np.diag(np.concatenate([[1.0], theta]))

    def partial(k):
        def f(theta):
            d = np.zeros((size, size))
            d[1 + k, 1 + k] = 1.0
            return d
        return f

    return ParameterizedChannel(n, tuple(f"lam_{l}" for l in labels), eval_fn,
                                tuple(partial(k) for k in range(size - 1)))


def rz_noise_family() -> ParameterizedChannel:
    """The four-parameter twirled Rz-noise family (lam1, lam2, alpha, theta)."""

    def eval_fn(t):
        return rz_noise_ptm(*t)

    def partial(k):
        def f(t):
            return _rz_noise_partials(*t)[k]
        return f

    return ParameterizedChannel(1, ("lam1", "lam2", "alpha", "theta"), eval_fn,
                                tuple(partial(k) for k in range(4)))


def shared_rate_family() -> ParameterizedChannel:
    """Two dephasing parameters entering only through their sum: neither is learnable."""

    def eval_fn(t):
        lam = max(1.0 - 2.0 * (t[0] + t[1]), -1.0)
        return np.diag([1.0, 1.0, lam, lam])

    def d_k(t):
        return np.diag([0.0, 0.0, -2.0, -2.0])

    return ParameterizedChannel(1, ("p", "q"), eval_fn, (d_k, d_k))
