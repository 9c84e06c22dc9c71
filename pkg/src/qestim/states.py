"""Parameterized density-matrix models and the builtin probe families.

A :class:`ParameterizedState` is a differentiable map ``theta -> rho(theta)``
with named parameters.  Derivatives come either from user-supplied analytic
maps (all builtins provide them) or from Hermitian-symmetrized central finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import pauli
from .errors import DomainError, InvalidInput, InvalidModel
from .linalg import assert_hermitian

TRACE_TOL = 1e-9
PSD_TOL = 1e-9
DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class ParameterizedState:
    """Differentiable family of density matrices with named parameters.

    ``eval_fn`` maps a parameter vector to a dim x dim Hermitian matrix.
    ``deriv_fns`` optionally supplies one analytic derivative map per
    parameter; otherwise central finite differences with step ``fd_step``
    are used.  ``domain`` is a per-parameter closed box; ``domain_validator``
    may impose joint constraints (return an error string to reject).
    ``deriv_traces`` records the expected trace of each derivative (zero for
    a trace-preserving parameterization; the GHZ block weights p_x are the
    deliberate exception with unit-trace derivatives).
    """

    dim: int
    param_names: tuple[str, ...]
    eval_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fns: tuple[Callable[[np.ndarray], np.ndarray], ...] | None = None
    fd_step: float = DEFAULT_FD_STEP
    domain: tuple[tuple[float, float], ...] | None = None
    domain_validator: Callable[[np.ndarray], str | None] | None = None
    deriv_traces: tuple[float, ...] | None = None
    kind: str = "explicit"

    @property
    def num_params(self) -> int:
        return len(self.param_names)

    def check_domain(self, theta: np.ndarray) -> None:
        if self.domain is not None:
            for name, value, (lo, hi) in zip(self.param_names, theta, self.domain):
                if not lo <= value <= hi:
                    raise DomainError(f"parameter {name}={value} outside [{lo}, {hi}]")
        if self.domain_validator is not None:
            msg = self.domain_validator(theta)
            if msg:
                raise DomainError(msg)


@dataclass(frozen=True)
class EvaluatedModel:
    """A model frozen at a fiducial point: the state and one derivative per parameter."""

    rho: np.ndarray
    derivs: tuple[np.ndarray, ...]
    theta0: np.ndarray
    param_names: tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def num_params(self) -> int:
        return len(self.derivs)

    def index_of(self, parameter: int | str) -> int:
        if isinstance(parameter, str):
            return self.param_names.index(parameter)
        return int(parameter)


def evaluate(model: ParameterizedState, theta0) -> EvaluatedModel:
    """Evaluate a model and its derivatives at ``theta0``.

    Raises :class:`DomainError` if ``theta0`` (or a finite-difference step)
    leaves the declared domain and :class:`InvalidModel` if the state fails
    its trace/positivity invariants at ``theta0``.
    """
    theta0 = np.asarray(theta0, dtype=float).ravel()
    if theta0.size != model.num_params:
        raise InvalidInput(f"expected {model.num_params} parameters, got {theta0.size}")
    model.check_domain(theta0)
    rho = assert_hermitian(model.eval_fn(theta0), tol=1e-10, name="rho(theta0)")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
        raise InvalidModel(f"state trace {np.trace(rho).real} deviates from 1 beyond {TRACE_TOL}")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise InvalidModel("state has an eigenvalue below -1e-9")
    if model.deriv_fns is not None:
        derivs = [assert_hermitian(f(theta0), tol=1e-9, name="derivative")
                  for f in model.deriv_fns]
    else:
        derivs = [_fd_derivative(model, theta0, i) for i in range(model.num_params)]
    expected_traces = model.deriv_traces or (0.0,) * model.num_params
    for name, d, t in zip(model.param_names, derivs, expected_traces):
        if abs(np.trace(d).real - t) > 1e-8:
            raise InvalidModel(f"derivative for {name} has trace {np.trace(d).real}, expected {t}")
    return EvaluatedModel(rho, tuple(derivs), theta0, model.param_names)


def _fd_derivative(model: ParameterizedState, theta0: np.ndarray, i: int) -> np.ndarray:
    h = model.fd_step
    up, down = theta0.copy(), theta0.copy()
    up[i] += h
    down[i] -= h
    model.check_domain(up)
    model.check_domain(down)
    d = (np.asarray(model.eval_fn(up), complex) - np.asarray(model.eval_fn(down), complex)) / (2 * h)
    return 0.5 * (d + d.conj().T)


# ---------------------------------------------------------------------------
# Phase encoding helpers
# ---------------------------------------------------------------------------

def _total_z(n: int) -> np.ndarray:
    acc = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n):
        bits = [(0, 1) if k == q else (0, 0) for k in range(n)]
        acc += pauli.pauli_matrix(pauli.PauliIndex(tuple(b[0] for b in bits),
                                                   tuple(b[1] for b in bits)))
    return acc


def phase_unitary(n: int, phi: float) -> np.ndarray:
    """Encoding unitary exp(-i phi/2 * sum_i Z_i)."""
    w, v = np.linalg.eigh(_total_z(n))
    return (v * np.exp(-0.5j * phi * w)) @ v.conj().T


def plus_state(n: int) -> np.ndarray:
    """|+><+|^(tensor n), the default noisy-sensing probe."""
    plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    out = np.array([[1.0]], dtype=complex)
    for _ in range(n):
        out = np.kron(out, plus)
    return out


# ---------------------------------------------------------------------------
# Builtin probe families
# ---------------------------------------------------------------------------

def naive_phase_probe(n: int, probe=None) -> ParameterizedState:
    """Fixed n-qubit probe through exp(-i phi/2 sum Z) followed by unknown Pauli noise.

    Parameters are ``(phi, lam_<P>)`` for every non-identity Pauli label P, in
    canonical order.  Evaluation expands the rotated probe in the Pauli basis
    (coefficients u_a(phi) with the trace-one convention c_0 = 2^-n) and
    multiplies each non-identity coefficient by its eigenvalue lam_a.
    """
    if not 1 <= n <= 3:
        raise InvalidModel("naive_phase_probe supports 1 <= n <= 3")
    probe = plus_state(n) if probe is None else assert_hermitian(probe, name="probe")
    if probe.shape != (2**n, 2**n):
        raise InvalidModel(f"probe must act on {2**n} dimensions")
    if abs(np.trace(probe).real - 1.0) > TRACE_TOL or np.linalg.eigvalsh(probe).min() < -PSD_TOL:
        raise InvalidModel("probe is not a density matrix")
    labels = [a.label for a in pauli.pauli_indices(n)[1:]]
    names = ("phi", *(f"lam_{p}" for p in labels))
    generator = _total_z(n)

    def coeffs_and_rates(theta):
        phi = theta[0]
        u = phase_unitary(n, phi)
        rotated = u @ probe @ u.conj().T
        c = pauli.pauli_coefficients(rotated, n)
        return c, theta[1:]

    def eval_fn(theta):
        c, lam = coeffs_and_rates(theta)
        scaled = c.copy()
        scaled[1:] *= lam
        return pauli.operator_from_coefficients(scaled, n)

    def d_phi(theta):
        phi = theta[0]
        u = phase_unitary(n, phi)
        rotated = u @ probe @ u.conj().T
        commutator = -0.5j * (generator @ rotated - rotated @ generator)
        cdot = pauli.pauli_coefficients(commutator, n)
        cdot[0] = 0.0
        cdot[1:] *= theta[1:]
        return pauli.operator_from_coefficients(cdot, n)

    def d_lam(k):
        def deriv(theta):
            c, _ = coeffs_and_rates(theta)
            out = np.zeros_like(c)
            out[1 + k] = c[1 + k]
            return pauli.operator_from_coefficients(out, n)
        return deriv

    box = ((-np.inf, np.inf),) + ((-1.0, 1.0),) * len(labels)
    return ParameterizedState(
        dim=2**n,
        param_names=names,
        eval_fn=eval_fn,
        deriv_fns=(d_phi, *(d_lam(k) for k in range(len(labels)))),
        domain=box,
        kind="naive",
    )


def _bitstrings(n: int) -> list[tuple[int, ...]]:
    out = []
    for k in range(2**n):
        out.append(tuple((k >> (n - 1 - i)) & 1 for i in range(n)))
    return out


def ghz_code_projectors(n: int) -> dict[tuple[int, ...], np.ndarray]:
    """Projectors onto the 2^n syndrome sectors of the (n+1)-qubit repetition code."""
    dim = 2 ** (n + 1)
    zz = []
    for i in range(n):
        x = tuple(0 for _ in range(n + 1))
        z = tuple(1 if q in (i, i + 1) else 0 for q in range(n + 1))
        zz.append(pauli.pauli_matrix(pauli.PauliIndex(x, z)))
    projectors = {}
    for xbits in _bitstrings(n):
        p = np.eye(dim, dtype=complex)
        ext = xbits + (0,)
        for i in range(n):
            sign = (-1) ** (ext[i] ^ ext[i + 1])
            p = p @ (0.5 * (np.eye(dim) + sign * zz[i]))
        projectors[xbits] = p
    return projectors


def ghz_logical_operators(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Logical X = X^(n+1) and logical Y = X..X Y on the repetition code."""
    xl = pauli.pauli_matrix(pauli.PauliIndex((1,) * (n + 1), (0,) * (n + 1)))
    yl = pauli.pauli_matrix(pauli.PauliIndex((1,) * (n + 1), (0,) * n + (1,)))
    return xl, yl


def ghz_ancilla_probe(n: int) -> ParameterizedState:
    """(n+1)-qubit GHZ probe with noiseless ancilla under unknown Pauli noise.

    Parameters are ``(phi, p_<x>, lam_<x>)`` over all syndrome sectors
    x in {0,1}^n.  All 2^n block weights p_x are free parameters (their sum is
    constrained to one only at the fiducial point), which matches the
    parameterization whose QFIM is diagonal with entries n^2 sum p lam^2,
    1/p_x and p_x/(1-lam_x^2); the p_x derivatives consequently carry unit
    trace rather than zero.
    """
    if not 1 <= n <= 3:
        raise InvalidModel("ghz_ancilla_probe supports 1 <= n <= 3")
    sectors = _bitstrings(n)
    projectors = ghz_code_projectors(n)
    xl, yl = ghz_logical_operators(n)
    names = ("phi",
             *(f"p_{''.join(map(str, x))}" for x in sectors),
             *(f"lam_{''.join(map(str, x))}" for x in sectors))
    m = 2**n

    def split(theta):
        return theta[0], theta[1:1 + m], theta[1 + m:]

    def block(x, quad):
        return projectors[x] @ quad

    def eval_fn(theta):
        phi, p, lam = split(theta)
        acc = np.zeros((2 ** (n + 1),) * 2, dtype=complex)
        for k, x in enumerate(sectors):
            quad = 0.5 * (np.eye(2 ** (n + 1))
                          + lam[k] * np.cos(n * phi) * xl + lam[k] * np.sin(n * phi) * yl)
            acc += p[k] * block(x, quad)
        return acc

    def d_phi(theta):
        phi, p, lam = split(theta)
        acc = np.zeros((2 ** (n + 1),) * 2, dtype=complex)
        for k, x in enumerate(sectors):
            quad = 0.5 * n * lam[k] * (-np.sin(n * phi) * xl + np.cos(n * phi) * yl)
            acc += p[k] * block(x, quad)
        return acc

    def d_p(k):
        def deriv(theta):
            phi, _, lam = split(theta)
            quad = 0.5 * (np.eye(2 ** (n + 1))
                          + lam[k] * np.cos(n * phi) * xl + lam[k] * np.sin(n * phi) * yl)
            return block(sectors[k], quad)
        return deriv

    def d_lam(k):
        def deriv(theta):
            phi, p, _ = split(theta)
            quad = 0.5 * p[k] * (np.cos(n * phi) * xl + np.sin(n * phi) * yl)
            return block(sectors[k], quad)
        return deriv

    # No sum(p) = 1 constraint in the domain: the family is defined off the
    # simplex (finite-difference steps included); evaluate() checks unit trace
    # at the fiducial point, which pins the constraint exactly where needed.
    box = ((-np.inf, np.inf),) + ((0.0, 1.0),) * m + ((-1.0, 1.0),) * m
    return ParameterizedState(
        dim=2 ** (n + 1),
        param_names=names,
        eval_fn=eval_fn,
        deriv_fns=(d_phi, *(d_p(k) for k in range(m)), *(d_lam(k) for k in range(m))),
        domain=box,
        deriv_traces=(0.0,) + (1.0,) * m + (0.0,) * m,
        kind="ghz_ancilla",
    )


def twirled_qubit_probe() -> ParameterizedState:
    """Single-qubit probe after symmetric Clifford twirling of the noise.

    State: (I + lam1 cos(phi) X + lam1 sin(phi) Y + alpha Z) / 2 with the
    three parameters (phi, lam1, alpha); the Bloch vector must stay strictly
    inside the sphere.
    """
    x = pauli.pauli_matrix(pauli.PauliIndex((1,), (0,)))
    y = pauli.pauli_matrix(pauli.PauliIndex((1,), (1,)))
    z = pauli.pauli_matrix(pauli.PauliIndex((0,), (1,)))

    def eval_fn(theta):
        phi, lam1, alpha = theta
        return 0.5 * (np.eye(2) + lam1 * np.cos(phi) * x + lam1 * np.sin(phi) * y + alpha * z)

    def d_phi(theta):
        phi, lam1, _ = theta
        return 0.5 * lam1 * (-np.sin(phi) * x + np.cos(phi) * y)

    def d_lam1(theta):
        phi, _, _ = theta
        return 0.5 * (np.cos(phi) * x + np.sin(phi) * y)

    def d_alpha(theta):
        return 0.5 * z

    def validator(theta):
        _, lam1, alpha = theta
        if lam1 <= 0:
            return "lam1 must be positive"
        # boundary |r| = 1 (pure state) is a valid state; the closed-form
        # QFIM block diverges there, so bounds require the interior
        if lam1**2 + alpha**2 > 1.0 + 1e-12:
            return f"Bloch vector length {np.hypot(lam1, alpha)} exceeds 1"
        return None

    return ParameterizedState(
        dim=2,
        param_names=("phi", "lam1", "alpha"),
        eval_fn=eval_fn,
        deriv_fns=(d_phi, d_lam1, d_alpha),
        domain_validator=validator,
        kind="twirled",
    )


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------

_BUILTINS = {"naive": naive_phase_probe, "ghz_ancilla": ghz_ancilla_probe,
             "twirled": twirled_qubit_probe}


def _complex_matrix_from_json(entries, what: str) -> np.ndarray:
    try:
        arr = np.asarray(entries, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{what} must be a nested array of [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInput(f"{what} must be a square matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def state_model_from_dict(spec: dict) -> tuple[ParameterizedState, np.ndarray]:
    """Build a model plus its fiducial point from a JSON-style dictionary.

    Builtin form: {"kind": "builtin", "name": ..., "n": ..., "theta0": {...}}.
    Explicit form: {"kind": "explicit", "dim": d, "parameters": [...],
    "rho": [[[re, im], ...]], "derivatives": [...] (optional), "fd_step": h}.
    Unknown fields are rejected.
    """
    kind = spec.get("kind")
    if kind == "builtin":
        allowed = {"kind", "name", "n", "theta0"}
        _reject_unknown(spec, allowed)
        name = spec.get("name")
        if name not in _BUILTINS:
            raise InvalidInput(f"unknown builtin model {name!r}; choose from {sorted(_BUILTINS)}")
        model = _BUILTINS[name]() if name == "twirled" else _BUILTINS[name](int(spec.get("n", 1)))
        theta0 = _theta_from_mapping(model.param_names, spec.get("theta0", {}))
        return model, theta0
    if kind == "explicit":
        allowed = {"kind", "dim", "parameters", "theta0", "rho", "derivatives", "fd_step"}
        _reject_unknown(spec, allowed)
        dim = int(spec["dim"])
        names = tuple(str(p) for p in spec["parameters"])
        rho = _complex_matrix_from_json(spec["rho"], "rho")
        if rho.shape != (dim, dim):
            raise InvalidInput("rho shape does not match dim")
        derivs = spec.get("derivatives")
        theta0 = np.asarray(spec.get("theta0", np.zeros(len(names))), dtype=float)
        if derivs is None:
            raise InvalidInput("explicit models require the 'derivatives' field "
                               "(a constant state has no finite-difference path)")
        dmats = [_complex_matrix_from_json(d, f"derivatives[{i}]") for i, d in enumerate(derivs)]
        if len(dmats) != len(names):
            raise InvalidInput("need one derivative per parameter")
        model = ParameterizedState(
            dim=dim,
            param_names=names,
            eval_fn=lambda theta: rho,
            deriv_fns=tuple((lambda d: (lambda theta: d))(d) for d in dmats),
            fd_step=float(spec.get("fd_step", DEFAULT_FD_STEP)),
        )
        return model, theta0
    raise InvalidInput("model 'kind' must be 'builtin' or 'explicit'")


def _reject_unknown(spec: dict, allowed: set) -> None:
    unknown = set(spec) - allowed
    if unknown:
        raise InvalidInput(f"unknown fields in config: {sorted(unknown)}")


def _theta_from_mapping(names: Sequence[str], mapping: dict) -> np.ndarray:
    unknown = set(mapping) - set(names)
    if unknown:
        raise InvalidInput(f"unknown parameters in theta0: {sorted(unknown)}")
    return np.array([float(mapping.get(name, 0.0)) for name in names])
