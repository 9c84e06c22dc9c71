"""Monte-Carlo verification of the sensing protocols.

Sampling draws one multinomial per run from the Born probabilities using a
counter-based bit generator (Philox keyed by the seed), so histograms are
bit-reproducible regardless of how the host schedules work.  Standard
errors are computed analytically from the same histogram.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pauli
from .errors import InvalidInput, InvalidScenario
from .estimability import OptimalMeasurement, optimal_measurement
from .states import (EvaluatedModel, ParameterizedState, evaluate, ghz_ancilla_probe,
                     ghz_logical_operators, naive_phase_probe, plus_state,
                     twirled_qubit_probe)


@dataclass(frozen=True)
class Scenario:
    """A state, its true parameters, and the measurement run against it."""

    kind: str
    model: ParameterizedState
    true_theta: np.ndarray
    measurement: OptimalMeasurement
    evaluated: EvaluatedModel

    def born_probabilities(self) -> np.ndarray:
        p = np.array([np.trace(e @ self.evaluated.rho).real for e in self.measurement.povm])
        if abs(p.sum() - 1.0) > 1e-9 or p.min() < -1e-9:
            raise InvalidScenario(f"POVM probabilities sum to {p.sum()}")
        return np.clip(p, 0.0, None)


@dataclass(frozen=True)
class ShotRecord:
    seed: int
    shots: int
    outcome_counts: np.ndarray


@dataclass(frozen=True)
class BiasVarianceReport:
    """Empirical bias and variance of an estimator against its quantum bound."""

    mean_estimate: float
    mean_stderr: float
    per_shot_variance: float
    variance_stderr: float
    qcrb_bound: float
    z_score_bias: float
    shots: int
    true_value: float = float("nan")

    @property
    def bias(self) -> float:
        return self.mean_estimate - self.true_value


def _check_povm(povm, dim, tol=1e-9):
    total = sum(np.asarray(e, complex) for e in povm)
    if np.abs(total - np.eye(dim)).max() > tol:
        raise InvalidScenario("POVM does not resolve the identity within 1e-9")


def build_scenario(kind: str, *, n: int = 1, phi: float = 0.4, weights=None,
                   lambdas=None, lam1: float = 0.9, alpha: float = 0.1,
                   parameter: str = "phi") -> Scenario:
    """Assemble a builtin scenario with its optimal measurement at the true point.

    kind "ghz_ancilla": n data qubits, block weights and contrasts (uniform
    weights and 0.9 contrasts by default).  kind "twirled": single qubit with
    (phi, lam1, alpha).  kind "naive": fixed |+>^n probe; only noise
    parameters are estimable there, so ``parameter`` must name one of them.
    """
    if kind == "ghz_ancilla":
        model = ghz_ancilla_probe(n)
        m = 2**n
        weights = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, float)
        lambdas = np.full(m, 0.9) if lambdas is None else np.asarray(lambdas, float)
        theta = np.concatenate([[phi], weights, lambdas])
    elif kind == "twirled":
        model = twirled_qubit_probe()
        theta = np.array([phi, lam1, alpha])
    elif kind == "naive":
        model = naive_phase_probe(n)
        lambdas = np.full(4**n - 1, 0.9) if lambdas is None else np.asarray(lambdas, float)
        theta = np.concatenate([[phi], lambdas])
    else:
        raise InvalidInput(f"unknown scenario kind {kind!r}")
    em = evaluate(model, theta)
    blocks = None
    if kind == "ghz_ancilla":
        from .states import ghz_code_projectors
        blocks = list(ghz_code_projectors(n).values())
    meas = optimal_measurement(em, parameter, refine_blocks=blocks)
    _check_povm(meas.povm, model.dim)
    return Scenario(kind, model, theta, meas, em)


def sample(sc: Scenario, shots: int, seed: int) -> ShotRecord:
    """Multinomial outcome histogram for ``shots`` Born-rule draws."""
    if shots < 1:
        raise InvalidInput("shots must be at least 1")
    p = sc.born_probabilities()
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    counts = rng.multinomial(shots, p / p.sum())
    return ShotRecord(seed, shots, counts)


def estimate(rec: ShotRecord, m: OptimalMeasurement, true_value: float) -> BiasVarianceReport:
    """Evaluate the locally unbiased estimator on a histogram.

    The per-shot variance is the empirical second moment about the true
    value, the quantity the generalized bound constrains.
    """
    if rec.outcome_counts.size != len(m.povm):
        raise InvalidInput("histogram does not match the measurement outcome space")
    f = rec.outcome_counts / rec.shots
    v = m.estimator_values
    mean = float(f @ v)
    var_sample = float(f @ (v - mean) ** 2) * rec.shots / max(rec.shots - 1, 1)
    mean_se = np.sqrt(var_sample / rec.shots)
    dev2 = (v - true_value) ** 2
    m2 = float(f @ dev2)
    m4 = float(f @ dev2**2)
    var_se = np.sqrt(max(m4 - m2**2, 0.0) / rec.shots)
    if mean_se > 0:
        z = (mean - true_value) / mean_se
    else:
        z = 0.0 if mean == true_value else np.copysign(np.inf, mean - true_value)
    return BiasVarianceReport(mean, mean_se, m2, var_se, m.bound, float(z), rec.shots,
                              true_value=true_value)


def run_scenario(sc: Scenario, shots: int, seed: int,
                 true_parameter: str | None = None) -> tuple[ShotRecord, BiasVarianceReport]:
    rec = sample(sc, shots, seed)
    k = sc.model.param_names.index(true_parameter or sc.measurement.parameter)
    return rec, estimate(rec, sc.measurement, float(sc.true_theta[k]))


# ---------------------------------------------------------------------------
# Miscalibration demonstration for the naive scheme
# ---------------------------------------------------------------------------

def _binary_expectation(rho, observable, shots, rng) -> tuple[float, float]:
    # Projective +-1 measurement of an observable squaring to the identity.
    dim = rho.shape[0]
    p_plus = float(np.trace(0.5 * (np.eye(dim) + observable) @ rho).real)
    p_plus = min(max(p_plus, 0.0), 1.0)
    hits = rng.binomial(shots, p_plus)
    mean = (2.0 * hits - shots) / shots
    var = (1.0 - mean**2) / shots
    return mean, max(var, 1e-300)


def _atan2_report(s_mean, s_var, c_mean, c_var, predicted, true_value, scale, shots):
    angle = float(np.arctan2(s_mean, c_mean)) / scale
    r2 = s_mean**2 + c_mean**2
    var = (c_mean**2 * s_var + s_mean**2 * c_var) / max(r2**2, 1e-300) / scale**2
    se = np.sqrt(var)
    z = (angle - true_value) / se
    return angle, se, float(z), predicted


def demonstrate_naive_bias(n: int = 1, probe=None, lambda_assumed: float = 0.95,
                           miscalibration: float = 0.9, phi_true: float = 0.6,
                           shots: int = 10**6, seed: int = 2024,
                           scheme: str = "naive", ghz_weights=None,
                           ghz_lambdas=None) -> BiasVarianceReport:
    """Show that a noise-calibrated phase readout is biased when the calibration is off.

    The naive scheme measures the X and Y quadratures of qubit 1 (shots split
    evenly) and reads the phase as atan2(Y/lamY_assumed, X/lamX_assumed).
    The default miscalibration scales the true X-sector eigenvalue by
    ``miscalibration`` relative to the assumed value while leaving the Y
    sector calibrated, which skews the readout by a closed-form amount:
    atan2(sin(phi), miscalibration * cos(phi)) - phi.  Setting
    ``miscalibration=1`` is the calibrated control.

    The "ghz_ancilla" scheme is the control demonstrating noise agnosticism:
    the pooled two-quadrature logical readout never consumes an assumed
    eigenvalue, so the same mismatch leaves it unbiased.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    half = shots // 2
    if scheme == "naive":
        model = naive_phase_probe(n, probe)
        x_name = "lam_" + "X" + "I" * (n - 1)
        y_name = "lam_" + "Y" + "I" * (n - 1)
        lam_true = {name: lambda_assumed for name in model.param_names[1:]}
        lam_true[x_name] = lambda_assumed * miscalibration
        theta = np.array([phi_true] + [lam_true[name] for name in model.param_names[1:]])
        em = evaluate(model, theta)
        x1 = pauli.pauli_matrix(pauli.PauliIndex((1,) + (0,) * (n - 1), (0,) * n))
        y1 = pauli.pauli_matrix(pauli.PauliIndex((1,) + (0,) * (n - 1), (1,) + (0,) * (n - 1)))
        xm, xv = _binary_expectation(em.rho, x1, half, rng)
        ym, yv = _binary_expectation(em.rho, y1, shots - half, rng)
        c_mean, c_var = xm / lambda_assumed, xv / lambda_assumed**2
        s_mean, s_var = ym / lambda_assumed, yv / lambda_assumed**2
        predicted = float(np.arctan2(np.sin(phi_true), miscalibration * np.cos(phi_true)))
        angle, se, z, predicted = _atan2_report(s_mean, s_var, c_mean, c_var,
                                                predicted, phi_true, 1.0, shots)
    elif scheme == "ghz_ancilla":
        model = ghz_ancilla_probe(n)
        m = 2**n
        weights = np.full(m, 1.0 / m) if ghz_weights is None else np.asarray(ghz_weights, float)
        lams = np.full(m, lambda_assumed) if ghz_lambdas is None else np.asarray(ghz_lambdas, float)
        lams = lams * miscalibration  # the estimator below never uses the assumed values
        theta = np.concatenate([[phi_true], weights, lams])
        em = evaluate(model, theta)
        xl, yl = ghz_logical_operators(n)
        phi0 = 0.0  # lab frame: measure the fixed logical quadratures
        o_cos = np.cos(n * phi0) * xl + np.sin(n * phi0) * yl
        o_sin = -np.sin(n * phi0) * xl + np.cos(n * phi0) * yl
        cm, cv = _binary_expectation(em.rho, o_cos, half, rng)
        sm, sv = _binary_expectation(em.rho, o_sin, shots - half, rng)
        angle, se, z, predicted = _atan2_report(sm, sv, cm, cv, phi_true, phi_true, n, shots)
    else:
        raise InvalidInput(f"unknown scheme {scheme!r}")
    return BiasVarianceReport(angle, se, se**2 * shots, float("nan"), float("nan"),
                              z, shots, true_value=phi_true)
