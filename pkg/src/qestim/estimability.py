"""Unbiased-estimability analysis: SLDs, QFIM, support and span tests, bounds.

The two equivalent criteria implemented here:

* support route: a parameter combination w admits an unbiased estimator with
  finite error iff J+ J w = w, in which case the error is bounded below by
  w^T J+ w (the generalized bound, reducing to w^T J^-1 w at full rank);
* derivative route: theta_k is estimable iff its state derivative is not a
  linear combination of the other parameters' derivatives.

Also provided: the bias-aware matrix bound H^T J+ H + B, the locally
unbiased optimal measurement built from the SLD eigenbasis, and the
reparametrization that block-diagonalizes the QFIM around one parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotEstimable
from .linalg import (SpanVerdict, assert_real_symmetric, default_rank_tol,
                     pseudo_inverse, residual_in_span, vectorize_hermitian)
from .states import EvaluatedModel

DEFAULT_SPAN_TOL = 1e-7


@dataclass(frozen=True)
class QfimResult:
    """Quantum Fisher information matrix with its spectral data attached."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    pinv: np.ndarray
    rank_tol_used: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def support_residual(self, w) -> float:
        """Relative norm of (J+ J w - w); zero iff w lies in the support of J."""
        w = np.asarray(w, dtype=float).ravel()
        wnorm = np.linalg.norm(w)
        if wnorm == 0:
            raise InvalidInput("w must be nonzero")
        return float(np.linalg.norm(self.pinv @ (self.matrix @ w) - w) / wnorm)


@dataclass(frozen=True)
class EstimabilityVerdict:
    """Per-parameter verdict with the decisive residual and tolerance recorded."""

    parameter: str
    estimable: bool
    bound: float
    residual: float
    tolerance: float
    dependency: SpanVerdict | None = None


@dataclass(frozen=True)
class OptimalMeasurement:
    """Projective measurement and estimator values achieving the generalized bound.

    POVM elements are eigenprojectors of the reparametrized SLD (full
    eigenspaces under degeneracy).  The estimator is locally unbiased at the
    fiducial point (sum p v = theta_k and, in the centered form, sum
    (v - theta_k) d_i p = delta_ik for every parameter) and its per-shot
    variance equals ``bound`` = [J+]_kk.
    """

    povm: tuple[np.ndarray, ...]
    estimator_values: np.ndarray
    outcome_probs: np.ndarray
    parameter: str
    bound: float
    sld_eigenvalues: np.ndarray


def sld_operators(em: EvaluatedModel, rank_tol: float | None = None) -> list[np.ndarray]:
    """Symmetric logarithmic derivatives in the state eigenbasis.

    (L_i)_{ab} = 2 (d_i rho)_{ab} / (rho_a + rho_b) where the eigenvalue sum
    exceeds the cutoff, else 0.  The anticommutator identity
    d_i rho = (L_i rho + rho L_i) / 2 is reproduced on the support block.
    """
    w, v = np.linalg.eigh(em.rho)
    cut = (rank_tol if rank_tol is not None else default_rank_tol(em.dim)) * max(w.max(), 0.0)
    denom = w[:, None] + w[None, :]
    mask = denom > max(cut, 1e-300)
    slds = []
    for d in em.derivs:
        dv = v.conj().T @ d @ v
        lv = np.zeros_like(dv)
        lv[mask] = 2.0 * dv[mask] / denom[mask]
        l = v @ lv @ v.conj().T
        slds.append(0.5 * (l + l.conj().T))
    return slds


def qfim(em: EvaluatedModel, rank_tol: float | None = None) -> QfimResult:
    """QFIM via the eigenbasis formula, with eigendecomposition and pseudoinverse.

    J_ij = sum over eigenpairs with rho_a + rho_b > 0 of
    2 Re(<a|d_i rho|b><b|d_j rho|a>) / (rho_a + rho_b); equals the symmetrized
    Tr[d_j rho L_i].
    """
    w, v = np.linalg.eigh(em.rho)
    if rank_tol is None:
        rank_tol = default_rank_tol(em.dim)
    cut = rank_tol * max(w.max(), 0.0)
    denom = w[:, None] + w[None, :]
    mask = denom > max(cut, 1e-300)
    weights = np.where(mask, 2.0 / np.where(mask, denom, 1.0), 0.0)
    dv = np.stack([v.conj().T @ d @ v for d in em.derivs])
    j = np.einsum("ab,iab,jba->ij", weights, dv, dv).real
    j = 0.5 * (j + j.T)
    jw, jv = np.linalg.eigh(j)
    scale = max(abs(jw).max(initial=0.0), 1.0)
    if jw.min(initial=0.0) < -1e-9 * scale:
        raise InvalidInput("QFIM has a significantly negative eigenvalue")
    qtol = default_rank_tol(j.shape[0])
    pinv, rank = pseudo_inverse(j, rank_tol=qtol)
    return QfimResult(j, jw, jv, rank, pinv, qtol)


def check_lemma1(q: QfimResult, w, tol: float = DEFAULT_SPAN_TOL,
                 parameter: str = "w") -> EstimabilityVerdict:
    """Support test: estimable iff J+ J w = w, with bound w^T J+ w when it holds."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size != q.dim:
        raise InvalidInput("w length does not match the QFIM dimension")
    if np.linalg.norm(w) == 0:
        raise InvalidInput("w must be nonzero")
    residual = q.support_residual(w)
    estimable = residual <= tol
    bound = float(w @ q.pinv @ w) if estimable else np.inf
    return EstimabilityVerdict(parameter, estimable, bound, residual, tol)


def generalized_qcrb(q: QfimResult, w, tol: float = DEFAULT_SPAN_TOL) -> float:
    """Lower bound on the variance of an unbiased estimator of w.theta (inf outside supp J)."""
    return check_lemma1(q, w, tol).bound


def check_theorem1(em: EvaluatedModel, parameter: int | str,
                   tol: float = DEFAULT_SPAN_TOL) -> EstimabilityVerdict:
    """Derivative-span test: estimable iff d_k rho is outside span of the others.

    The span test runs over real coefficients on real-vectorized Hermitian
    derivatives; complex coefficients add nothing for Hermitian matrices.
    When the derivative is in the span, ``dependency`` carries the recovered
    coefficients (ordered over the remaining parameters).
    """
    k = em.index_of(parameter)
    vecs = [vectorize_hermitian(d) for d in em.derivs]
    others = [v for i, v in enumerate(vecs) if i != k]
    verdict = residual_in_span(vecs[k], others, tol)
    name = em.param_names[k]
    if verdict.in_span:
        return EstimabilityVerdict(name, False, np.inf,
                                   verdict.residual_norm / max(verdict.target_norm, 1e-300),
                                   tol, dependency=verdict)
    bound = check_lemma1(qfim(em), _unit(em.num_params, k), tol, name).bound
    return EstimabilityVerdict(name, True, bound,
                               verdict.residual_norm / max(verdict.target_norm, 1e-300), tol)


def _unit(m: int, k: int) -> np.ndarray:
    e = np.zeros(m)
    e[k] = 1.0
    return e


def fgqcrb_bound(q: QfimResult, jacobian, bias) -> np.ndarray:
    """Error-matrix lower bound H^T J+ H + B for possibly biased estimators.

    ``jacobian`` is H with H_ij the derivative of the j-th estimator's mean
    along theta_i; ``bias`` is the PSD bias matrix B.  With H = identity and
    B = 0 this reduces to J+.
    """
    h = np.asarray(jacobian, dtype=float)
    b = assert_real_symmetric(bias, name="bias matrix")
    if h.shape != (q.dim, q.dim) or b.shape != (q.dim, q.dim):
        raise InvalidInput("jacobian and bias must be M x M matrices matching the QFIM")
    return h.T @ q.pinv @ h + b


def nuisance_direction(q: QfimResult, k: int) -> np.ndarray:
    """Reparametrization slope d theta_[others] / d xi_k = -(J_nn)+ J_[n,k]."""
    others = [i for i in range(q.dim) if i != k]
    jnn = q.matrix[np.ix_(others, others)]
    jn1 = q.matrix[others, k]
    pinv_nn, _ = pseudo_inverse(jnn, rank_tol=q.rank_tol_used)
    return -pinv_nn @ jn1


def block_diagonal_reparam(q: QfimResult, parameter: int, tol: float = DEFAULT_SPAN_TOL
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Linear reparametrization isolating one parameter in the QFIM.

    Returns (T, J_xi) with J_xi = T J T^T having zero off-diagonal entries in
    the target row and column, and 1/[J_xi]_kk = [J+]_kk (the reparametrized
    single-parameter information is exactly the generalized-bound inverse).
    T carries the nuisance slopes in row k and fixes theta_k itself, so
    T e_k = e_k.
    """
    k = int(parameter)
    verdict = check_lemma1(q, _unit(q.dim, k), tol)
    if not verdict.estimable:
        raise NotEstimable(f"parameter index {k} lies outside the QFIM support "
                           f"(residual {verdict.residual:.3e})")
    slope = nuisance_direction(q, k)
    t = np.eye(q.dim)
    others = [i for i in range(q.dim) if i != k]
    t[k, others] = slope
    j_xi = t @ q.matrix @ t.T
    return t, 0.5 * (j_xi + j_xi.T)


def optimal_measurement(em: EvaluatedModel, parameter: int | str,
                        rank_tol: float | None = None, tol: float = DEFAULT_SPAN_TOL,
                        refine_blocks=None, degeneracy_tol: float = 1e-10,
                        min_prob: float = 1e-12) -> OptimalMeasurement:
    """Locally unbiased estimator achieving the generalized bound for one parameter.

    Builds the reparametrized SLD L_xi = L_k + sum_i slope_i L_i, measures in
    its eigenbasis (projectors onto full eigenspaces under degeneracy), and
    assigns outcome values theta_k + [J+]_kk * (d_xi p) / p.  Outcomes with
    probability at or below ``min_prob`` carry no information and get the
    fiducial value.  ``refine_blocks`` optionally splits each eigenprojector
    along a family of commuting projectors (e.g. code-sector projectors);
    the refined measurement has the same classical Fisher information.
    """
    k = em.index_of(parameter)
    q = qfim(em, rank_tol)
    verdict = check_lemma1(q, _unit(em.num_params, k), tol, em.param_names[k])
    if not verdict.estimable:
        raise NotEstimable(f"no unbiased estimator for {em.param_names[k]} "
                           f"(support residual {verdict.residual:.3e})")
    slds = sld_operators(em, rank_tol)
    slope = nuisance_direction(q, k)
    weights = np.insert(slope, k, 1.0)
    l_xi = sum(w * l for w, l in zip(weights, slds))
    d_xi_rho = sum(w * d for w, d in zip(weights, em.derivs))

    eigvals, eigvecs = np.linalg.eigh(l_xi)
    scale = max(abs(eigvals).max(initial=0.0), 1.0)
    projectors, levels = [], []
    start = 0
    for i in range(1, len(eigvals) + 1):
        if i == len(eigvals) or eigvals[i] - eigvals[start] > degeneracy_tol * scale:
            vs = eigvecs[:, start:i]
            projectors.append(vs @ vs.conj().T)
            levels.append(float(eigvals[start:i].mean()))
            start = i
    if refine_blocks is not None:
        refined, rlevels = [], []
        for p, lev in zip(projectors, levels):
            for b in refine_blocks:
                piece = b @ p @ b.conj().T
                if np.trace(piece).real > 1e-9:
                    refined.append(0.5 * (piece + piece.conj().T))
                    rlevels.append(lev)
        projectors, levels = refined, rlevels

    bound = float(q.pinv[k, k])
    probs = np.array([np.trace(p @ em.rho).real for p in projectors])
    dprobs = np.array([np.trace(p @ d_xi_rho).real for p in projectors])
    values = np.full(len(projectors), em.theta0[k])
    informative = probs > min_prob
    values[informative] += bound * dprobs[informative] / probs[informative]
    return OptimalMeasurement(tuple(projectors), values, probs,
                              em.param_names[k], bound, np.array(levels))
