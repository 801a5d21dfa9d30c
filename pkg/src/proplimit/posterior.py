"""Gaussian-likelihood posterior machinery.

Conditioning on a covariance-shaping matrix Q, the joint outputs at the
test input and the P training inputs are Gaussian with covariance built
from Kronecker blocks of the input Gram matrix and Q.  Observing labels y
with precision beta turns the prior mixture over Q into a reweighted
mixture: each component keeps a Gaussian law with starred moments
(m*(Q), Sigma*(Q)), and Q is reweighted by exp(-Psi(Q)/2).  This module
computes those quantities, performs self-normalized importance weighting
over mixing draws, and reduces mixtures to predictive moments.

All formulas use the Moore-Penrose inverse of the training block, so
singular Gram matrices (repeated or collinear inputs) are handled without
a separate code path; the invertible-case simplifications are kept as a
cross-check (see ``sigma_star_invertible``), not as a branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .errors import EmptyMixing, InvalidParameter, ShapeMismatch
from .linalg import as_matrix, cholesky, kron, pinv, symmetrize

DEGENERATE_ESS = 1.5
LOW_ESS_FRACTION = 0.10


@dataclass(frozen=True)
class Dataset:
    """Supervised data plus one test input.

    ``x`` is n_in x P (training inputs as columns), ``y`` is n_out x P
    (labels), ``x0`` the test input, ``beta >= 0`` the label precision.
    The stacked input matrix [x0, x] and the column-stacked label vector
    are derived once at construction.
    """

    x: np.ndarray
    y: np.ndarray
    x0: np.ndarray
    beta: float
    x_tilde: np.ndarray = field(init=False, repr=False)
    y_vec: np.ndarray = field(init=False, repr=False)
    _g00: float = field(init=False, repr=False)
    _g01: np.ndarray = field(init=False, repr=False)
    _g11: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        y = as_matrix(self.y, "y")
        x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1)
        if x0.shape[0] != x.shape[0]:
            raise ShapeMismatch(
                f"x0 has length {x0.shape[0]}, x has {x.shape[0]} rows"
            )
        if y.shape[1] != x.shape[1]:
            raise ShapeMismatch(
                f"y has {y.shape[1]} columns, x has {x.shape[1]}"
            )
        if x.shape[1] < 1:
            raise InvalidParameter("need at least one training input")
        if not np.isfinite(x0).all():
            raise InvalidParameter("x0 contains non-finite entries")
        if not self.beta >= 0:
            raise InvalidParameter(f"beta must be >= 0, got {self.beta}")
        n_in = x.shape[0]
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x_tilde", np.column_stack([x0, x]))
        object.__setattr__(self, "y_vec", y.reshape(-1, order="F").copy())
        object.__setattr__(self, "_g00", float(x0 @ x0) / n_in)
        object.__setattr__(self, "_g01", (x0 @ x)[None, :] / n_in)
        gram = (x.T @ x) / n_in
        object.__setattr__(self, "_g11", (gram + gram.T) / 2.0)

    @property
    def n_in(self) -> int:
        return self.x.shape[0]

    @property
    def n_train(self) -> int:
        return self.x.shape[1]

    @property
    def n_out(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class SigmaBlocks:
    """Block covariance: test/test, test/train, train/train."""

    s00: np.ndarray
    s01: np.ndarray
    s11: np.ndarray

    def full(self) -> np.ndarray:
        top = np.hstack([self.s00, self.s01])
        bottom = np.hstack([self.s01.T, self.s11])
        return np.vstack([top, bottom])


@dataclass(frozen=True)
class MixingSample:
    """One mixing draw: a strictly positive definite Q with a log-weight."""

    q: np.ndarray
    log_weight: float = 0.0


@dataclass(frozen=True)
class PosteriorMixture:
    """Weighted Gaussian components plus importance-sampling diagnostics.

    ``means[i]`` and ``covariances[i]`` are the starred moments of
    component i (test block leading, size ``n_out``); ``weights`` are
    normalized to sum to one; ``ess`` is the effective sample size
    ``(sum w)^2 / sum w^2``.  ``warnings`` lists non-fatal diagnostics
    ("degenerate-weights" when ess < 1.5, "low-ess" below 10% of the
    component count).
    """

    means: np.ndarray
    covariances: np.ndarray
    weights: np.ndarray
    ess: float
    n_out: int
    warnings: tuple = ()

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]


def _check_q(q, n_out: int) -> np.ndarray:
    q = symmetrize(q, name="Q")
    if q.shape[0] != n_out:
        raise ShapeMismatch(f"Q is {q.shape[0]}x{q.shape[0]}, expected {n_out}")
    cholesky(q)  # mixing matrices must be strictly positive definite
    return q


def sigma_of_q(q, data: Dataset) -> SigmaBlocks:
    """Covariance blocks of the joint outputs given Q.

    s00 = (x0.x0/n_in) Q, s01 = (x0.X/n_in) kron Q, s11 = (X.X/n_in) kron Q.
    """
    q = _check_q(q, data.n_out)
    return SigmaBlocks(
        s00=data._g00 * q,
        s01=kron(data._g01, q),
        s11=kron(data._g11, q),
    )


def _resolvent(s11: np.ndarray, beta: float):
    # Cholesky of I + beta * s11 (always SPD for beta >= 0, s11 PSD).
    a = np.eye(s11.shape[0]) + beta * s11
    return cholesky(a)


def _starred(q, data: Dataset):
    """Shared core: starred blocks, posterior mean, and the weight exponent."""
    blocks = sigma_of_q(q, data)
    beta = data.beta
    s00, s01, s11 = blocks.s00, blocks.s01, blocks.s11
    chol = _resolvent(s11, beta)

    # s11 (I + beta s11)^-1 is symmetric; solve from the left and transpose.
    s11_star = cho_solve((chol, True), s11, check_finite=False).T
    s11_star = (s11_star + s11_star.T) / 2.0

    s11_pinv = pinv(s11)
    bridge = s01 @ s11_pinv                      # test/train transfer
    s01_star = bridge @ s11_star
    inner = np.eye(s11.shape[0]) - s11_star @ s11_pinv
    s00_star = s00 - bridge @ inner @ s01.T
    s00_star = (s00_star + s00_star.T) / 2.0

    m_bottom = beta * (s11_star @ data.y_vec)
    m_top = beta * (bridge @ (s11_star @ data.y_vec))
    mean = np.concatenate([m_top, m_bottom])

    solve_y = cho_solve((chol, True), data.y_vec, check_finite=False)
    psi_value = float(
        beta * (data.y_vec @ solve_y) + 2.0 * np.sum(np.log(np.diag(chol)))
    )
    return SigmaBlocks(s00_star, s01_star, s11_star), mean, psi_value


def sigma_star(q, data: Dataset) -> SigmaBlocks:
    """Starred covariance blocks of the posterior components.

    s11* = s11 (I + beta s11)^-1;
    s01* = s01 s11^- s11*;
    s00* = s00 - s01 s11^- (I - s11* s11^-) s01.T,
    with s11^- the Moore-Penrose inverse.  At beta = 0 this returns the
    unshrunk blocks.
    """
    starred, _, _ = _starred(q, data)
    return starred


def m_star(q, data: Dataset) -> np.ndarray:
    """Posterior component mean: [beta s01 s11^- s11* y; beta s11* y]."""
    _, mean, _ = _starred(q, data)
    return mean


def psi(q, data: Dataset) -> float:
    """Weight exponent: beta y.(I+beta s11)^-1 y + logdet(I + beta s11).

    Evaluated through one Cholesky factor, log-determinant in log space.
    Identically zero at beta = 0.
    """
    q = _check_q(q, data.n_out)
    s11 = kron(data._g11, q)
    chol = _resolvent(s11, data.beta)
    solve_y = cho_solve((chol, True), data.y_vec, check_finite=False)
    return float(
        data.beta * (data.y_vec @ solve_y) + 2.0 * np.sum(np.log(np.diag(chol)))
    )


def sigma_star_invertible(q, data: Dataset) -> SigmaBlocks:
    """Simplified starred blocks valid when s11 is invertible.

    s01* = s01 (I + beta s11)^-1 and
    s00* = s00 - beta s01 (I + beta s11)^-1 s01.T.  Used as an independent
    cross-check of :func:`sigma_star`; the beta factor in s00* is required
    for consistency with the Moore-Penrose form (both reduce to the
    unshrunk blocks at beta = 0).
    """
    blocks = sigma_of_q(q, data)
    beta = data.beta
    chol = _resolvent(blocks.s11, beta)
    s11_star = cho_solve((chol, True), blocks.s11, check_finite=False).T
    s11_star = (s11_star + s11_star.T) / 2.0
    s01_star = cho_solve((chol, True), blocks.s01.T, check_finite=False).T
    s00_star = blocks.s00 - beta * (s01_star @ blocks.s01.T)
    return SigmaBlocks((s00_star + s00_star.T) / 2.0, s01_star, s11_star)


def m_star_invertible(q, data: Dataset) -> np.ndarray:
    """Simplified mean: top block beta s01 (I + beta s11)^-1 y."""
    blocks = sigma_of_q(q, data)
    chol = _resolvent(blocks.s11, data.beta)
    solve_y = cho_solve((chol, True), data.y_vec, check_finite=False)
    s11_star = cho_solve((chol, True), blocks.s11, check_finite=False).T
    return np.concatenate(
        [data.beta * (blocks.s01 @ solve_y), data.beta * (s11_star @ data.y_vec)]
    )


def posterior_mixture(mixing, data: Dataset) -> PosteriorMixture:
    """Self-normalized importance-weighted posterior mixture.

    ``mixing`` is a sequence (or (n, d, d) stack) of Q draws from the prior
    mixing law, optionally :class:`MixingSample` values carrying prior
    log-weights.  Each component gets log-weight
    ``prior_log_weight - Psi(Q)/2``; weights are max-subtracted before
    exponentiation and normalized to sum to one.  The effective sample size
    is always reported; degenerate weightings are flagged in ``warnings``
    rather than raised.
    """
    if isinstance(mixing, np.ndarray) and mixing.ndim == 3:
        qs = list(mixing)
        prior_logw = np.zeros(len(qs))
    else:
        mixing = list(mixing)
        qs = [m.q if isinstance(m, MixingSample) else m for m in mixing]
        prior_logw = np.array(
            [m.log_weight if isinstance(m, MixingSample) else 0.0 for m in mixing]
        )
    n = len(qs)
    if n == 0:
        raise EmptyMixing("posterior_mixture needs at least one mixing draw")

    k = data.n_out * (data.n_train + 1)
    means = np.empty((n, k))
    covs = np.empty((n, k, k))
    log_w = np.empty(n)
    for i, q in enumerate(qs):
        starred, mean, psi_value = _starred(q, data)
        means[i] = mean
        covs[i] = starred.full()
        log_w[i] = prior_logw[i] - 0.5 * psi_value

    log_w -= log_w.max()
    weights = np.exp(log_w)
    total = weights.sum()
    ess = float(total**2 / np.sum(weights**2))
    weights = weights / total

    warnings = []
    if ess < DEGENERATE_ESS:
        warnings.append("degenerate-weights")
    if ess < LOW_ESS_FRACTION * n:
        warnings.append("low-ess")
    return PosteriorMixture(
        means, covs, weights, ess, data.n_out, tuple(warnings)
    )


def predictive_moments(mix: PosteriorMixture):
    """Predictive mean and covariance at the test input.

    mean = sum_i w_i m0_i;
    cov  = sum_i w_i S00_i + (sum_i w_i m0_i m0_i.T - mean mean.T).
    The label-dependent part is accumulated separately so that a point-mass
    mixture has covariance exactly equal to its component block.
    """
    d = mix.n_out
    m0 = mix.means[:, :d]
    s00 = mix.covariances[:, :d, :d]
    w = mix.weights
    mean = np.einsum("n,ni->i", w, m0)
    cov_within = np.einsum("n,nij->ij", w, s00)
    second = np.einsum("n,ni,nj->ij", w, m0, m0)
    cov = cov_within + (second - np.outer(mean, mean))
    return mean, cov


def nngp_mixing(n_out: int) -> np.ndarray:
    """The point-mass mixing of the infinite-width regime: one identity Q."""
    return np.eye(n_out)[None, :, :]
