"""Kalman filtering for linear-Gaussian state-space models.

    x_t = F x_{t-1} + e_x,   e_x ~ N(0, Rx)
    y_t = H x_t     + e_y,   e_y ~ N(0, Ry)

``kalman_step`` is the recursive estimator used everywhere else in the
package. ``batch_map_oracle`` and ``step_cost`` exist to validate it: the
first solves a whole trajectory in one dense system, the second evaluates the
per-step quadratic the recursion minimises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import ContractError, NumericalDegeneracyError

_SYM_TOL = 1e-10


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ContractError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _is_symmetric(m: np.ndarray) -> bool:
    scale = max(float(np.max(np.abs(m))), 1.0)
    return bool(np.max(np.abs(m - m.T)) <= _SYM_TOL * scale)


def _cholesky(m: np.ndarray, name: str):
    try:
        return linalg.cho_factor(m, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalDegeneracyError(f"{name} is not positive definite") from exc


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Time-invariant transition/observation pair with Gaussian noise."""

    transition: np.ndarray
    observation: np.ndarray
    state_noise_cov: np.ndarray
    obs_noise_cov: np.ndarray

    def __post_init__(self):
        F = _frozen(self.transition, 2, "transition")
        H = _frozen(self.observation, 2, "observation")
        Q = _frozen(self.state_noise_cov, 2, "state_noise_cov")
        R = _frozen(self.obs_noise_cov, 2, "obs_noise_cov")
        d = F.shape[0]
        m = H.shape[0]
        if F.shape != (d, d):
            raise ContractError(f"transition must be square, got {F.shape}")
        if m < 1 or H.shape != (m, d):
            raise ContractError(f"observation must be (M, {d}), got {H.shape}")
        if Q.shape != (d, d):
            raise ContractError(f"state_noise_cov must be ({d}, {d}), got {Q.shape}")
        if R.shape != (m, m):
            raise ContractError(f"obs_noise_cov must be ({m}, {m}), got {R.shape}")
        if not (_is_symmetric(Q) and _is_symmetric(R)):
            raise ContractError("noise covariances must be symmetric")
        object.__setattr__(self, "transition", F)
        object.__setattr__(self, "observation", H)
        object.__setattr__(self, "state_noise_cov", Q)
        object.__setattr__(self, "obs_noise_cov", R)

    @property
    def state_dim(self) -> int:
        return self.transition.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.observation.shape[0]


@dataclass(frozen=True, eq=False)
class FilterState:
    """State estimate and its error covariance."""

    estimate: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        x = _frozen(self.estimate, 1, "estimate")
        P = _frozen(self.covariance, 2, "covariance")
        if P.shape != (x.size, x.size):
            raise ContractError(
                f"covariance shape {P.shape} does not match estimate size {x.size}"
            )
        object.__setattr__(self, "estimate", x)
        object.__setattr__(self, "covariance", P)

    @property
    def dim(self) -> int:
        return self.estimate.size


def _check_state(state: FilterState, model: LinearModel) -> None:
    if state.dim != model.state_dim:
        raise ContractError(
            f"state has dimension {state.dim}, model expects {model.state_dim}"
        )


def _check_observation(observation, model: LinearModel) -> np.ndarray:
    y = np.asarray(observation, dtype=float)
    if y.shape != (model.obs_dim,):
        raise ContractError(
            f"observation has shape {y.shape}, model expects ({model.obs_dim},)"
        )
    if not np.all(np.isfinite(y)):
        raise ContractError("observation contains non-finite values")
    return y


def predict(state: FilterState, model: LinearModel) -> FilterState:
    """A-priori estimate ``(F x, F P F^T + Rx)``."""
    _check_state(state, model)
    F = model.transition
    x = F @ state.estimate
    P = F @ state.covariance @ F.T + model.state_noise_cov
    return FilterState(x, 0.5 * (P + P.T))


def kalman_step(state: FilterState, observation, model: LinearModel) -> FilterState:
    """Advance ``state`` by one prediction and one measurement update.

    The gain is obtained from a Cholesky solve against the innovation
    covariance ``H P H^T + Ry``; the returned covariance is symmetrised.
    """
    y = _check_observation(observation, model)
    prior = predict(state, model)
    H = model.observation
    P = prior.covariance
    HP = H @ P
    S = HP @ H.T + model.obs_noise_cov
    factor = _cholesky(0.5 * (S + S.T), "innovation covariance H P H^T + R^y")
    # S is symmetric, so G = P H^T S^-1 = (S^-1 H P)^T
    gain = linalg.cho_solve(factor, HP).T
    x = prior.estimate + gain @ (y - H @ prior.estimate)
    P_post = P - gain @ HP
    return FilterState(x, 0.5 * (P_post + P_post.T))


def step_cost(candidate, state: FilterState, observation, model: LinearModel) -> float:
    """Two-term quadratic cost minimised by :func:`kalman_step`.

    Weighted observation residual under ``Ry`` plus the deviation from the
    a-priori estimate under the a-priori covariance.
    """
    y = _check_observation(observation, model)
    x = np.asarray(candidate, dtype=float)
    if x.shape != (model.state_dim,):
        raise ContractError(
            f"candidate has shape {x.shape}, model expects ({model.state_dim},)"
        )
    prior = predict(state, model)
    resid = y - model.observation @ x
    dev = x - prior.estimate
    r_factor = _cholesky(model.obs_noise_cov, "observation noise covariance R^y")
    p_factor = _cholesky(prior.covariance, "a-priori covariance P_{t|t-1}")
    cost = resid @ linalg.cho_solve(r_factor, resid) + dev @ linalg.cho_solve(p_factor, dev)
    return float(max(cost, 0.0))


def run(models: LinearModel | Sequence[LinearModel], observations, init: FilterState):
    """Filter ``observations`` starting from ``init``; returns one state per observation."""
    obs = list(observations)
    if isinstance(models, LinearModel):
        models = [models] * len(obs)
    if len(models) != len(obs):
        raise ContractError(f"{len(models)} models for {len(obs)} observations")
    states = []
    state = init
    for model, y in zip(models, obs):
        state = kalman_step(state, y, model)
        states.append(state)
    return states


def batch_map_oracle(
    models: Sequence[LinearModel], observations, init: FilterState
) -> list[np.ndarray]:
    """MAP trajectory of x_1..x_T from one dense joint-Gaussian solve.

    The stacked trajectory prior (mean and full covariance implied by
    ``init`` and the transitions) is conditioned on all observations at
    once. The covariance form is used so that singular process noise is
    allowed; the only matrix inverted is the stacked innovation covariance.
    """
    obs = [np.asarray(y, dtype=float) for y in observations]
    T = len(obs)
    if T == 0:
        raise ContractError("need at least one observation")
    if len(models) != T:
        raise ContractError(f"{len(models)} models for {T} observations")
    D = init.dim
    for model, y in zip(models, obs):
        _check_state(init, model)
        _check_observation(y, model)
    if T > 50 or D * T > 500:
        raise ContractError(f"oracle limited to T <= 50 and D*T <= 500, got T={T}, D={D}")

    means = np.zeros((T, D))
    marg = np.zeros((T, D, D))
    mean, cov = init.estimate, init.covariance
    for t, model in enumerate(models):
        mean = model.transition @ mean
        cov = model.transition @ cov @ model.transition.T + model.state_noise_cov
        means[t], marg[t] = mean, cov

    # cov(x_t, x_s) = F_t ... F_{s+1} cov(x_s) for t >= s
    prior_cov = np.zeros((T * D, T * D))
    for s in range(T):
        block = marg[s]
        for t in range(s, T):
            if t > s:
                block = models[t].transition @ block
            prior_cov[t * D:(t + 1) * D, s * D:(s + 1) * D] = block
            prior_cov[s * D:(s + 1) * D, t * D:(t + 1) * D] = block.T

    H = linalg.block_diag(*[m.observation for m in models])
    R = linalg.block_diag(*[m.obs_noise_cov for m in models])
    mu = means.ravel()
    y = np.concatenate(obs)
    S = H @ prior_cov @ H.T + R
    factor = _cholesky(0.5 * (S + S.T), "stacked innovation covariance")
    post = mu + prior_cov @ H.T @ linalg.cho_solve(factor, y - H @ mu)
    return list(post.reshape(T, D))
