"""Hierarchical linear dynamical system with explicitly set parameters.

Each hidden layer below the top evolves as

    x_t = -x_{t-1} + B z_{t-1} + noise

where ``z`` is the layer directly above, so a layer at steady state sits at
half of ``B z``: a two-step moving average of the layer below, summed over
blocks. The top layer is a random walk. Layers are stacked into one joint
state (top layer first) and filtered with :func:`statespace.kalman_step`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import linalg

from .errors import ConfigurationError, ContractError, HldsError
from .statespace import FilterState, LinearModel, kalman_step

DEFAULT_LAYER_DIMS = (96, 24, 12, 2)


@dataclass(frozen=True)
class HldsConfig:
    """Shape and noise settings of the hierarchy.

    ``layer_dims`` is bottom-first; the bottom layer is observed directly, so
    its width must equal ``window_len``. ``innovation_scale`` is the variance
    per unit of layer width and defaults to ``1 / layer_dims[0]``, which puts
    the bottom-layer and observation variances at 1.
    """

    layer_dims: tuple[int, ...] = DEFAULT_LAYER_DIMS
    innovation_scale: float | None = None
    obs_noise_override: float | None = None
    window_len: int = 96
    overlap: int = 48
    initial_cov_scale: float = 1.0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ConfigurationError(f"need at least two layers, got {list(dims)}")
        if any(d < 1 for d in dims):
            raise ConfigurationError(f"layer dimensions must be positive, got {list(dims)}")
        for lower, upper in zip(dims, dims[1:]):
            if upper >= lower:
                raise ConfigurationError(
                    f"layer dims must strictly decrease bottom to top, got {list(dims)}"
                )
            if lower % upper:
                raise ConfigurationError(
                    f"layer of dim {lower} is not divisible by the layer above ({upper})"
                )
        if self.innovation_scale is None:
            object.__setattr__(self, "innovation_scale", 1.0 / dims[0])
        if not self.innovation_scale > 0:
            raise ConfigurationError(
                f"innovation_scale must be positive, got {self.innovation_scale}"
            )
        if self.obs_noise_override is not None and not self.obs_noise_override > 0:
            raise ConfigurationError(
                f"obs_noise_override must be positive, got {self.obs_noise_override}"
            )
        if not self.initial_cov_scale > 0:
            raise ConfigurationError(
                f"initial_cov_scale must be positive, got {self.initial_cov_scale}"
            )
        if self.window_len < 1 or not 0 <= self.overlap < self.window_len:
            raise ConfigurationError(
                f"need 0 <= overlap < window_len, got overlap={self.overlap}, "
                f"window_len={self.window_len}"
            )
        if self.window_len != dims[0]:
            raise ConfigurationError(
                f"window_len {self.window_len} must equal bottom layer dim {dims[0]}"
            )

    @property
    def hop(self) -> int:
        return self.window_len - self.overlap

    @property
    def layer_variances(self) -> tuple[float, ...]:
        return tuple(self.innovation_scale * d for d in self.layer_dims)

    @property
    def obs_noise(self) -> float:
        if self.obs_noise_override is not None:
            return float(self.obs_noise_override)
        return self.layer_variances[0]


def build_coupling(n: int, s: int) -> np.ndarray:
    """Coupling from an ``s``-dim layer into the ``n``-dim layer below it.

    Row block ``k`` (height ``n/s``) is ``2s/n`` in column ``k``; every column
    sums to 2.
    """
    if n < 1 or s < 1 or n % s:
        raise ConfigurationError(f"lower dim {n} is not divisible by upper dim {s}")
    return np.kron(np.eye(s), np.full((n // s, 1), 2.0 * s / n))


@dataclass(frozen=True, eq=False)
class JointModel:
    config: HldsConfig
    joint_transition: np.ndarray
    joint_observation: np.ndarray
    joint_state_noise_cov: np.ndarray
    obs_noise_cov: np.ndarray
    # bottom-first, matching config.layer_dims; the joint vector is top-first
    layer_slices: tuple[slice, ...]
    linear: LinearModel = field(repr=False)

    @property
    def state_dim(self) -> int:
        return self.joint_transition.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.joint_observation.shape[0]

    @property
    def top_slice(self) -> slice:
        return self.layer_slices[-1]

    @property
    def bottom_slice(self) -> slice:
        return self.layer_slices[0]


def build_joint_model(config: HldsConfig) -> JointModel:
    dims = config.layer_dims
    D = sum(dims)
    top_first = dims[::-1]
    starts = np.concatenate([[0], np.cumsum(top_first)])
    slices_top_first = [slice(int(a), int(b)) for a, b in zip(starts, starts[1:])]
    slices = tuple(slices_top_first[::-1])

    F = np.zeros((D, D))
    for i, sl in enumerate(slices):
        if i == len(slices) - 1:
            F[sl, sl] = np.eye(dims[i])
        else:
            F[sl, sl] = -np.eye(dims[i])
            F[sl, slices[i + 1]] = build_coupling(dims[i], dims[i + 1])

    H = np.zeros((dims[0], D))
    H[:, slices[0]] = np.eye(dims[0])
    Q = linalg.block_diag(*[v * np.eye(d) for v, d in zip(config.layer_variances[::-1], top_first)])
    R = config.obs_noise * np.eye(dims[0])
    linear = LinearModel(F, H, Q, R)
    return JointModel(
        config=config,
        joint_transition=linear.transition,
        joint_observation=linear.observation,
        joint_state_noise_cov=linear.state_noise_cov,
        obs_noise_cov=linear.obs_noise_cov,
        layer_slices=slices,
        linear=linear,
    )


def initial_state(model: JointModel, first_observation, initial_cov_scale: float | None = None) -> FilterState:
    """Bottom layer set to the first observation, upper layers zero, covariance ``pi0 * I``."""
    y0 = np.asarray(first_observation, dtype=float)
    if y0.shape != (model.obs_dim,):
        raise ContractError(
            f"first observation has shape {y0.shape}, expected ({model.obs_dim},)"
        )
    scale = model.config.initial_cov_scale if initial_cov_scale is None else initial_cov_scale
    if not scale > 0:
        raise ContractError(f"initial covariance scale must be positive, got {scale}")
    x = np.zeros(model.state_dim)
    x[model.bottom_slice] = y0
    return FilterState(x, scale * np.eye(model.state_dim))


def iter_filter(model: JointModel, observations, initial_cov_scale: float | None = None) -> Iterator[FilterState]:
    """Lazily yield one filtered state per observation (the first is the initial state)."""
    it = iter(observations)
    try:
        first = next(it)
    except StopIteration:
        raise ContractError("observation sequence is empty") from None
    state = initial_state(model, first, initial_cov_scale)
    yield state
    for t, y in enumerate(it, start=1):
        try:
            state = kalman_step(state, y, model.linear)
        except HldsError as exc:
            raise type(exc)(f"frame {t}: {exc}") from exc
        yield state


def run_filter(model: JointModel, observations, initial_cov_scale: float | None = None) -> list[FilterState]:
    return list(iter_filter(model, observations, initial_cov_scale))


def filter_means(
    model: JointModel,
    observations,
    initial_cov_scale: float | None = None,
    steady_tol: float = 1e-12,
) -> np.ndarray:
    """Filtered joint estimates as a ``(T, D)`` array; covariances are not kept.

    The covariance recursion does not depend on the data, so once it stops
    changing (relative change below ``steady_tol``) the remaining frames are
    filtered with the fixed steady-state gain. Results agree with
    :func:`run_filter` to within that tolerance.
    """
    obs = np.asarray(observations, dtype=float)
    if obs.ndim != 2 or obs.shape[0] == 0 or obs.shape[1] != model.obs_dim:
        raise ContractError(f"observations have shape {obs.shape}, expected (T, {model.obs_dim})")
    T = obs.shape[0]
    out = np.empty((T, model.state_dim))
    states = iter_filter(model, obs, initial_cov_scale)
    state = next(states)
    out[0] = state.estimate
    t = 1
    prev = state.covariance
    while t < T:
        state = next(states)
        out[t] = state.estimate
        t += 1
        P = state.covariance
        if np.max(np.abs(P - prev)) <= steady_tol * np.max(np.abs(P)):
            break
        prev = P
    if t < T:
        if not np.all(np.isfinite(obs[t:])):
            bad = t + int(np.argmax(~np.all(np.isfinite(obs[t:]), axis=1)))
            raise ContractError(f"frame {bad}: observation contains non-finite values")
        lin = model.linear
        F, H = lin.transition, lin.observation
        P_prior = F @ state.covariance @ F.T + lin.state_noise_cov
        S = H @ P_prior @ H.T + lin.obs_noise_cov
        gain = linalg.solve(S, H @ P_prior, assume_a="pos").T
        A = (np.eye(model.state_dim) - gain @ H) @ F
        driven = obs[t:] @ gain.T
        x = state.estimate
        for k in range(T - t):
            x = A @ x + driven[k]
            out[t + k] = x
    return out


def extract_z(states: Sequence[FilterState] | np.ndarray, model: JointModel) -> np.ndarray:
    """Top-layer slice of each state, shape ``(T, d_top)``."""
    if isinstance(states, np.ndarray):
        means = states
    else:
        means = np.array([s.estimate for s in states])
    if means.ndim != 2 or means.shape[1] != model.state_dim:
        raise ContractError(f"states have shape {means.shape}, expected (T, {model.state_dim})")
    return means[:, model.top_slice].copy()
