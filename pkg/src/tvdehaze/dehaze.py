"""Single-image dehazing by depth/reflection total variation.

A hazy channel ``I`` with atmospheric light ``A`` is mapped to the log image
``i = log(1 - I / A)``, which splits as ``i = eta + gamma`` with ``eta`` the
log-transmission and ``gamma`` a log-reflection term.  Both are recovered from

    min  alpha*TV(eta) + |eta + gamma - i|^2 + beta*TV(gamma)
    s.t. i <= eta <= 0,  i <= gamma <= 0

by alternating minimisation over each field (see :mod:`.fgp`).
The scene radiance is then ``(I - A) / max(exp(eta), t0) + A``, clamped to
``[0, 255]`` and gamma corrected.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import BoxBound, _check_same_shape, as_plane, energy_total
from .exceptions import ConfigError, DehazeError, ShapeError
from .fgp import FgpProblem, fgp_solve, subproblem_objective

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 100.0
    beta: float = 0.1
    lam: float = 0.0
    n1: int = 100
    n2: int = 100
    eps: float = 0.1
    t0: float = 0.4
    gamma_correction: float = 0.7
    c0: float = 0.0
    # None selects the estimate max(I) + c0
    a_override: float | None = 255.0
    dual_tol: float = 1e-4
    clamp_delta: float = 1e-4
    # False removes the box constraints (diagnostic only)
    constrained: bool = True
    # reject subproblem steps that raise the energy
    monotone: bool = True

    def __post_init__(self):
        def positive(name):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")

        for name in ("alpha", "beta", "eps", "gamma_correction", "dual_tol"):
            positive(name)
        if self.lam != 0:
            raise ConfigError("only lam = 0 is supported")
        if not 0 < self.t0 <= 1:
            raise ConfigError(f"t0 must lie in (0, 1], got {self.t0}")
        if not 0 < self.clamp_delta < 1:
            raise ConfigError(f"clamp_delta must lie in (0, 1), got {self.clamp_delta}")
        for name in ("n1", "n2"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not (math.isfinite(self.c0) and self.c0 >= 0):
            raise ConfigError(f"c0 must be >= 0, got {self.c0}")
        if self.a_override is not None and not (
            math.isfinite(self.a_override) and self.a_override > 0
        ):
            raise ConfigError(f"atmospheric light must be > 0, got {self.a_override}")


@dataclass
class ChannelResult:
    """Output of the pipeline for one channel."""

    radiance: np.ndarray
    eta: np.ndarray
    gamma_field: np.ndarray
    transmission: np.ndarray
    log_image: np.ndarray
    atmospheric_light: float
    energy_trace: list[float] = field(default_factory=list)
    outer_iterations: int = 0


@dataclass
class DehazeResult:
    """Per-channel results of :func:`dehaze_image`; arrays stack on the last axis."""

    channels: list[ChannelResult]

    def _stack(self, attr):
        planes = [getattr(c, attr) for c in self.channels]
        return planes[0] if len(planes) == 1 else np.stack(planes, axis=-1)

    @property
    def radiance(self) -> np.ndarray:
        return self._stack("radiance")

    @property
    def eta(self) -> np.ndarray:
        return self._stack("eta")

    @property
    def gamma_field(self) -> np.ndarray:
        return self._stack("gamma_field")

    @property
    def transmission(self) -> np.ndarray:
        return self._stack("transmission")

    @property
    def energy_traces(self) -> list[list[float]]:
        return [c.energy_trace for c in self.channels]

    @property
    def outer_iterations(self) -> int:
        return max(c.outer_iterations for c in self.channels)


class Alternation(NamedTuple):
    eta: np.ndarray
    gamma_field: np.ndarray
    energy_trace: list[float]
    iterations: int


def atmospheric_light(channel, c0: float = 0.0, a_override: float | None = None) -> float:
    """Atmospheric light for one channel: ``a_override`` or ``max(I) + c0``."""
    channel = as_plane(channel, "channel")
    top = float(channel.max())
    if a_override is None:
        return top + c0
    if a_override < top:
        raise ConfigError(
            f"atmospheric light {a_override} is below the channel maximum {top}"
        )
    return float(a_override)


def to_log_domain(channel, a: float, clamp_delta: float = 1e-4) -> np.ndarray:
    """``log(max(1 - I / a, clamp_delta))``, finite and <= 0."""
    if not a > 0:
        raise ConfigError(f"atmospheric light must be > 0, got {a}")
    channel = as_plane(channel, "channel")
    ratio = np.maximum(1.0 - channel / a, clamp_delta)
    return np.minimum(np.log(ratio), 0.0)


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    denom = np.linalg.norm(new)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(new - old) / denom)


def alternate_minimize(i, cfg: SolverConfig = SolverConfig()) -> Alternation:
    """Alternate TV solves for ``eta`` and ``gamma`` starting from ``(i, 0)``.

    ``energy_trace[0]`` is the energy of the starting point and entry ``k`` the
    energy after outer iteration ``k``.  The inner solver is inexact, so with
    ``cfg.monotone`` a subproblem step whose objective is worse than the
    current iterate is rejected; the trace then never increases.
    """
    i = as_plane(i, "i")
    if np.any(i > 0):
        raise ValueError("log image must be <= 0 everywhere")
    bound = BoxBound(i) if cfg.constrained else None

    def energy(eta, gamma):
        return energy_total(eta, gamma, i, cfg.alpha, cfg.beta, cfg.lam)

    eta = i.copy()
    gamma = np.zeros_like(i)
    trace = [energy(eta, gamma)]
    k = 0
    for k in range(1, cfg.n1 + 1):
        try:
            eta_new = _descend(FgpProblem(i - gamma, cfg.alpha, bound), eta, cfg)
            gamma_new = _descend(FgpProblem(i - eta_new, cfg.beta, bound), gamma, cfg)
        except DehazeError as exc:
            raise type(exc)(f"outer iteration {k}: {exc}") from exc
        d_eta = _relative_change(eta_new, eta)
        d_gamma = _relative_change(gamma_new, gamma)
        eta, gamma = eta_new, gamma_new
        trace.append(energy(eta, gamma))
        log.debug("outer %d: E=%.6g d_eta=%.3g d_gamma=%.3g", k, trace[-1], d_eta, d_gamma)
        if d_eta <= cfg.eps and d_gamma <= cfg.eps:
            break
    return Alternation(eta, gamma, trace, k)


def _descend(prob: FgpProblem, current: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    candidate = fgp_solve(prob, cfg.n2, cfg.dual_tol).solution
    if not cfg.monotone:
        return candidate
    if subproblem_objective(candidate, prob) <= subproblem_objective(current, prob):
        return candidate
    return current


def recover_radiance(channel, eta, a: float, t0: float) -> np.ndarray:
    """Invert the haze model with the transmission floored at ``t0``; result in [0, 255]."""
    channel = as_plane(channel, "channel")
    eta = as_plane(eta, "eta")
    _check_same_shape(("channel", channel), ("eta", eta))
    t = np.maximum(np.exp(eta), t0)
    return np.clip((channel - a) / t + a, 0.0, 255.0)


def gamma_correct(plane, g: float) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    return 255.0 * (np.clip(plane, 0.0, 255.0) / 255.0) ** g


def dehaze_channel(channel, cfg: SolverConfig = SolverConfig()) -> ChannelResult:
    channel = as_plane(channel, "channel")
    if channel.min() < 0 or channel.max() > 255:
        raise ValueError("channel intensities must lie in [0, 255]")
    a = atmospheric_light(channel, cfg.c0, cfg.a_override)
    i = to_log_domain(channel, a, cfg.clamp_delta)
    alt = alternate_minimize(i, cfg)
    j = recover_radiance(channel, alt.eta, a, cfg.t0)
    return ChannelResult(
        radiance=gamma_correct(j, cfg.gamma_correction),
        eta=alt.eta,
        gamma_field=alt.gamma_field,
        transmission=np.exp(alt.eta),
        log_image=i,
        atmospheric_light=a,
        energy_trace=alt.energy_trace,
        outer_iterations=alt.iterations,
    )


def split_channels(image) -> list[np.ndarray]:
    """Split an ``(H, W)`` or ``(H, W, C)`` array into C planes, C in {1, 3}."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return [image]
    if image.ndim == 3 and image.shape[2] in (1, 3):
        return [image[:, :, c] for c in range(image.shape[2])]
    raise ShapeError(f"expected a grayscale or RGB image, got shape {image.shape}")


def dehaze_image(image, cfg: SolverConfig = SolverConfig(), jobs: int = 1) -> DehazeResult:
    """Dehaze every channel independently.

    ``image`` is ``(H, W)``, ``(H, W, 1)`` or ``(H, W, 3)`` with values in
    ``[0, 255]``.  ``jobs > 1`` runs channels on a thread pool; results are
    identical to sequential execution.
    """
    planes = split_channels(image)
    if jobs > 1 and len(planes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: dehaze_channel(c, cfg), planes))
    else:
        results = [dehaze_channel(c, cfg) for c in planes]
    return DehazeResult(results)
