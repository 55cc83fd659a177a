"""Explicit Runge-Kutta integrators on array-valued states.

Both integrators advance an ndarray ``y`` of any shape, so a whole marker
cloud is integrated as one state. Integration may run backward in time
(``t1 < t0``). Output times are hit exactly: steps are shortened so that
every requested time is a step boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import MaxStepsExceeded, NonFiniteState

Rhs = Callable[[float, np.ndarray], np.ndarray]
PostStep = Callable[[float, np.ndarray], np.ndarray]

METHODS = ("rk4_fixed", "rk45_adaptive")


@dataclass(frozen=True)
class OdeOptions:
    method: str = "rk4_fixed"
    step: float = 1e-3
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown ODE method {self.method!r}; expected one of {METHODS}")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be > 0")

    @property
    def nominal_error(self) -> float:
        """Rough global accuracy on unit-time problems with O(1) Lipschitz fields."""
        if self.method == "rk4_fixed":
            return 1e3 * self.step**4
        return max(self.abs_tol, self.rel_tol)


def _rk4_step(rhs: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


def _dp_step(rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray):
    ks = [k1]
    for i in range(1, 7):
        yi = y.copy()
        for a, k in zip(_DP_A[i], ks):
            if a != 0.0:
                yi += (h * a) * k
        ks.append(rhs(t + _DP_C[i] * h, yi))
    y_new = y.copy()
    err = np.zeros_like(y)
    for b, e, k in zip(_DP_B5, _DP_E, ks):
        if b != 0.0:
            y_new += (h * b) * k
        if e != 0.0:
            err += (h * e) * k
    return y_new, err, ks[-1]


def _check_finite(y: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(f"non-finite ODE state at t={t:.6g}")


def integrate(
    rhs: Rhs,
    y0: np.ndarray,
    t0: float,
    t1: float,
    opts: OdeOptions = OdeOptions(),
    output_times: Sequence[float] | None = None,
    post_step: PostStep | None = None,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    Returns ``(times, states)`` where ``times`` are the requested output
    times (default: just ``t1``) and ``states`` the matching copies of y.
    ``post_step`` is applied after every accepted step and may return a
    modified state (used for domain clamping).
    """
    y = np.array(y0, dtype=float, copy=True)
    direction = 1.0 if t1 >= t0 else -1.0
    if output_times is None:
        targets = [float(t1)]
    else:
        targets = [float(s) for s in output_times]
        span = sorted((t0, t1))
        if any(s < span[0] - 1e-12 or s > span[1] + 1e-12 for s in targets):
            raise ValueError("output times must lie between t0 and t1")
        if any(direction * (b - a) < 0 for a, b in zip(targets, targets[1:])):
            raise ValueError("output times must be ordered in the integration direction")

    outputs: list[np.ndarray] = []
    t = float(t0)
    steps = 0
    if opts.method == "rk4_fixed":
        for target in targets:
            span = abs(target - t)
            n = int(np.ceil(span / opts.step - 1e-9)) if span > 0 else 0
            if steps + n > opts.max_steps:
                raise MaxStepsExceeded(f"fixed-step integration needs more than {opts.max_steps} steps")
            if n:
                h = (target - t) / n
                for i in range(n):
                    y = _rk4_step(rhs, t, y, h)
                    t_next = target if i == n - 1 else t + h
                    _check_finite(y, t_next)
                    if post_step is not None:
                        y = post_step(t_next, y)
                    t = t_next
                steps += n
            t = target
            outputs.append(y.copy())
        return np.asarray(targets), outputs

    # adaptive Dormand-Prince, elementary step-size controller
    k1 = rhs(t, y)
    scale0 = opts.abs_tol + opts.rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale0) ** 2)) if y.size else 0.0
    d1 = np.sqrt(np.mean((k1 / scale0) ** 2)) if y.size else 0.0
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, abs(t1 - t0)) if t1 != t0 else 0.0
    for target in targets:
        while direction * (target - t) > 0:
            if steps >= opts.max_steps:
                raise MaxStepsExceeded(f"adaptive integration exceeded {opts.max_steps} steps")
            h_try = min(h, abs(target - t))
            y_new, err, k_last = _dp_step(rhs, t, y, direction * h_try, k1)
            steps += 1
            scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2))) if y.size else 0.0
            if not np.isfinite(err_norm):
                h = h_try * 0.2
                if h < 1e-14:
                    raise NonFiniteState(f"adaptive step collapsed at t={t:.6g}")
                continue
            if err_norm <= 1.0:
                t = target if h_try == abs(target - t) else t + direction * h_try
                y = y_new
                _check_finite(y, t)
                if post_step is not None:
                    y = post_step(t, y)
                    k_last = rhs(t, y)
                k1 = k_last
                factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
                # a step shortened to land on a target must not shrink h
                h = h_try * factor if h_try >= h else max(h, h_try * factor)
            else:
                h = h_try * max(0.2, 0.9 * err_norm ** -0.2)
        outputs.append(y.copy())
    return np.asarray(targets), outputs
