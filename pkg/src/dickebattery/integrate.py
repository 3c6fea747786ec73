"""Adaptive Dormand-Prince 5(4) stepping for autonomous matrix ODEs."""
from __future__ import annotations

import numpy as np

# Dormand & Prince (1980) tableau; the 7th stage is the FSAL stage.
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepSizeUnderflow(RuntimeError):
    """The controller asked for a step below floating-point resolution."""


class DormandPrince:
    """Embedded RK5(4) with standard error control.

    ``rhs(y)`` must not depend on time. ``post_step`` (optional) is applied to
    every accepted state and to its cached derivative, so it must be a linear
    projection that commutes with ``rhs`` (Hermitian part of a density matrix
    under a Lindblad generator qualifies).
    """

    def __init__(
        self, rhs, rtol=1e-9, atol=1e-11, post_step=None, h0=None, max_step=np.inf, max_steps=10_000_000
    ):
        self.rhs = rhs
        self.max_step = max_step
        self.rtol = rtol
        self.atol = atol
        self.post_step = post_step
        self.h = h0
        self.max_steps = max_steps
        self.n_accepted = 0
        self.n_rejected = 0
        self._f = None

    def _initial_step(self, y, f):
        # Hairer, Norsett & Wanner, Solving ODEs I, sec. II.4
        scale = self.atol + self.rtol * np.abs(y)
        d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
        d1 = np.sqrt(np.mean(np.abs(f / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        f1 = self.rhs(y + h0 * f)
        d2 = np.sqrt(np.mean(np.abs((f1 - f) / scale) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1)

    def _step(self, y, f, h):
        k = [f]
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[i]):
                if a:
                    acc += (h * a) * k[j]
            if i == 6:
                y_new = acc
            k.append(self.rhs(acc))
        err = h * sum(e * kk for e, kk in zip(_E, k) if e)
        return y_new, k[6], err

    def _err_norm(self, y, y_new, err):
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))

    def advance(self, y, t0, t1):
        """Integrate from ``t0`` to exactly ``t1``; returns the state at ``t1``."""
        y = np.array(y, dtype=complex)
        if t1 <= t0:
            return y
        if self._f is None:
            self._f = self.rhs(y)
        f = self._f
        if self.h is None:
            self.h = self._initial_step(y, f)
        t = t0
        steps = 0
        while t < t1:
            h = self.h = min(self.h, self.max_step)
            last = t + h >= t1
            if last:
                h = t1 - t
            if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                if last:
                    break
                raise StepSizeUnderflow(f"step size {h:.3e} underflowed at t={t:.6g}")
            y_new, f_new, err = self._step(y, f, h)
            en = self._err_norm(y, y_new, err)
            if en <= 1.0:
                t = t1 if last else t + h
                if self.post_step is not None:
                    y_new = self.post_step(y_new)
                    f_new = self.post_step(f_new)
                y, f = y_new, f_new
                self.n_accepted += 1
                factor = MAX_FACTOR if en == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * en ** -0.2))
                # a step clipped to land on t1 says little about the natural size
                if not last or h >= self.h:
                    self.h = h * factor
            else:
                self.n_rejected += 1
                self.h = h * max(MIN_FACTOR, SAFETY * en ** -0.2)
            steps += 1
            if steps > self.max_steps:
                raise RuntimeError(f"exceeded {self.max_steps} steps before t={t1}")
        self._f = f
        return y

    def reset(self):
        """Forget the step size and cached derivative (generator changed)."""
        self.h = None
        self._f = None
