"""AdamW with decoupled weight decay and cosine annealing warm restarts."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class NonFiniteGradientError(RuntimeError):
    """Training must abort rather than silently continue on NaN/inf gradients."""


class CosineWarmRestarts:
    """eta(t) = eta_min + (eta0 - eta_min) * (1 + cos(pi * t_cycle / T)) / 2.

    The cycle position resets every T steps; with t_mult > 1 each new cycle
    is t_mult times longer than the previous one.
    """

    def __init__(self, eta0: float, t0: int, t_mult: int = 1, eta_min: float = 1e-6):
        if t0 < 1 or t_mult < 1:
            raise ValueError("t0 and t_mult must be >= 1")
        self.eta0 = eta0
        self.t0 = t0
        self.t_mult = t_mult
        self.eta_min = eta_min

    def lr_at(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be >= 0")
        cycle_len = self.t0
        t = step
        while t >= cycle_len:
            t -= cycle_len
            cycle_len *= self.t_mult
        return self.eta_min + (self.eta0 - self.eta_min) * (1.0 + np.cos(np.pi * t / cycle_len)) / 2.0


class AdamW:
    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        weight_decay: float = 1e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        scheduler: CosineWarmRestarts | None = None,
    ):
        self.params = params
        self.base_lr = lr
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.scheduler = scheduler
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def set_epoch(self, epoch: int) -> None:
        """Scheduler steps per epoch; learning rate is fixed within an epoch."""
        if self.scheduler is not None:
            self.lr = self.scheduler.lr_at(epoch)

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for key, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            elif not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(f"non-finite gradient in parameter {key!r}")
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * p.data)

    def state_dict(self) -> dict:
        return {
            "step_count": self.step_count,
            "lr": self.lr,
            "m": {k: v.tolist() for k, v in self.m.items()},
            "v": {k: v.tolist() for k, v in self.v.items()},
        }
