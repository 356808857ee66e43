"""Adam with bias correction, for dense tensors and row-sparse per-node scalars."""

from __future__ import annotations

import numpy as np

from mnci.errors import NumericError


class Adam:
    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        # first/second moments keyed by tensor name
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        # dense tensors share one counter; sparse tensors count per entry
        self.step_count = 0
        self.sparse_steps: dict[str, np.ndarray] = {}

    def _moments(self, name, param):
        if name not in self.m:
            self.m[name] = np.zeros_like(param)
            self.v[name] = np.zeros_like(param)
        return self.m[name], self.v[name]

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update every tensor in ``params`` in place."""
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {name}")
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for name, p in params.items():
            g = grads[name]
            m, v = self._moments(name, p)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def sparse_step(self, name: str, param: np.ndarray, index: np.ndarray, grad: np.ndarray) -> None:
        """Update only ``param[index]``; untouched entries keep their moments."""
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for {name}")
        m, v = self._moments(name, param)
        steps = self.sparse_steps.setdefault(name, np.zeros(param.shape[0], dtype=np.int64))
        steps[index] += 1
        t = steps[index]
        m[index] = self.beta1 * m[index] + (1.0 - self.beta1) * grad
        v[index] = self.beta2 * v[index] + (1.0 - self.beta2) * grad * grad
        m_hat = m[index] / (1.0 - self.beta1 ** t)
        v_hat = v[index] / (1.0 - self.beta2 ** t)
        param[index] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(opt: Adam, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
    opt.step(params, grads)
