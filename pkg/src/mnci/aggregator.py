"""Three-gate GRU cell that merges a node's previous embedding with its
neighborhood and community influence embeddings."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy.special import expit as sigmoid

from mnci.errors import ContractError, NumericError
from mnci.numeric import as_real

PARAM_NAMES = ("W_UG", "W_NG", "W_CG", "W_z", "b_UG", "b_NG", "b_CG", "b_z")


@dataclass
class AggregatorParams:
    W_UG: np.ndarray
    W_NG: np.ndarray
    W_CG: np.ndarray
    W_z: np.ndarray
    b_UG: np.ndarray
    b_NG: np.ndarray
    b_CG: np.ndarray
    b_z: np.ndarray

    def __post_init__(self):
        d = np.shape(self.b_z)[0]
        for f in fields(self):
            arr = as_real(getattr(self, f.name))
            want = (d, 3 * d) if f.name.startswith("W") else (d,)
            if arr.shape != want:
                raise ContractError(f"{f.name} has shape {arr.shape}, expected {want}")
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"{f.name} contains non-finite values")
            setattr(self, f.name, arr)

    @property
    def dim(self) -> int:
        return self.b_z.shape[0]

    @classmethod
    def zeros(cls, dim: int) -> "AggregatorParams":
        return cls(**{n: np.zeros((dim, 3 * dim) if n.startswith("W") else dim) for n in PARAM_NAMES})

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator) -> "AggregatorParams":
        """Uniform(-a, a) matrices with a = sqrt(6 / (d + 3d)); zero biases."""
        a = np.sqrt(6.0 / (dim + 3 * dim))
        kw = {}
        for n in PARAM_NAMES:
            kw[n] = rng.uniform(-a, a, size=(dim, 3 * dim)) if n.startswith("W") else np.zeros(dim)
        return cls(**kw)

    def as_dict(self) -> dict[str, np.ndarray]:
        """Name -> array; arrays are shared, so in-place edits hit the params."""
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def copy(self) -> "AggregatorParams":
        return AggregatorParams(**{n: a.copy() for n, a in self.as_dict().items()})


@dataclass
class CellTape:
    params: AggregatorParams
    x: np.ndarray       # [z_prev, ne, co]
    r: np.ndarray       # [z_prev, ng * ne, cg * co]
    ug: np.ndarray
    ng: np.ndarray
    cg: np.ndarray
    cand: np.ndarray    # tanh candidate state


def cell_forward(z_prev, ne, co, params: AggregatorParams) -> tuple[np.ndarray, CellTape]:
    d = params.dim
    z_prev = as_real(z_prev)
    ne = as_real(ne)
    co = as_real(co)
    if z_prev.shape != (d,) or ne.shape != (d,) or co.shape != (d,):
        raise ContractError(f"cell inputs must all have shape ({d},)")
    x = np.concatenate([z_prev, ne, co])
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite input to aggregator cell")

    ug = sigmoid(params.W_UG @ x + params.b_UG)
    ng = sigmoid(params.W_NG @ x + params.b_NG)
    cg = sigmoid(params.W_CG @ x + params.b_CG)
    r = np.concatenate([z_prev, ng * ne, cg * co])
    cand = np.tanh(params.W_z @ r + params.b_z)
    z_new = (1.0 - ug) * z_prev + ug * cand
    return z_new, CellTape(params, x, r, ug, ng, cand=cand, cg=cg)


@dataclass
class CellGrads:
    z_prev: np.ndarray
    ne: np.ndarray
    co: np.ndarray
    params: dict[str, np.ndarray]


def cell_backward(tape: CellTape, upstream) -> CellGrads:
    p = tape.params
    d = p.dim
    g = as_real(upstream)
    if g.shape != (d,):
        raise ContractError(f"upstream gradient must have shape ({d},), got {g.shape}")
    z_prev, ne, co = tape.x[:d], tape.x[d:2 * d], tape.x[2 * d:]

    d_ug = g * (tape.cand - z_prev)
    d_az = g * tape.ug * (1.0 - tape.cand ** 2)
    d_r = p.W_z.T @ d_az
    d_ng = d_r[d:2 * d] * ne
    d_cg = d_r[2 * d:] * co

    d_au = d_ug * tape.ug * (1.0 - tape.ug)
    d_an = d_ng * tape.ng * (1.0 - tape.ng)
    d_ac = d_cg * tape.cg * (1.0 - tape.cg)
    d_x = p.W_UG.T @ d_au + p.W_NG.T @ d_an + p.W_CG.T @ d_ac

    grads = {
        "W_UG": np.outer(d_au, tape.x),
        "W_NG": np.outer(d_an, tape.x),
        "W_CG": np.outer(d_ac, tape.x),
        "W_z": np.outer(d_az, tape.r),
        "b_UG": d_au,
        "b_NG": d_an,
        "b_CG": d_ac,
        "b_z": d_az,
    }
    return CellGrads(
        z_prev=g * (1.0 - tape.ug) + d_r[:d] + d_x[:d],
        ne=d_r[d:2 * d] * tape.ng + d_x[d:2 * d],
        co=d_r[2 * d:] * tape.cg + d_x[2 * d:],
        params=grads,
    )
