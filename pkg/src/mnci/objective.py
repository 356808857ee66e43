"""Per-event objective terms with exact gradients.

Both terms are log-likelihood style quantities; the trainer minimizes
their negation.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import expit

from mnci.errors import ContractError
from mnci.influence import log_sigmoid_neg
from mnci.numeric import as_real


class PairTerm(NamedTuple):
    value: float
    grad_u: np.ndarray
    grad_v: np.ndarray
    grad_neg: np.ndarray  # (Q, d)


class CommunityTerm(NamedTuple):
    value: float
    grad_z: np.ndarray
    grad_communities: np.ndarray  # (K, d)
    best: int


def pair_term(z_u, z_v, negatives, q: int | None = None) -> PairTerm:
    """log s(-|z_u - z_v|^2) - sum_n log s(-|z_u - z_n|^2).

    Q times the empirical mean over Q draws is just the sum over the draws.
    """
    z_u = as_real(z_u)
    z_v = as_real(z_v)
    negs = as_real(negatives).reshape(-1, z_u.shape[0])
    if q is not None and negs.shape[0] != q:
        raise ContractError(f"expected {q} negatives, got {negs.shape[0]}")

    diff_p = z_u - z_v
    d_p = diff_p @ diff_p
    diff_n = z_u - negs
    d_n = np.einsum("ij,ij->i", diff_n, diff_n)
    value = log_sigmoid_neg(d_p) - log_sigmoid_neg(d_n).sum()

    # d/dD log s(-D) = -s(D)
    c_p = -2.0 * expit(d_p)
    c_n = 2.0 * expit(d_n)
    grad_neg = -c_n[:, None] * diff_n
    grad_u = c_p * diff_p + c_n @ diff_n
    return PairTerm(value, grad_u, -c_p * diff_p, grad_neg)


def community_term(z_u, communities) -> CommunityTerm:
    """log of the largest normalized community affinity of ``z_u``."""
    z_u = as_real(z_u)
    c = as_real(communities)
    diff = z_u - c
    dist = np.einsum("ij,ij->i", diff, diff)
    logits = log_sigmoid_neg(dist)
    best = int(np.argmax(logits))
    rest = np.exp(logits - logits[best])
    rest[best] = 0.0
    # log1p keeps far-away communities' tiny contributions resolvable
    value = -np.log1p(rest.sum())
    log_norm = logits[best] - value

    coef = -np.exp(logits - log_norm)
    coef[best] += 1.0
    g_dist = -coef * expit(dist)
    grad_c = -2.0 * g_dist[:, None] * diff
    return CommunityTerm(value, -grad_c.sum(axis=0), grad_c, best)
