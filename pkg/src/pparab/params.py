"""Exponent bookkeeping for the degenerate diffusion u_t = div(|grad u|^{p-2} grad u).

Everything downstream (closed forms, decay rates, integrability thresholds)
is driven by a handful of exponents derived from (p, n). They are collected
once in an immutable container so that the algebra lives in exactly one place.
"""

from dataclasses import dataclass

__all__ = ["Exponents", "derive_exponents"]


@dataclass(frozen=True)
class Exponents:
    """Derived exponents for degeneracy p > 2 in spatial dimension n.

    lam        scaling exponent n*(p-2) + p of the source-type solution
    alpha      sup-norm decay rate n/lam:  ||u(t)||_inf ~ t^{-alpha}
    sigma      mass exponent p/lam in the smoothing estimate
    gamma      support recession exponent; algebraically equal to 1/lam
    kappa      Sobolev embedding exponent (n+2)/n
    q_u_max    integrability threshold p - 1 + p/n for the solution
    q_grad_max integrability threshold p - 1 + 1/(n+1) for the gradient
    """

    p: float
    n: int
    lam: float
    alpha: float
    sigma: float
    gamma: float
    kappa: float
    q_u_max: float
    q_grad_max: float


def derive_exponents(p: float, n: int) -> Exponents:
    """Derive all exponents from the degeneracy p and the dimension n.

    Requires p > 2 (degenerate range) and n in {1, 2} (the dimensions the
    grid machinery supports).
    """
    p = float(p)
    if not p > 2.0:
        raise ValueError(f"p = {p} must be > 2 (degenerate range)")
    if n not in (1, 2):
        raise ValueError(f"n = {n} must be 1 or 2")
    lam = n * (p - 2.0) + p
    alpha = n / lam
    sigma = p / lam
    gamma = (1.0 / p) * (1.0 - n * (p - 2.0) / lam)
    kappa = (n + 2.0) / n
    return Exponents(
        p=p,
        n=n,
        lam=lam,
        alpha=alpha,
        sigma=sigma,
        gamma=gamma,
        kappa=kappa,
        q_u_max=p - 1.0 + p / n,
        q_grad_max=p - 1.0 + 1.0 / (n + 1.0),
    )
