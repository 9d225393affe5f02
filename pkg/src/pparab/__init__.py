"""Numerical laboratory for the degenerate diffusion equation
u_t = div(|grad u|^{p-2} grad u) with p > 2 and measure initial data.

Closed-form source solutions and barriers live in `exact`, the conservative
explicit scheme in `solver`, measurement operators in `analysis`, and the
command line front end in `harness`.
"""

from .params import Exponents, derive_exponents

__all__ = ["Exponents", "derive_exponents"]

__version__ = "0.1.0"
