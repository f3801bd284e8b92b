"""Density operators over covariance matrices.

The map C -> exp(-beta C) / Tr(exp(-beta C)) turns any symmetric matrix into a
unit-trace, strictly positive-definite operator that shares C's eigenvectors.
Positive beta compresses high-variance directions (their density eigenvalues
shrink); negative beta reverses the roles; beta = 0 gives the uniform density
I/m regardless of C.

Operators are stored spectrally (basis plus eigenvalue vector) rather than as
dense matrix exponentials, so powers and matrix-vector products are exact in
the eigenbasis and cost O(m^2).  Exponentials are stabilized by subtracting the
maximum exponent, and |beta| * ||C|| is capped at 700 to stay inside double
range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .covariance import as_matrix
from .errors import BetaRangeError, ShapeError

OVERFLOW_GUARD = 700.0

# Below this |beta * a| the (e^a - 1)/a factor is replaced by its series limit.
_F_SERIES_EPS = 1e-8


@dataclass(frozen=True)
class DensityOperator:
    """Spectral form of exp(-beta C) / Z.

    ``density_eigenvalues[i]`` is exp(-beta * lambda_i) / Z aligned with
    ``basis`` (source eigenvalues ascending).  All density eigenvalues are
    strictly positive and sum to one, even when C is singular.
    """

    beta: float
    basis: spectral.SpectralDecomposition
    density_eigenvalues: np.ndarray
    partition_function: float

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def source_spectrum(self) -> np.ndarray:
        return self.basis.eigenvalues

    def matrix(self) -> np.ndarray:
        """Dense rho (rarely needed; most callers stay spectral)."""
        return spectral.spectral_matrix(self.basis, self.density_eigenvalues)

    def apply(self, x, power: int = 1) -> np.ndarray:
        """Compute rho^power @ x in the eigenbasis; x may be a vector or a matrix of columns."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise ShapeError(f"vector dim {x.shape[0]} != operator dim {self.dim}")
        v = self.basis.eigenvectors
        scale = self.density_eigenvalues**power
        coeffs = v.T @ x
        scaled = scale[:, None] * coeffs if x.ndim == 2 else scale * coeffs
        return v @ scaled


def _check_guard(beta: float, eigenvalues: np.ndarray):
    norm = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    product = abs(beta) * norm
    if product > OVERFLOW_GUARD:
        raise BetaRangeError(
            f"|beta| * ||C|| = {product:.3e} exceeds the overflow guard {OVERFLOW_GUARD}"
        )


def _density_eigenvalues(beta: float, eigenvalues: np.ndarray):
    """Stabilized softmax of -beta * lambda; returns (rho, Z)."""
    exponents = -beta * eigenvalues
    shift = float(np.max(exponents))
    weights = np.exp(exponents - shift)
    total = float(np.sum(weights))
    rho = weights / total
    z = math.exp(shift) * total
    return rho, z


def density_operator(c, beta: float) -> DensityOperator:
    """Build the density operator of a symmetric matrix at inverse temperature beta.

    Accepts a CovarianceMatrix or a plain symmetric array.

    Raises:
        BetaRangeError: |beta| * ||C|| exceeds the overflow guard.
    """
    decomp = spectral.eigh(as_matrix(c))
    _check_guard(beta, decomp.eigenvalues)
    rho, z = _density_eigenvalues(beta, decomp.eigenvalues)
    rho.flags.writeable = False
    return DensityOperator(
        beta=float(beta),
        basis=decomp,
        density_eigenvalues=rho,
        partition_function=z,
    )


def partition_function(c, beta: float) -> float:
    """Z = sum_i exp(-beta * lambda_i)."""
    eigenvalues = np.linalg.eigvalsh(as_matrix(c))
    _check_guard(beta, eigenvalues)
    _, z = _density_eigenvalues(beta, eigenvalues)
    return z


def f_factor(beta: float, norm_c: float, norm_c_plus_dc: float) -> float:
    """Perturbation amplification factor from the density error bound.

    Equals 1 for beta >= 0.  For beta < 0 it is
    exp(|beta| ||C||) * (exp(|beta| a) - 1) / (|beta| a) with
    a = ||C + dC|| - ||C||; the removable singularity at a -> 0 is filled with
    the series limit.  Continuous at beta -> 0 with limit 1.
    """
    if norm_c < 0 or norm_c_plus_dc < 0:
        raise ValueError("norms must be nonnegative")
    if beta >= 0:
        return 1.0
    amp = math.exp(abs(beta) * norm_c)
    a = norm_c_plus_dc - norm_c
    arg = abs(beta) * a
    if abs(arg) < _F_SERIES_EPS:
        return amp
    return amp * math.expm1(arg) / arg


def density_error_bound(c, dc, beta: float) -> float:
    """Upper bound on ||rho(C + dC) - rho(C)|| in operator norm.

    R = Z'/Z is measured from the two partition functions rather than assumed;
    the bound is only guaranteed when Z >= 1 (e.g. after shift regularization),
    which callers that need the guarantee should arrange.
    """
    c = as_matrix(c)
    dc = np.asarray(dc, dtype=float)
    if dc.shape != c.shape:
        raise ShapeError(f"perturbation shape {dc.shape} != matrix shape {c.shape}")
    m = c.shape[0]
    norm_c = spectral.operator_norm(c)
    norm_perturbed = spectral.operator_norm(c + dc)
    norm_dc = spectral.operator_norm(dc)
    z = partition_function(c, beta)
    z_perturbed = partition_function(c + dc, beta)
    ratio = z_perturbed / z
    factor = f_factor(beta, norm_c, norm_perturbed)
    tail = 1.0 + m * math.exp(abs(beta) * norm_c if beta < 0 else 0.0)
    return abs(beta) * norm_dc * factor / ratio * tail


def partition_ratio(c, dc, beta: float) -> float:
    """R = Z(C + dC) / Z(C), the measured partition-function ratio."""
    return partition_function(as_matrix(c) + np.asarray(dc, dtype=float), beta) / partition_function(c, beta)
