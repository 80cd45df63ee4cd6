"""Matrix-free conjugate-gradient solver with deflation and solve reports.

All elliptic problems in the package reduce to scalar grid functions with a
self-adjoint positive (semi)definite operator for a pointwise-weighted inner
product, so a single CG kernel serves the lapse, the shift components, the
internal potential, the gauge projection and the harmonic-basis solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError


@dataclass
class EllipticSolveReport:
    """Outcome of one elliptic solve."""

    operator: str
    iterations: int
    residual: float
    tolerance: float
    converged: bool
    notes: str = ""

    def as_dict(self) -> dict:
        return {
            "operator": self.operator,
            "iterations": self.iterations,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "converged": self.converged,
            "notes": self.notes,
        }


@dataclass
class SolverLog:
    """Accumulates solve reports over a run."""

    reports: list[EllipticSolveReport] = field(default_factory=list)

    def add(self, report: EllipticSolveReport) -> EllipticSolveReport:
        self.reports.append(report)
        return report

    def iteration_total(self, operator: str) -> int:
        return sum(r.iterations for r in self.reports if r.operator == operator)

    def last(self, operator: str) -> EllipticSolveReport | None:
        for r in reversed(self.reports):
            if r.operator == operator:
                return r
        return None


def _winner(u: np.ndarray, v: np.ndarray, weight: np.ndarray) -> float:
    return float(np.sum(u * v * weight))


def orthonormalize(vectors: list[np.ndarray], weight: np.ndarray,
                   drop_tol: float = 1e-12) -> list[np.ndarray]:
    """Modified Gram-Schmidt in the weighted inner product."""
    out: list[np.ndarray] = []
    for v in vectors:
        w = v.astype(float).copy()
        for u in out:
            w -= _winner(w, u, weight) * u
        nrm = np.sqrt(_winner(w, w, weight))
        if nrm > drop_tol * np.sqrt(_winner(v, v, weight) + 1e-300):
            out.append(w / nrm)
    return out


def project_out(x: np.ndarray, basis: list[np.ndarray], weight: np.ndarray) -> np.ndarray:
    for u in basis:
        x = x - _winner(x, u, weight) * u
    return x


def cg_solve(apply_a, rhs: np.ndarray, x0: np.ndarray | None = None, *,
             weight: np.ndarray, name: str, rtol: float = 1e-12, atol: float = 0.0,
             maxiter: int = 5000, deflate: list[np.ndarray] | None = None,
             precond=None) -> tuple[np.ndarray, EllipticSolveReport]:
    """Conjugate gradients for A x = rhs in the weighted inner product.

    ``apply_a`` must be self-adjoint positive semidefinite for
    ``<u, v> = sum(u v weight)``; ``deflate`` lists kernel vectors, which are
    orthonormalized and projected out of the data and of every iterate.  A
    nonpositive curvature ``<p, A p>`` raises NumericError.  Returns the
    kernel-orthogonal solution and a report; the report counts matrix
    applications inside the loop.
    """
    basis = orthonormalize(list(deflate) if deflate else [], weight)
    b = project_out(rhs.astype(float), basis, weight)
    x = np.zeros_like(b) if x0 is None else project_out(x0.astype(float).copy(), basis, weight)

    bnorm = np.sqrt(_winner(b, b, weight))
    tol = max(rtol * bnorm, atol)
    r = b - apply_a(x)
    r = project_out(r, basis, weight)
    rnorm = np.sqrt(_winner(r, r, weight))
    if rnorm <= tol:
        return x, EllipticSolveReport(name, 0, rnorm, tol, True, "warm start accepted")

    z = precond(r) if precond is not None else r
    z = project_out(z, basis, weight)
    p = z.copy()
    rz = _winner(r, z, weight)
    iterations = 0
    for _ in range(maxiter):
        ap = apply_a(p)
        pap = _winner(p, ap, weight)
        iterations += 1
        if pap <= 0.0:
            raise NumericError(
                f"{name}: operator not positive on search direction (pAp = {pap:.3e})")
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        r = project_out(r, basis, weight)
        rnorm = np.sqrt(_winner(r, r, weight))
        if rnorm <= tol:
            return x, EllipticSolveReport(name, iterations, rnorm, tol, True)
        z = precond(r) if precond is not None else r
        z = project_out(z, basis, weight)
        rz_new = _winner(r, z, weight)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    raise NumericError(
        f"{name}: no convergence in {maxiter} iterations (residual {rnorm:.3e}, tol {tol:.3e})")
