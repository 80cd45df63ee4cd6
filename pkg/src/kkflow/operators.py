"""Finite-difference operators on periodic structured 3-grids.

Conventions used across the package:

* Field arrays carry the three grid axes first; component axes follow.
  Scalars are ``(n1, n2, n3)``, one-forms and vectors ``(..., 3)``, symmetric
  2-tensors ``(..., 3, 3)``, and derivative indices are appended as the LAST
  axis by every differentiation helper.
* Christoffel symbols are stored as ``Gam[..., k, i, j]`` for Gamma^k_{ij}.
* Two stencil families coexist.  The centered family (``dc`` and friends,
  second order) feeds curvature, Lie derivatives, physics right-hand sides
  and the gauge projection; the centered composition of first derivatives is
  what keeps ``d(grad f) = 0`` exact in the gauge step.  The staggered family
  (``dp`` forward, ``dm`` backward) builds the mimetic Laplacians used by the
  elliptic solvers and the energy monitors; those are exactly self-adjoint
  and positive semidefinite for the metric-weighted inner product, with
  kernel equal to the constants.
* Flat-torus symbols: the centered Laplacian maps ``sin(k.x)`` to
  ``-sum_a sin^2(k_a h_a)/h_a^2`` times itself, the mimetic one to
  ``-sum_a 4 sin^2(k_a h_a / 2)/h_a^2`` times itself.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, NumericError, UsageError

DET_TOL = 1e-14
MAX_SOBOLEV_ORDER = 6

_LETTERS = "abcdefgh"


def roll_m(arr: np.ndarray, axis: int) -> np.ndarray:
    """Sample at x + e_axis (contents shifted from the right neighbour)."""
    return np.roll(arr, -1, axis=axis)


def roll_p(arr: np.ndarray, axis: int) -> np.ndarray:
    """Sample at x - e_axis."""
    return np.roll(arr, 1, axis=axis)


def dc(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered first difference along a grid axis."""
    return (roll_m(arr, axis) - roll_p(arr, axis)) / (2.0 * h)


def dp(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Forward difference (f(x + e) - f(x)) / h."""
    return (roll_m(arr, axis) - arr) / h


def dm(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Backward difference (f(x) - f(x - e)) / h."""
    return (arr - roll_p(arr, axis)) / h


def partials_c(arr: np.ndarray, h: tuple[float, float, float]) -> np.ndarray:
    """Centered partials along the three grid axes, appended as a last axis."""
    return np.stack([dc(arr, a, h[a]) for a in range(3)], axis=-1)


def partials_p(arr: np.ndarray, h: tuple[float, float, float]) -> np.ndarray:
    """Forward partials along the three grid axes, appended as a last axis."""
    return np.stack([dp(arr, a, h[a]) for a in range(3)], axis=-1)


def symmetrize_mirror(u: np.ndarray) -> np.ndarray:
    """Copy the upper triangle of the trailing (3, 3) block onto the lower.

    Enforces bitwise symmetry for tensors that are symmetric analytically but
    whose two triangles were produced by differently associated float sums.
    """
    v = u.copy()
    v[..., 1, 0] = v[..., 0, 1]
    v[..., 2, 0] = v[..., 0, 2]
    v[..., 2, 1] = v[..., 1, 2]
    return v


def det3(g: np.ndarray) -> np.ndarray:
    return np.linalg.det(g)


def sym_inv3(g: np.ndarray, what: str = "metric") -> np.ndarray:
    """Pointwise inverse of a field of symmetric 3x3 matrices with a det guard."""
    d = np.linalg.det(g)
    if not np.all(np.isfinite(d)) or np.min(np.abs(d)) <= DET_TOL:
        raise NumericError(f"singular {what}: min |det| = {np.min(np.abs(d)):.3e}")
    return symmetrize_mirror(np.linalg.inv(g))


def min_eig_sym3(g: np.ndarray) -> float:
    """Smallest eigenvalue over the grid of a symmetric 3x3 tensor field."""
    return float(np.min(np.linalg.eigvalsh(g)))


def expect_shape(arr: np.ndarray, trailing: tuple[int, ...], dims: tuple[int, int, int], what: str) -> None:
    want = tuple(dims) + trailing
    if arr.shape != want:
        raise UsageError(f"{what}: expected shape {want}, got {arr.shape}")


# ---------------------------------------------------------------------------
# curvature of a metric field (centered family)
# ---------------------------------------------------------------------------

def christoffels_raw(g: np.ndarray, ginv: np.ndarray, h: tuple[float, float, float]) -> np.ndarray:
    """Gamma^k_{ij} of the metric field g, centered differences.

    Bitwise symmetric in (i, j) provided g is bitwise symmetric.
    """
    dg = partials_c(g, h)  # dg[..., l, j, i] = partial_i g_{lj}
    s = (np.einsum("...lji->...lij", dg)
         + dg
         - np.einsum("...ijl->...lij", dg))
    return 0.5 * np.einsum("...kl,...lij->...kij", ginv, s, optimize=True)


def ricci_fd_raw(g: np.ndarray, ginv: np.ndarray, h: tuple[float, float, float],
                 gam: np.ndarray | None = None) -> np.ndarray:
    """Ricci tensor of the metric field by direct finite differencing.

    R_ij = d_k Gamma^k_{ij} - d_j Gamma^k_{ki}
         + Gamma^k_{kl} Gamma^l_{ij} - Gamma^k_{jl} Gamma^l_{ik},
    mirrored to exact symmetry.
    """
    if gam is None:
        gam = christoffels_raw(g, ginv, h)
    dgam = partials_c(gam, h)  # dgam[..., k, i, j, m] = partial_m Gamma^k_{ij}
    t1 = np.einsum("...kijk->...ij", dgam)
    t2 = np.einsum("...kkij->...ij", dgam)
    tr = np.einsum("...kkl->...l", gam)
    t3 = np.einsum("...l,...lij->...ij", tr, gam)
    t4 = np.einsum("...kjl,...lik->...ij", gam, gam, optimize=True)
    return symmetrize_mirror(t1 - t2 + t3 - t4)


def christoffels(chart, g: np.ndarray, ginv: np.ndarray | None = None) -> np.ndarray:
    if ginv is None:
        ginv = sym_inv3(g)
    return christoffels_raw(g, ginv, chart.spacings)


def ricci_fd(chart, g: np.ndarray, ginv: np.ndarray | None = None,
             gam: np.ndarray | None = None) -> np.ndarray:
    if ginv is None:
        ginv = sym_inv3(g)
    return ricci_fd_raw(g, ginv, chart.spacings, gam=gam)


def ricci_used(chart, g: np.ndarray, ginv: np.ndarray | None = None,
               gam: np.ndarray | None = None) -> np.ndarray:
    """Ricci tensor entering the evolution and the constraints.

    On charts whose background is declared Einstein (``chart.einstein_mu`` is
    set) the raw finite-difference Ricci is corrected by the background
    truncation error:

        Ric_used(g) = Ric_fd(g) - Ric_fd(gamma) + mu * gamma.

    The correction cancels bit-exactly at g = gamma, so declared homogeneous
    backgrounds are exact fixed-point data for the discrete system.  On all
    other charts Ric_used = Ric_fd.
    """
    ric = ricci_fd(chart, g, ginv=ginv, gam=gam)
    if chart.einstein_mu is not None:
        ric = ric - chart.gamma_ricci_fd + chart.gamma_ricci
    return ric


def ricci(chart, g: np.ndarray, ginv: np.ndarray | None = None,
          gam: np.ndarray | None = None) -> np.ndarray:
    """Alias for :func:`ricci_used`, the curvature the rest of the code sees."""
    return ricci_used(chart, g, ginv=ginv, gam=gam)


def scalar_curvature(chart, g: np.ndarray, ginv: np.ndarray | None = None,
                     ric: np.ndarray | None = None) -> np.ndarray:
    """Scalar curvature tr_g Ric_used(g)."""
    if ginv is None:
        ginv = sym_inv3(g)
    if ric is None:
        ric = ricci_used(chart, g, ginv=ginv)
    return np.einsum("...ij,...ij->...", ginv, ric)


# ---------------------------------------------------------------------------
# covariant derivatives and Lie derivatives (centered family)
# ---------------------------------------------------------------------------

def covd_scalar(chart, f: np.ndarray) -> np.ndarray:
    return partials_c(f, chart.spacings)


def covd_oneform(chart, gam: np.ndarray, w: np.ndarray) -> np.ndarray:
    """D_i w_j, returned as (..., j, i) with the derivative index last."""
    dw = partials_c(w, chart.spacings)
    return dw - np.einsum("...kij,...k->...ji", gam, w)


def covd_vector(chart, gam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """D_m X^i, returned as (..., i, m)."""
    dx = partials_c(x, chart.spacings)
    return dx + np.einsum("...imk,...k->...im", gam, x)


def covd_sym(chart, gam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """D_m u_ij, returned as (..., i, j, m)."""
    du = partials_c(u, chart.spacings)
    du -= np.einsum("...kmi,...kj->...ijm", gam, u, optimize=True)
    du -= np.einsum("...kmj,...ik->...ijm", gam, u, optimize=True)
    return du


def covd_generic(t: np.ndarray, ncov: int, gam: np.ndarray,
                 h: tuple[float, float, float]) -> np.ndarray:
    """Covariant derivative of a tensor whose last ncov axes are covariant.

    Input shape grid + (3,)*ncov; output appends the derivative axis last.
    """
    out = partials_c(t, h)
    src = _LETTERS[:ncov]
    for p in range(ncov):
        dst = src[:p] + "k" + src[p + 1:]
        out -= np.einsum(f"...km{src[p]},...{dst}->...{src}m", gam, t, optimize=True)
    return out


def hessian(chart, gam: np.ndarray, f: np.ndarray) -> np.ndarray:
    """D_i D_j f for the connection gam, mirrored to exact symmetry."""
    df = partials_c(f, chart.spacings)
    ddf = partials_c(df, chart.spacings)  # ddf[..., i, j] = partial_j partial_i f
    return symmetrize_mirror(ddf) - np.einsum("...kij,...k->...ij", gam, df)


def scalar_laplacian(chart, g: np.ndarray, f: np.ndarray,
                     ginv: np.ndarray | None = None,
                     gam: np.ndarray | None = None) -> np.ndarray:
    """Laplace-Beltrami operator on scalars, centered family (second order).

    Used in physics right-hand sides.  The elliptic solvers and the energy
    monitors use the mimetic ``MimScalarOp`` instead.
    """
    if ginv is None:
        ginv = sym_inv3(g)
    if gam is None:
        gam = christoffels_raw(g, ginv, chart.spacings)
    return np.einsum("...ij,...ij->...", ginv, hessian(chart, gam, f))


def div_sym(chart, ginv: np.ndarray, gam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(div u)_j = g^{ab} D_a u_bj for a symmetric 2-tensor."""
    du = covd_sym(chart, gam, u)
    return np.einsum("...ab,...bja->...j", ginv, du, optimize=True)


def div_vector(chart, gam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """D_i X^i."""
    dx = covd_vector(chart, gam, x)
    return np.einsum("...ii->...", dx)


def lie_scalar(chart, x: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, partials_c(f, chart.spacings))


def lie_oneform(chart, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(L_X w)_i = X^k d_k w_i + w_k d_i X^k."""
    dw = partials_c(w, chart.spacings)
    dx = partials_c(x, chart.spacings)
    return (np.einsum("...k,...ik->...i", x, dw)
            + np.einsum("...k,...ki->...i", w, dx))


def lie_sym(chart, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(L_X u)_ij = X^k d_k u_ij + u_kj d_i X^k + u_ik d_j X^k, bit symmetric."""
    du = partials_c(u, chart.spacings)
    dx = partials_c(x, chart.spacings)
    t1 = np.einsum("...k,...ijk->...ij", x, du)
    t2 = np.einsum("...kj,...ki->...ij", u, dx, optimize=True)
    t3 = np.einsum("...ik,...kj->...ij", u, dx, optimize=True)
    return t1 + (t2 + t3)


def lie_vector(chart, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """[X, V]^i = X^k d_k V^i - V^k d_k X^i."""
    dv = partials_c(v, chart.spacings)
    dx = partials_c(x, chart.spacings)
    return (np.einsum("...k,...ik->...i", x, dv)
            - np.einsum("...k,...ik->...i", v, dx))


def rough_laplacian_vector(chart, ginv: np.ndarray, gam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """g^{ab} D_a D_b X^i, all centered."""
    v = covd_vector(chart, gam, x)  # (..., i, b)
    dv = partials_c(v, chart.spacings)  # (..., i, b, a)
    dv += np.einsum("...iak,...kb->...iba", gam, v, optimize=True)
    dv -= np.einsum("...cab,...ic->...iba", gam, v, optimize=True)
    return np.einsum("...iba,...ab->...i", dv, ginv, optimize=True)


def scalar_part_laplacian_vector(chart, ginv: np.ndarray, gam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Componentwise scalar Laplace-Beltrami of a vector field, centered."""
    out = np.empty_like(x)
    for i in range(3):
        h = hessian(chart, gam, x[..., i])
        out[..., i] = np.einsum("...ij,...ij->...", ginv, h)
    return out


# ---------------------------------------------------------------------------
# volume element, inner products, Sobolev norms
# ---------------------------------------------------------------------------

def sqrt_det(g: np.ndarray) -> np.ndarray:
    d = det3(g)
    if np.min(d) <= DET_TOL:
        raise NumericError(f"metric determinant not positive: min det = {np.min(d):.3e}")
    return np.sqrt(d)


def volume_element(chart, g: np.ndarray) -> np.ndarray:
    h1, h2, h3 = chart.spacings
    return sqrt_det(g) * (h1 * h2 * h3)


def pointwise_inner(g: np.ndarray, ginv: np.ndarray, u: np.ndarray, v: np.ndarray,
                    kind: str) -> np.ndarray:
    """Pointwise metric inner product for the supported field kinds.

    Channel axes (the internal-space index of multi one-forms, the matrix
    indices of the internal metric, or the pair of a Faraday block) are
    contracted with the identity.
    """
    if kind == "scalar":
        return u * v
    if kind == "oneform":
        return np.einsum("...ij,...i,...j->...", ginv, u, v)
    if kind == "vector":
        return np.einsum("...ij,...i,...j->...", g, u, v)
    if kind == "sym2":
        return np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, u, v, optimize=True)
    if kind == "multioneform":
        return np.einsum("...ij,...im,...jm->...", ginv, u, v, optimize=True)
    if kind == "channelmatrix":
        return np.einsum("...mn,...mn->...", u, v)
    if kind == "faraday":
        return np.einsum("...ac,...bd,...abm,...cdm->...", ginv, ginv, u, v, optimize=True)
    raise UsageError(f"unknown inner-product kind {kind!r}")


def l2_inner(chart, g: np.ndarray, u: np.ndarray, v: np.ndarray, kind: str = "scalar",
             ginv: np.ndarray | None = None, vol: np.ndarray | None = None) -> float:
    """L2 inner product against the volume element of g."""
    if ginv is None:
        ginv = sym_inv3(g)
    if vol is None:
        vol = volume_element(chart, g)
    return float(np.sum(pointwise_inner(g, ginv, u, v, kind) * vol))


def l2_norm(chart, g: np.ndarray, u: np.ndarray, kind: str = "scalar",
            ginv: np.ndarray | None = None, vol: np.ndarray | None = None) -> float:
    return float(np.sqrt(max(l2_inner(chart, g, u, u, kind, ginv=ginv, vol=vol), 0.0)))


def sobolev_norm(chart, g: np.ndarray, u: np.ndarray, order: int, kind: str = "scalar",
                 ginv: np.ndarray | None = None, gam: np.ndarray | None = None) -> float:
    """Sobolev norm of order k: sum over j <= k of the L2 norms of D^j u.

    D is the Levi-Civita connection of g; every derivative index is covariant
    and contracted with g^{ab}.  Channel axes are handled by looping.

    Orders above MAX_SOBOLEV_ORDER are refused: each extra derivative widens
    the centered stencil, and beyond that depth the wrap-around error on desk
    grids makes the value meaningless.
    """
    if order < 0 or order > MAX_SOBOLEV_ORDER:
        raise ConfigurationError(
            f"sobolev order must be in [0, {MAX_SOBOLEV_ORDER}], got {order}")
    if ginv is None:
        ginv = sym_inv3(g)
    if gam is None:
        gam = christoffels_raw(g, ginv, chart.spacings)
    vol = volume_element(chart, g)

    if kind == "multioneform":
        q = u.shape[-1]
        tot = sum(sobolev_norm(chart, g, u[..., :, m], order, "oneform", ginv=ginv, gam=gam) ** 2
                  for m in range(q))
        return float(np.sqrt(tot))
    if kind == "channelmatrix":
        q = u.shape[-1]
        tot = sum(sobolev_norm(chart, g, u[..., m, n], order, "scalar", ginv=ginv, gam=gam) ** 2
                  for m in range(q) for n in range(q))
        return float(np.sqrt(tot))

    base_axes = {"scalar": 0, "oneform": 1, "sym2": 2}
    if kind not in base_axes:
        raise UsageError(f"sobolev_norm does not support kind {kind!r}")
    ncov = base_axes[kind]
    t = u
    total = 0.0
    for j in range(order + 1):
        naxes = ncov + j
        if naxes == 0:
            dens = t * t
        else:
            up = t
            src = _LETTERS[:naxes]
            for p in range(naxes):
                dst = src[:p] + "z" + src[p + 1:]
                # relabel only; the axis order of the output matches the input
                up = np.einsum(f"...{src},...{src[p]}z->...{dst}", up, ginv, optimize=True)
            dens = np.einsum(f"...{src},...{src}->...", up, t, optimize=True)
        total += float(np.sum(dens * vol))
        if j < order:
            t = covd_generic(t, naxes, gam, chart.spacings)
    return float(np.sqrt(max(total, 0.0)))


# ---------------------------------------------------------------------------
# mimetic (staggered) operators
# ---------------------------------------------------------------------------

class MimScalarOp:
    """A f = -(1/sqrt g) d^-_a (sqrt g g^{ab} d^+_b f) + V f.

    Exactly self-adjoint and positive semidefinite for the inner product
    sum(sqrt g  u v h^3); for V = 0 the kernel is exactly the constants.
    On the flat torus the symbol per Fourier mode is
    sum_a 4 sin^2(k_a h_a/2)/h_a^2 + V.
    """

    def __init__(self, chart, g: np.ndarray, ginv: np.ndarray | None = None,
                 potential: np.ndarray | float | None = None):
        if ginv is None:
            ginv = sym_inv3(g)
        self.chart = chart
        self.h = chart.spacings
        self.sqrtg = sqrt_det(g)
        self.w = self.sqrtg[..., None, None] * ginv  # flux weights (..., a, b)
        self.potential = potential

    def apply(self, f: np.ndarray) -> np.ndarray:
        h = self.h
        grad = [dp(f, b, h[b]) for b in range(3)]
        out = np.zeros_like(f)
        for a in range(3):
            flux = self.w[..., a, 0] * grad[0] + self.w[..., a, 1] * grad[1] + self.w[..., a, 2] * grad[2]
            out -= dm(flux, a, h[a])
        out /= self.sqrtg
        if self.potential is not None:
            out = out + self.potential * f
        return out

    def diagonal(self) -> np.ndarray:
        """Pointwise diagonal of the operator matrix (Jacobi preconditioner)."""
        h = self.h
        diag = np.zeros_like(self.sqrtg)
        for a in range(3):
            for b in range(3):
                diag += self.w[..., a, b] / (h[a] * h[b])
            diag += roll_p(self.w[..., a, a], a) / (h[a] * h[a])
        diag /= self.sqrtg
        if self.potential is not None:
            diag = diag + np.broadcast_to(np.asarray(self.potential, dtype=float), diag.shape)
        return diag

    def weight(self) -> np.ndarray:
        """Inner-product weight sqrt(g) h^3 making the operator self-adjoint."""
        h1, h2, h3 = self.h
        return self.sqrtg * (h1 * h2 * h3)


def d0(chart, f: np.ndarray) -> np.ndarray:
    """Exterior derivative on scalars, forward differences: (d0 f)_a = d^+_a f."""
    return partials_p(f, chart.spacings)


def d1(chart, w: np.ndarray) -> np.ndarray:
    """Exterior derivative on one-forms, forward differences.

    (d1 w)_{ab} = d^+_a w_b - d^+_b w_a, stored as an antisymmetric (..., 3, 3)
    block.  d1(d0 f) = 0 holds exactly because forward differences commute.
    """
    h = chart.spacings
    dw = np.stack([dp(w, a, h[a]) for a in range(3)], axis=-2)  # (..., a, b) = d^+_a w_b
    return dw - np.swapaxes(dw, -1, -2)


class MimOneFormOps:
    """Staggered Hodge machinery on one-forms for a fixed metric.

    delta1 is the exact adjoint of d0, delta2 of d1, for the inner products
    weighted by sqrt(g) with indices raised by g.  The Hodge Laplacian
    ``laplacian = d0 delta1 + delta2 d1`` is therefore exactly self-adjoint
    and positive semidefinite; on the flat torus its symbol is diagonal per
    component with the scalar mimetic symbol, so its kernel is exactly the
    three constant one-forms.
    """

    def __init__(self, chart, g: np.ndarray, ginv: np.ndarray | None = None):
        if ginv is None:
            ginv = sym_inv3(g)
        self.chart = chart
        self.h = chart.spacings
        self.g = g
        self.ginv = ginv
        self.sqrtg = sqrt_det(g)

    def delta1(self, w: np.ndarray) -> np.ndarray:
        """Codifferential on one-forms: delta1 w = -(1/sqrt g) d^-_a (sqrt g g^{ab} w_b)."""
        h = self.h
        flux = np.einsum("...ab,...b->...a", self.sqrtg[..., None, None] * self.ginv, w)
        out = np.zeros(w.shape[:-1])
        for a in range(3):
            out -= dm(flux[..., a], a, h[a])
        return out / self.sqrtg

    def delta2(self, f2: np.ndarray) -> np.ndarray:
        """Codifferential on 2-forms, exact adjoint of d1.

        t^b = -(1/sqrt g) d^-_a (sqrt g F^{ab}), lowered with g.
        """
        h = self.h
        up = np.einsum("...ac,...bd,...cd->...ab", self.ginv, self.ginv, f2, optimize=True)
        t = np.zeros(f2.shape[:-1])
        for a in range(3):
            flux = self.sqrtg[..., None] * up[..., a, :]
            t -= np.stack([dm(flux[..., b], a, h[a]) for b in range(3)], axis=-1)
        t /= self.sqrtg[..., None]
        return np.einsum("...be,...b->...e", self.g, t)

    def laplacian(self, w: np.ndarray) -> np.ndarray:
        return d0(self.chart, self.delta1(w)) + self.delta2(d1(self.chart, w))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        h1, h2, h3 = self.h
        dens = np.einsum("...ab,...a,...b->...", self.ginv, u, v) * self.sqrtg
        return float(np.sum(dens) * (h1 * h2 * h3))


def hodge_laplacian_1form(chart, g: np.ndarray, w: np.ndarray,
                          ginv: np.ndarray | None = None) -> np.ndarray:
    """Hodge Laplacian (d delta + delta d) on one-forms, mimetic family."""
    return MimOneFormOps(chart, g, ginv=ginv).laplacian(w)


# ---------------------------------------------------------------------------
# harmonic-gauge tensor operator
# ---------------------------------------------------------------------------

def lichnerowicz_operator(chart, g: np.ndarray, u: np.ndarray,
                          ginv: np.ndarray | None = None) -> np.ndarray:
    """L u = -g^{ab} Dhat_a Dhat_b u - 2 Rhat(u).

    Dhat is the background connection, Rhat(u)_ij = Rhat_ikjl gamma^{ka}
    gamma^{lb} u_ab the background curvature action.  At g = gamma on a flat
    chart this reduces to minus the componentwise (wide centered) Laplacian;
    it is self-adjoint for l2_inner on flat charts and positive on the
    complement of its kernel for backgrounds with nonpositive curvature
    action.
    """
    if ginv is None:
        ginv = sym_inv3(g)
    gamh = chart.gamma_christoffels
    v = covd_sym(chart, gamh, u)  # (..., i, j, b)
    w = covd_generic(v, 3, gamh, chart.spacings)  # (..., i, j, b, a)
    rough = np.einsum("...ijba,...ab->...ij", w, ginv, optimize=True)
    out = -rough
    if chart.curvature_action is not None:
        out -= 2.0 * np.einsum("...ijab,...ab->...ij", chart.curvature_action, u, optimize=True)
    return symmetrize_mirror(out)


def riemann_raw(g: np.ndarray, ginv: np.ndarray, gam: np.ndarray,
                h: tuple[float, float, float]) -> np.ndarray:
    """Lowered curvature tensor R[..., i, j, k, l] = <R(e_k, e_l) e_j, e_i>.

    R^m_{jkl} = d_k Gamma^m_{lj} - d_l Gamma^m_{kj}
              + Gamma^m_{kc} Gamma^c_{lj} - Gamma^m_{lc} Gamma^c_{kj}.
    For a space form of sectional curvature kappa this converges to
    kappa (g_ik g_jl - g_il g_jk).
    """
    dgam = partials_c(gam, h)  # (..., m, a, b, c) = d_c Gamma^m_{ab}
    up = (np.einsum("...mljk->...mjkl", dgam)
          - np.einsum("...mkjl->...mjkl", dgam)
          + np.einsum("...mkc,...clj->...mjkl", gam, gam, optimize=True)
          - np.einsum("...mlc,...ckj->...mjkl", gam, gam, optimize=True))
    return np.einsum("...im,...mjkl->...ijkl", g, up, optimize=True)


def curvature_action_from_riemann(riem: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """C[..., i, j, a, b] with (R(u))_ij = C_ijab u_ab, symmetrized so the
    action is self-adjoint and preserves symmetric tensors."""
    c = np.einsum("...ikjl,...ka,...lb->...ijab", riem, ginv, ginv, optimize=True)
    c = 0.5 * (c + np.einsum("...ijab->...jiab", c))
    c = 0.5 * (c + np.einsum("...ijab->...ijba", c))
    c = 0.5 * (c + np.einsum("...ijab->...abij", c))
    return c


# ---------------------------------------------------------------------------
# dense assembly, checkerboard modes
# ---------------------------------------------------------------------------

def dense_matrix(apply_fn, shape: tuple[int, ...]) -> np.ndarray:
    """Assemble the dense matrix of a linear operator by applying it to a basis."""
    n = int(np.prod(shape))
    mat = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        mat[:, j] = np.asarray(apply_fn(e.reshape(shape))).reshape(n)
        e[j] = 0.0
    return mat


def checkerboard_basis(dims: tuple[int, int, int]) -> np.ndarray:
    """The 8 componentwise-alternating scalar modes annihilated by centered
    differences on an even grid, shape (8, n1, n2, n3), unnormalized."""
    n1, n2, n3 = dims
    i1 = np.arange(n1)[:, None, None]
    i2 = np.arange(n2)[None, :, None]
    i3 = np.arange(n3)[None, None, :]
    out = []
    for s1 in (0, 1):
        for s2 in (0, 1):
            for s3 in (0, 1):
                out.append(((-1.0) ** (s1 * i1)) * ((-1.0) ** (s2 * i2)) * ((-1.0) ** (s3 * i3))
                           * np.ones(dims))
    return np.stack(out, axis=0)
