"""Periodic grid charts carrying the background geometry.

A chart couples the discrete torus (dims, spacings) to a fixed background
metric gamma, its connection, and its curvature data.  Backgrounds come in
two kinds: ``flat-torus`` (gamma constant, connection identically zero) and
``supplied-metric`` (read from a file).  Independently of the kind, a chart
may declare that its background satisfies the Einstein condition
Ric(gamma) = mu * gamma exactly; evolution then corrects the raw
finite-difference Ricci by the background truncation error so that declared
homogeneous data is an exact discrete fixed point.

Chart files are plain text: header lines ``dims``, ``spacings``, ``q`` and
optionally ``gamma_lambda0`` and ``einstein_mu``, followed by one line per grid
point (row-major) with the six independent metric components
g11 g12 g13 g22 g23 g33.  Snapshot files extend the same container with
additional named field sections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import operators as ops
from .errors import ConfigurationError, DataError
from .linalg import EllipticSolveReport, cg_solve

_HEADER_KEYS = ("dims", "spacings", "q", "gamma_lambda0", "einstein_mu", "time", "tau0")

SYM_COMPONENTS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass
class GridChart:
    """Discrete periodic chart with background geometry.

    dims >= 4 along every axis (stencils up to width 5 must not wrap onto
    themselves); the background metric must be symmetric positive definite
    with determinant bounded away from zero.
    """

    dims: tuple[int, int, int]
    spacings: tuple[float, float, float]
    q: int
    background_kind: str
    gamma: np.ndarray
    gamma_lambda0: float | None = None
    einstein_mu: float | None = None

    gamma_inv: np.ndarray = field(init=False, repr=False)
    sqrt_gamma: np.ndarray = field(init=False, repr=False)
    gamma_christoffels: np.ndarray = field(init=False, repr=False)
    gamma_ricci_fd: np.ndarray = field(init=False, repr=False)
    gamma_ricci: np.ndarray = field(init=False, repr=False)
    curvature_action: np.ndarray | None = field(init=False, repr=False)
    einstein_residual: float = field(init=False)

    def __post_init__(self):
        self.dims = tuple(int(n) for n in self.dims)
        self.spacings = tuple(float(h) for h in self.spacings)
        if len(self.dims) != 3 or any(n < 4 for n in self.dims):
            raise ConfigurationError(f"dims must be three axes of at least 4 points, got {self.dims}")
        if len(self.spacings) != 3 or any(h <= 0 for h in self.spacings):
            raise ConfigurationError(f"spacings must be positive, got {self.spacings}")
        if self.q < 1:
            raise ConfigurationError(f"internal dimension q must be >= 1, got {self.q}")
        if self.background_kind not in ("flat-torus", "supplied-metric"):
            raise ConfigurationError(f"unknown background kind {self.background_kind!r}")
        self.gamma = ops.symmetrize_mirror(np.asarray(self.gamma, dtype=float))
        ops.expect_shape(self.gamma, (3, 3), self.dims, "background metric")
        if ops.min_eig_sym3(self.gamma) <= 0.0:
            raise DataError("background metric is not positive definite")
        self.gamma_inv = ops.sym_inv3(self.gamma, "background metric")
        self.sqrt_gamma = ops.sqrt_det(self.gamma)

        if self.background_kind == "flat-torus":
            # constant metric: the connection vanishes identically
            self.gamma_christoffels = np.zeros(self.dims + (3, 3, 3))
            self.gamma_ricci_fd = np.zeros(self.dims + (3, 3))
        else:
            self.gamma_christoffels = ops.christoffels_raw(self.gamma, self.gamma_inv, self.spacings)
            self.gamma_ricci_fd = ops.ricci_fd_raw(self.gamma, self.gamma_inv, self.spacings,
                                                   gam=self.gamma_christoffels)

        if self.einstein_mu is not None:
            mu = float(self.einstein_mu)
            self.gamma_ricci = mu * self.gamma
            kappa = 0.5 * mu
            riem = kappa * (np.einsum("...ik,...jl->...ijkl", self.gamma, self.gamma)
                            - np.einsum("...il,...jk->...ijkl", self.gamma, self.gamma))
            self.curvature_action = ops.curvature_action_from_riemann(riem, self.gamma_inv)
            self.einstein_residual = float(np.max(np.abs(self.gamma_ricci_fd - self.gamma_ricci)))
        else:
            self.gamma_ricci = self.gamma_ricci_fd
            if self.background_kind == "flat-torus":
                self.curvature_action = None
            else:
                riem = ops.riemann_raw(self.gamma, self.gamma_inv, self.gamma_christoffels,
                                       self.spacings)
                self.curvature_action = ops.curvature_action_from_riemann(riem, self.gamma_inv)
            # informational distance from the reference Einstein condition
            self.einstein_residual = float(np.max(np.abs(
                self.gamma_ricci_fd + (2.0 / 9.0) * self.gamma)))

    @property
    def npoints(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def cell_volume(self) -> float:
        return self.spacings[0] * self.spacings[1] * self.spacings[2]

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vertex coordinates x_a = i_a h_a as three broadcastable arrays."""
        grids = np.ogrid[0:self.dims[0], 0:self.dims[1], 0:self.dims[2]]
        return tuple(grids[a] * self.spacings[a] for a in range(3))


def build_flat_torus_chart(dims, lengths=(2.0 * np.pi,) * 3, q: int = 1,
                           gamma_lambda0: float | None = None) -> GridChart:
    """Flat torus [0, L1) x [0, L2) x [0, L3) with the identity metric."""
    dims = tuple(int(n) for n in dims)
    spacings = tuple(float(length) / n for length, n in zip(lengths, dims))
    gamma = np.broadcast_to(np.eye(3), dims + (3, 3)).copy()
    return GridChart(dims, spacings, q, "flat-torus", gamma, gamma_lambda0=gamma_lambda0)


def build_milne_chart(dims, lengths=(2.0 * np.pi,) * 3, q: int = 1,
                      gamma_lambda0: float | None = None) -> GridChart:
    """Periodic stand-in for a compact hyperbolic spatial slice.

    The grid metric is the identity, and the background is declared Einstein
    with Ric(gamma) = -(2/9) gamma; the declared correction makes homogeneous
    data an exact fixed point of the discrete evolution.
    """
    dims = tuple(int(n) for n in dims)
    spacings = tuple(float(length) / n for length, n in zip(lengths, dims))
    gamma = np.broadcast_to(np.eye(3), dims + (3, 3)).copy()
    return GridChart(dims, spacings, q, "flat-torus", gamma,
                     gamma_lambda0=gamma_lambda0, einstein_mu=-2.0 / 9.0)


# ---------------------------------------------------------------------------
# chart and snapshot files
# ---------------------------------------------------------------------------

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_field_section(fh, name: str, arr: np.ndarray, npoints: int) -> None:
    flat = np.asarray(arr, dtype=float).reshape(npoints, -1)
    fh.write(f"field {name} {flat.shape[1]}\n")
    for row in flat:
        fh.write(_fmt(row) + "\n")


def sym_to_rows(g: np.ndarray) -> np.ndarray:
    cols = [g[..., i, j].reshape(-1) for (i, j) in SYM_COMPONENTS]
    return np.stack(cols, axis=1)


def rows_to_sym(rows: np.ndarray, dims) -> np.ndarray:
    g = np.empty(tuple(dims) + (3, 3))
    for col, (i, j) in enumerate(SYM_COMPONENTS):
        comp = rows[:, col].reshape(dims)
        g[..., i, j] = comp
        g[..., j, i] = comp
    return g


def save_chart(chart: GridChart, path, extra_fields: dict | None = None,
               scalars: dict | None = None) -> None:
    """Write a chart (and optionally named field sections) as text."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("dims " + " ".join(str(n) for n in chart.dims) + "\n")
        fh.write("spacings " + _fmt(chart.spacings) + "\n")
        fh.write(f"q {chart.q}\n")
        if chart.gamma_lambda0 is not None:
            fh.write(f"gamma_lambda0 {chart.gamma_lambda0!r}\n")
        if chart.einstein_mu is not None:
            fh.write(f"einstein_mu {chart.einstein_mu!r}\n")
        for key, value in (scalars or {}).items():
            fh.write(f"{key} {float(value)!r}\n")
        fh.write("metric\n")
        for row in sym_to_rows(chart.gamma):
            fh.write(_fmt(row) + "\n")
        for name, arr in (extra_fields or {}).items():
            write_field_section(fh, name, arr, chart.npoints)
        fh.write("end\n")


def parse_chart_file(path):
    """Parse header, metric rows and any field sections from a chart file."""
    header: dict[str, list[str]] = {}
    fields: dict[str, np.ndarray] = {}
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read chart file {path}: {exc}") from exc
    pos = 0
    nlines = len(lines)

    def next_tokens():
        nonlocal pos
        while pos < nlines:
            toks = lines[pos].split()
            pos += 1
            if toks and not toks[0].startswith("#"):
                return toks
        return None

    toks = next_tokens()
    while toks is not None and toks[0] in _HEADER_KEYS:
        header[toks[0]] = toks[1:]
        toks = next_tokens()
    if toks is None or toks[0] != "metric":
        raise DataError(f"{path}: expected a 'metric' section after the header")
    if "dims" not in header or "spacings" not in header:
        raise DataError(f"{path}: header must provide dims and spacings")
    try:
        dims = tuple(int(t) for t in header["dims"])
        spacings = tuple(float(t) for t in header["spacings"])
        q = int(header.get("q", ["1"])[0])
    except ValueError as exc:
        raise DataError(f"{path}: malformed header: {exc}") from exc
    if len(dims) != 3:
        raise DataError(f"{path}: dims must have three entries, got {header['dims']}")
    npoints = int(np.prod(dims))

    def read_rows(count, width, what):
        nonlocal pos
        out = np.empty((count, width))
        for r in range(count):
            t = next_tokens()
            if t is None:
                raise DataError(f"{path}: truncated {what} section at row {r}")
            if len(t) != width:
                raise DataError(f"{path}: {what} row {r} has {len(t)} values, expected {width}")
            try:
                out[r] = [float(v) for v in t]
            except ValueError as exc:
                raise DataError(f"{path}: bad number in {what} row {r}: {exc}") from exc
        return out

    metric_rows = read_rows(npoints, 6, "metric")
    toks = next_tokens()
    while toks is not None and toks[0] == "field":
        if len(toks) != 3:
            raise DataError(f"{path}: malformed field introducer {' '.join(toks)!r}")
        name, width = toks[1], int(toks[2])
        fields[name] = read_rows(npoints, width, f"field {name}")
        toks = next_tokens()
    if toks is None or toks[0] != "end":
        raise DataError(f"{path}: missing 'end' terminator")
    meta = {
        "dims": dims,
        "spacings": spacings,
        "q": q,
        "gamma_lambda0": float(header["gamma_lambda0"][0]) if "gamma_lambda0" in header else None,
        "einstein_mu": float(header["einstein_mu"][0]) if "einstein_mu" in header else None,
    }
    for key in ("time", "tau0"):
        if key in header:
            meta[key] = float(header[key][0])
    return meta, metric_rows, fields


def load_supplied_chart(path) -> GridChart:
    """Read a chart file; any trailing field sections are ignored."""
    meta, metric_rows, _fields = parse_chart_file(path)
    gamma = rows_to_sym(metric_rows, meta["dims"])
    return GridChart(meta["dims"], meta["spacings"], meta["q"], "supplied-metric", gamma,
                     gamma_lambda0=meta["gamma_lambda0"], einstein_mu=meta["einstein_mu"])


# ---------------------------------------------------------------------------
# harmonic one-form basis
# ---------------------------------------------------------------------------

@dataclass
class HarmonicBasis:
    """M-orthonormal discrete harmonic one-forms with diagnostics."""

    forms: np.ndarray  # (3, n1, n2, n3, 3)
    rayleigh: tuple[float, float, float]
    reports: list[EllipticSolveReport]

    def project_out(self, chart, g: np.ndarray, w: np.ndarray,
                    ginv: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Remove the harmonic component; returns (projected, coefficients)."""
        hodge = ops.MimOneFormOps(chart, g, ginv=ginv)
        coeff = np.array([hodge.inner(w, self.forms[a]) for a in range(3)])
        out = w - sum(coeff[a] * self.forms[a] for a in range(3))
        return out, coeff


def harmonic_oneform_basis(chart: GridChart, g: np.ndarray,
                           ginv: np.ndarray | None = None,
                           rtol: float = 1e-12, kernel_tol: float = 1e-8) -> HarmonicBasis:
    """Discrete harmonic one-forms eta_a = e_a + d0 f_a.

    f_a solves the scalar mimetic problem delta1(d0 f_a) = -delta1(e_a), so
    delta1(eta_a) vanishes to solver tolerance while d1(eta_a) = 0 exactly
    (forward differences commute and e_a is constant).  On a flat chart
    delta1(e_a) = 0 identically and eta_a = e_a exactly.  The three forms are
    orthonormalized in the metric-weighted L2 inner product; their Rayleigh
    quotients under the Hodge Laplacian are reported and must stay below
    kernel_tol.
    """
    if ginv is None:
        ginv = ops.sym_inv3(g)
    hodge = ops.MimOneFormOps(chart, g, ginv=ginv)
    scalar_op = ops.MimScalarOp(chart, g, ginv=ginv)
    weight = scalar_op.weight()
    diag = scalar_op.diagonal()
    floor = float(np.max(diag)) * 1e-14
    precond = (lambda r: r / np.maximum(diag, floor))
    constants = [np.ones(chart.dims)]

    def apply_a(f):
        return hodge.delta1(ops.d0(chart, f))

    raw = []
    reports = []
    for a in range(3):
        e_a = np.zeros(chart.dims + (3,))
        e_a[..., a] = 1.0
        rhs = -hodge.delta1(e_a)
        f_a, rep = cg_solve(apply_a, rhs, weight=weight, name=f"harmonic-basis-{a}",
                            rtol=rtol, deflate=constants, precond=precond)
        reports.append(rep)
        raw.append(e_a + ops.d0(chart, f_a))

    gram = np.array([[hodge.inner(u, v) for v in raw] for u in raw])
    try:
        low = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise DataError("harmonic one-form Gram matrix is not positive definite") from exc
    inv_t = np.linalg.inv(low).T
    forms = np.stack([sum(inv_t[a, b] * raw[a] for a in range(3)) for b in range(3)], axis=0)
    rayleigh = tuple(float(hodge.inner(forms[b], hodge.laplacian(forms[b]))) for b in range(3))
    if max(rayleigh) > kernel_tol:
        raise DataError(f"harmonic basis Rayleigh quotients exceed tolerance: {rayleigh}")
    return HarmonicBasis(forms, rayleigh, reports)
