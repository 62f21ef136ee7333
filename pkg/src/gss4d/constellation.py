"""4D constellations: construction, symmetry expansion, normalization and file I/O.

A 4D point ``(x1, x2, x3, x4)`` carries the x-polarization in ``(x1, x2)`` and
the y-polarization in ``(x3, x4)``. Geometric shell shaped (GSS) constellations
are generated from a reduced set of first-orthant points described in
hyperspherical coordinates, then mirrored by X-Y swapping and by all 16 sign
patterns.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    ConstellationFormatError,
    DegenerateError,
    DomainError,
    ShellAssignmentError,
)

N_DIMS = 4
# sign patterns in binary-count order: pattern s negates coordinate d when bit d is set
SIGN_PATTERNS = np.array(
    [[-1.0 if (s >> d) & 1 else 1.0 for d in range(N_DIMS)] for s in range(2**N_DIMS)]
)
XY_SWAP = [2, 3, 0, 1]


@dataclass(frozen=True)
class ShapingConfig:
    """Size parameters of a GSS family.

    Parameters
    ----------
    m : int
        Bits per 4D symbol, ``M = 2**m`` points.
    k : int
        Number of 4D shells, a power of two.
    """

    m: int = 8
    k: int = 4

    def __post_init__(self):
        if self.m < 5:
            raise DomainError(f"m must be >= 5, got {self.m}")
        if self.k < 1 or self.k & (self.k - 1):
            raise DomainError(f"k must be a power of two, got {self.k}")
        if self.n_reduced % self.k:
            raise DomainError(
                f"{self.n_reduced} reduced points cannot be split evenly on {self.k} shells"
            )

    @property
    def n_dims(self) -> int:
        return N_DIMS

    @property
    def M(self) -> int:
        return 2**self.m

    @property
    def n_reduced(self) -> int:
        """Points left after orthant and X-Y reduction."""
        return 2 ** (self.m - 5)

    @property
    def n_params(self) -> int:
        return 3 * self.n_reduced + self.k

    @property
    def points_per_shell(self) -> int:
        return self.M // self.k


@dataclass(frozen=True, eq=False)
class Constellation:
    """A labeled set of 4D points with prior probabilities.

    ``points`` has shape ``(M, 4)``; ``priors`` has shape ``(M,)``.
    ``shell_index`` holds 1-based shell numbers for GSS constellations.
    """

    points: np.ndarray
    priors: np.ndarray
    name: str = "constellation"
    shell_index: np.ndarray | None = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != N_DIMS:
            raise DomainError(f"points must have shape (M, 4), got {points.shape}")
        M = points.shape[0]
        if M < 1 or M & (M - 1):
            raise DomainError(f"number of points must be a power of two, got {M}")
        if not np.all(np.isfinite(points)):
            raise DomainError("points must be finite")
        priors = np.array(self.priors, dtype=float)
        if priors.shape != (M,):
            raise DomainError(f"priors must have shape ({M},), got {priors.shape}")
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
            raise DomainError("priors must be nonnegative and sum to 1")
        points.flags.writeable = False
        priors.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "priors", priors)
        if self.shell_index is not None:
            shells = np.array(self.shell_index, dtype=int)
            if shells.shape != (M,):
                raise DomainError("shell_index must have one entry per point")
            shells.flags.writeable = False
            object.__setattr__(self, "shell_index", shells)

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return int(round(math.log2(self.M)))

    @property
    def mean_energy(self) -> float:
        return float(self.priors @ np.sum(self.points**2, axis=1))

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.priors == self.priors[0]))

    def entropy(self) -> float:
        """Entropy of the prior in bits."""
        p = self.priors[self.priors > 0]
        return float(-np.sum(p * np.log2(p)))

    def with_priors(self, priors, name=None) -> Constellation:
        return Constellation(
            self.points, priors, name or self.name, shell_index=self.shell_index
        )


def uniform_priors(M: int) -> np.ndarray:
    return np.full(M, 1.0 / M)


def spherical_to_cartesian(r, theta, phi, omega) -> np.ndarray:
    """Map 4D hyperspherical coordinates to a Cartesian point.

    Parameters
    ----------
    r : float or array_like
        Radius, nonnegative.
    theta, phi, omega : float or array_like
        Angles in ``[0, pi/2]``.

    Returns
    -------
    np.ndarray
        Array of shape ``(..., 4)`` with nonnegative coordinates
        ``(r cos t, r sin t cos p, r sin t sin p cos w, r sin t sin p sin w)``.
    """
    r, theta, phi, omega = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (r, theta, phi, omega))
    )
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    for name, a in (("theta", theta), ("phi", phi), ("omega", omega)):
        if np.any((a < 0) | (a > np.pi / 2)):
            raise DomainError(f"{name} must lie in [0, pi/2]")
    st, sp = np.sin(theta), np.sin(phi)
    return np.stack(
        [
            r * np.cos(theta),
            r * st * np.cos(phi),
            r * st * sp * np.cos(omega),
            r * st * sp * np.sin(omega),
        ],
        axis=-1,
    )


def default_shell_assignment(cfg: ShapingConfig) -> np.ndarray:
    """Contiguous blocks: reduced point ``j`` (1-based) sits on shell ``ceil(j*k/J)``."""
    j = np.arange(1, cfg.n_reduced + 1)
    return -(-j * cfg.k // cfg.n_reduced)


def check_shell_assignment(assignment, cfg: ShapingConfig) -> np.ndarray:
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape != (cfg.n_reduced,):
        raise ShellAssignmentError(
            f"assignment needs {cfg.n_reduced} entries, got {assignment.shape}"
        )
    if assignment.min() < 1 or assignment.max() > cfg.k:
        raise ShellAssignmentError(f"shell indices must lie in 1..{cfg.k}")
    counts = np.bincount(assignment - 1, minlength=cfg.k)
    if np.any(counts != cfg.n_reduced // cfg.k):
        raise ShellAssignmentError(f"unbalanced shell occupancy {counts.tolist()}")
    return assignment


def split_params(params, cfg: ShapingConfig):
    """Split a GSS parameter vector into radii ``(k,)`` and angles ``(J, 3)``.

    Layout: ``[r_1..r_k, theta_1, phi_1, omega_1, ..., theta_J, phi_J, omega_J]``.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (cfg.n_params,):
        raise DomainError(f"expected {cfg.n_params} parameters, got {params.shape}")
    return params[: cfg.k], params[cfg.k :].reshape(cfg.n_reduced, 3)


def join_params(radii, angles) -> np.ndarray:
    return np.concatenate([np.ravel(radii), np.ravel(angles)])


def build_first_orthant(params, cfg: ShapingConfig, assignment=None) -> np.ndarray:
    """Reduced first-orthant point set, shape ``(2**(m-5), 4)``."""
    if assignment is None:
        assignment = default_shell_assignment(cfg)
    assignment = check_shell_assignment(assignment, cfg)
    radii, angles = split_params(params, cfg)
    if np.any((radii < 0) | (radii > 1)):
        raise DomainError("radii must lie in [0, 1]")
    r = radii[assignment - 1]
    return spherical_to_cartesian(r, angles[:, 0], angles[:, 1], angles[:, 2])


def expand_xy_symmetry(points) -> np.ndarray:
    """Append the polarization-swapped twin of every point (original block first)."""
    points = np.asarray(points, dtype=float)
    if np.any(points < 0):
        raise DomainError("points must lie in the nonnegative orthant")
    return np.concatenate([points, points[:, XY_SWAP]])


def expand_orthants(points, name="gss", shell_index=None) -> Constellation:
    """Mirror first-orthant points into all 16 orthants, sign-pattern-major order."""
    points = np.asarray(points, dtype=float)
    if np.any(points < 0):
        raise DomainError("points must lie in the nonnegative orthant")
    full = (SIGN_PATTERNS[:, None, :] * points[None, :, :]).reshape(-1, N_DIMS)
    if shell_index is not None:
        shell_index = np.tile(np.asarray(shell_index, dtype=int), len(SIGN_PATTERNS))
    return Constellation(full, uniform_priors(len(full)), name, shell_index=shell_index)


def normalize_energy(C: Constellation) -> Constellation:
    """Scale ``C`` to unit prior-weighted mean energy."""
    energy = C.mean_energy
    if not energy > 0:
        raise DegenerateError("constellation has zero mean energy")
    return Constellation(
        C.points / math.sqrt(energy), C.priors, C.name, shell_index=C.shell_index
    )


def build_gss(params, cfg: ShapingConfig, assignment=None, name=None) -> Constellation:
    """Full, energy-normalized GSS constellation from a parameter vector."""
    if assignment is None:
        assignment = default_shell_assignment(cfg)
    reduced = build_first_orthant(params, cfg, assignment)
    shells = np.concatenate([assignment, assignment])
    C = expand_orthants(
        expand_xy_symmetry(reduced), name or f"gss{cfg.k}", shell_index=shells
    )
    return normalize_energy(C)


def pm16qam() -> Constellation:
    """Polarization-multiplexed 16QAM, ``{+-1, +-3}**4``, unit mean energy."""
    levels = (-3.0, -1.0, 1.0, 3.0)
    points = np.array(list(itertools.product(levels, repeat=N_DIMS)))
    return normalize_energy(Constellation(points, uniform_priors(256), "pm16qam"))


def _sorted_rows(points, decimals=12):
    rounded = np.round(points, decimals) + 0.0  # folds -0.0 into 0.0
    return rounded[np.lexsort(rounded.T[::-1])]


def _same_multiset(a, b, tol):
    return bool(np.allclose(_sorted_rows(a), _sorted_rows(b), rtol=0, atol=tol))


def _norm_clusters(norms, tol):
    """Group sorted norms into clusters separated by gaps larger than ``tol``."""
    order = np.sort(norms)
    breaks = np.flatnonzero(np.diff(order) > tol) + 1
    return [len(c) for c in np.split(order, breaks)], order[np.r_[0, breaks]]


@dataclass
class GSSReport:
    """Outcome of the GSS structure checks on one constellation."""

    orthant_symmetric: bool
    xy_symmetric: bool
    n_distinct_norms: int
    shell_count_ok: bool
    equal_occupancy: bool
    shell_counts: list = field(default_factory=list)
    shell_radii: list = field(default_factory=list)
    n_duplicates: int = 0

    @property
    def passed(self) -> bool:
        return (
            self.orthant_symmetric
            and self.xy_symmetric
            and self.shell_count_ok
            and self.equal_occupancy
        )

    def lines(self):
        yield f"orthant symmetry:   {'pass' if self.orthant_symmetric else 'FAIL'}"
        yield f"X-Y symmetry:       {'pass' if self.xy_symmetric else 'FAIL'}"
        yield (
            f"distinct norms:     {self.n_distinct_norms} "
            f"({'pass' if self.shell_count_ok else 'FAIL'})"
        )
        yield (
            f"shell occupancy:    {self.shell_counts} "
            f"({'pass' if self.equal_occupancy else 'FAIL'})"
        )
        yield f"duplicate points:   {self.n_duplicates}"


def validate_gss(C: Constellation, cfg: ShapingConfig, tol=1e-9) -> GSSReport:
    """Check orthant closure, X-Y closure and the equal-occupancy k-shell constraint.

    Never raises on a structurally bad constellation; the verdict is in the report.
    """
    P = C.points
    orthant = all(_same_multiset(P * s, P, tol) for s in SIGN_PATTERNS[1:])
    xy = _same_multiset(P[:, XY_SWAP], P, tol)
    norms = np.linalg.norm(P, axis=1)
    counts, radii = _norm_clusters(norms, tol)
    per_shell = C.M // cfg.k
    # collapsed shells show up as clusters holding a multiple of M/k points
    occupancy = C.M == cfg.M and all(c % per_shell == 0 for c in counts)
    rows = _sorted_rows(P)
    dup = np.all(np.abs(np.diff(rows, axis=0)) <= tol, axis=1)
    n_dup = int(np.count_nonzero(np.r_[dup, False] | np.r_[False, dup]))
    return GSSReport(
        orthant_symmetric=orthant,
        xy_symmetric=xy,
        n_distinct_norms=len(counts),
        shell_count_ok=len(counts) <= cfg.k,
        equal_occupancy=occupancy,
        shell_counts=counts,
        shell_radii=radii.tolist(),
        n_duplicates=n_dup,
    )


def export_constellation(C: Constellation, path) -> Path:
    """Write ``C`` in the plain-text constellation format (17 significant digits)."""
    path = Path(path)
    normalized = int(abs(C.mean_energy - 1.0) <= 1e-9)
    lines = [f"# name={C.name}", f"# m={C.m}", f"# normalized={normalized}"]
    for i, (x, p) in enumerate(zip(C.points, C.priors)):
        row = [format(v, ".17g") for v in x] + [format(p, ".17g")]
        if C.shell_index is not None:
            row.append(str(C.shell_index[i]))
        lines.append(" ".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_constellation_file(path, normalize=None) -> Constellation:
    """Read a constellation file.

    Header lines ``# name=``, ``# m=`` and ``# normalized=`` precede one line per
    point: ``x1 x2 x3 x4 prior [shell]``. Files flagged ``normalized=0`` are scaled
    to unit mean energy on load; files flagged ``normalized=1`` are returned as
    written. Pass ``normalize`` explicitly to override the flag.
    """
    header = {}
    rows, shells = [], []
    lineno = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if not sep:
                    continue
                header[key.strip()] = value.strip()
                continue
            fields = line.split()
            if len(fields) not in (5, 6):
                raise ConstellationFormatError(
                    f"expected 5 or 6 fields, got {len(fields)}", lineno
                )
            try:
                rows.append([float(v) for v in fields[:5]])
            except ValueError as exc:
                raise ConstellationFormatError(str(exc), lineno) from None
            if not np.all(np.isfinite(rows[-1])):
                raise ConstellationFormatError("non-finite value", lineno)
            if rows[-1][4] < 0:
                raise ConstellationFormatError("negative prior", lineno)
            if len(fields) == 6:
                try:
                    shells.append(int(fields[5]))
                except ValueError:
                    raise ConstellationFormatError("shell index must be an integer", lineno) from None
    if "m" not in header:
        raise ConstellationFormatError("missing '# m=' header")
    try:
        m = int(header["m"])
    except ValueError:
        raise ConstellationFormatError(f"bad m header {header['m']!r}") from None
    if len(rows) != 2**m:
        raise ConstellationFormatError(
            f"point count {len(rows)} does not match m={m} ({2**m} points)", lineno
        )
    if shells and len(shells) != len(rows):
        raise ConstellationFormatError("shell index given for some points only")
    data = np.array(rows)
    priors = data[:, 4]
    if abs(priors.sum() - 1.0) > 1e-12:
        raise ConstellationFormatError(f"priors sum to {priors.sum():.17g}, not 1")
    C = Constellation(
        data[:, :4],
        priors,
        header.get("name", Path(path).stem),
        shell_index=np.array(shells) if shells else None,
    )
    if normalize is None:
        normalize = header.get("normalized", "0") != "1"
    return normalize_energy(C) if normalize else C
