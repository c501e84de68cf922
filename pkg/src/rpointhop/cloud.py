"""Point cloud data model, file IO, and rigid transform utilities.

Conventions used throughout the package:

* coordinates are float64 arrays of shape (N, 3), one row per point;
* a rigid transform (R, t) maps a point p to R @ p + t;
* all stochastic operations take an explicit integer seed and draw from
  numpy's PCG64 generator, which is seedable and platform-stable. The
  PCG64 stream is part of the external contract: the same seed yields the
  same sample on any platform.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMATS = ("off", "ply", "xyz")

_ORTHO_TOL = 1e-9


class CloudParseError(ValueError):
    """A point cloud file could not be parsed. The message names the line."""


def _readonly_f64(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PointCloud:
    """N points with 3D coordinates and optional per-point attributes.

    ``aux`` carries whatever extra per-point columns a file supplied
    (e.g. normals from a PLY, trailing columns of an XYZ). Width is free
    but the row count must match ``coords``.
    """

    coords: np.ndarray
    aux: np.ndarray | None = None

    def __post_init__(self) -> None:
        coords = _readonly_f64(np.atleast_2d(self.coords))
        if coords.ndim != 2 or coords.shape[1] != 3 or coords.shape[0] < 1:
            raise ValueError(f"coords must have shape (N, 3) with N >= 1, got {coords.shape}")
        if not np.isfinite(coords).all():
            raise ValueError("coords contain non-finite values")
        object.__setattr__(self, "coords", coords)
        if self.aux is not None:
            aux = _readonly_f64(np.atleast_2d(self.aux))
            if aux.shape[0] != coords.shape[0]:
                raise ValueError(
                    f"aux has {aux.shape[0]} rows for {coords.shape[0]} points"
                )
            if not np.isfinite(aux).all():
                raise ValueError("aux contains non-finite values")
            object.__setattr__(self, "aux", aux)

    def __len__(self) -> int:
        return self.coords.shape[0]

    def take(self, indices: np.ndarray) -> "PointCloud":
        """Sub-cloud at the given point indices (aux rows follow)."""
        idx = np.asarray(indices, dtype=np.intp)
        aux = None if self.aux is None else self.aux[idx]
        return PointCloud(self.coords[idx], aux)


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion p -> rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = _readonly_f64(self.rotation)
        t = _readonly_f64(self.translation).reshape(-1)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise ValueError(f"translation must have 3 components, got {t.shape}")
        if not (np.isfinite(r).all() and np.isfinite(t).all()):
            raise ValueError("transform contains non-finite values")
        if np.abs(r.T @ r - np.eye(3)).max() > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-9 (improper rotation)")
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -(self.rotation.T @ self.translation))


# ---------------------------------------------------------------------------
# file IO
# ---------------------------------------------------------------------------


def _tokens(line: str) -> list[str]:
    return line.split()


def _parse_floats(tokens: list[str], lineno: int, path: str) -> list[float]:
    try:
        return [float(tok) for tok in tokens]
    except ValueError as exc:
        raise CloudParseError(f"{path}: line {lineno}: non-numeric token ({exc})") from None


def _load_off(lines: list[str], path: str) -> PointCloud:
    # significant (non-blank, non-comment) lines with their 1-based numbers
    sig = [
        (i + 1, ln.strip())
        for i, ln in enumerate(lines)
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not sig:
        raise CloudParseError(f"{path}: line 1: empty OFF file")
    lineno, header = sig[0]
    toks = _tokens(header)
    if toks[0].upper() != "OFF":
        raise CloudParseError(f"{path}: line {lineno}: expected OFF header, got {toks[0]!r}")
    rest = sig[1:]
    if len(toks) > 1:
        # single-line variant: "OFF nv nf ne"
        counts = _parse_floats(toks[1:], lineno, path)
    else:
        if not rest:
            raise CloudParseError(f"{path}: line {lineno}: missing vertex/face count line")
        cl, cline = rest[0]
        counts = _parse_floats(_tokens(cline), cl, path)
        rest = rest[1:]
    if len(counts) < 2:
        raise CloudParseError(f"{path}: line {lineno}: count line needs at least nv and nf")
    nv = int(counts[0])
    if nv < 1:
        raise CloudParseError(f"{path}: line {lineno}: vertex count must be >= 1, got {nv}")
    if len(rest) < nv:
        raise CloudParseError(
            f"{path}: line {rest[-1][0] if rest else lineno}: "
            f"expected {nv} vertex lines, found {len(rest)}"
        )
    coords = np.empty((nv, 3), dtype=np.float64)
    for row, (ln, text) in enumerate(rest[:nv]):
        vals = _parse_floats(_tokens(text), ln, path)
        if len(vals) < 3:
            raise CloudParseError(f"{path}: line {ln}: vertex needs 3 coordinates")
        coords[row] = vals[:3]
    return PointCloud(coords)


def _load_xyz(lines: list[str], path: str) -> PointCloud:
    rows: list[list[float]] = []
    width: int | None = None
    for i, ln in enumerate(lines):
        text = ln.strip()
        if not text or text.startswith("#"):
            continue
        vals = _parse_floats(_tokens(text), i + 1, path)
        if len(vals) < 3:
            raise CloudParseError(f"{path}: line {i + 1}: row needs at least 3 columns")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise CloudParseError(
                f"{path}: line {i + 1}: inconsistent column count "
                f"({len(vals)} vs {width})"
            )
        rows.append(vals)
    if not rows:
        raise CloudParseError(f"{path}: line 1: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    aux = data[:, 3:] if data.shape[1] > 3 else None
    return PointCloud(data[:, :3], aux)


def _load_ply(lines: list[str], path: str) -> PointCloud:
    if not lines or lines[0].strip() != "ply":
        raise CloudParseError(f"{path}: line 1: expected 'ply' magic")
    elements: list[tuple[str, int, list[str]]] = []  # (name, count, property names)
    fmt_seen = False
    i = 1
    while i < len(lines):
        text = lines[i].strip()
        lineno = i + 1
        i += 1
        if not text or text.startswith("comment"):
            continue
        toks = _tokens(text)
        if toks[0] == "format":
            if len(toks) < 2 or toks[1] != "ascii":
                raise CloudParseError(f"{path}: line {lineno}: only ascii PLY is supported")
            fmt_seen = True
        elif toks[0] == "element":
            if len(toks) != 3:
                raise CloudParseError(f"{path}: line {lineno}: malformed element line")
            try:
                cnt = int(toks[2])
            except ValueError:
                raise CloudParseError(f"{path}: line {lineno}: bad element count") from None
            elements.append((toks[1], cnt, []))
        elif toks[0] == "property":
            if not elements:
                raise CloudParseError(f"{path}: line {lineno}: property before any element")
            # list properties (faces) keep a placeholder name
            elements[-1][2].append(toks[-1])
        elif toks[0] == "end_header":
            break
        else:
            raise CloudParseError(f"{path}: line {lineno}: unknown header keyword {toks[0]!r}")
    else:
        raise CloudParseError(f"{path}: line {len(lines)}: missing end_header")
    if not fmt_seen:
        raise CloudParseError(f"{path}: line 2: missing format line")

    coords = None
    aux = None
    for name, count, props in elements:
        if name != "vertex":
            i += count  # skip this element's rows
            continue
        try:
            ix, iy, iz = props.index("x"), props.index("y"), props.index("z")
        except ValueError:
            raise CloudParseError(
                f"{path}: line 1: vertex element lacks x/y/z properties"
            ) from None
        has_normals = all(p in props for p in ("nx", "ny", "nz"))
        coords = np.empty((count, 3), dtype=np.float64)
        aux = np.empty((count, 3), dtype=np.float64) if has_normals else None
        for row in range(count):
            if i >= len(lines):
                raise CloudParseError(f"{path}: line {len(lines)}: truncated vertex data")
            lineno = i + 1
            vals = _parse_floats(_tokens(lines[i]), lineno, path)
            i += 1
            if len(vals) < len(props):
                raise CloudParseError(
                    f"{path}: line {lineno}: expected {len(props)} values, got {len(vals)}"
                )
            coords[row] = (vals[ix], vals[iy], vals[iz])
            if aux is not None:
                aux[row] = (
                    vals[props.index("nx")],
                    vals[props.index("ny")],
                    vals[props.index("nz")],
                )
    if coords is None:
        raise CloudParseError(f"{path}: line 1: no vertex element")
    return PointCloud(coords, aux)


def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in FORMATS:
        return suffix
    raise ValueError(f"cannot infer point cloud format from extension of {path!s}")


def load_cloud(path: str | Path, format: str | None = None) -> PointCloud:
    """Load an ASCII point cloud file (``off``, ``ply``, or ``xyz``).

    When ``format`` is None it is inferred from the file extension.
    Parse failures raise :class:`CloudParseError` naming the offending line.
    """
    fmt = (format or detect_format(path)).lower()
    if fmt == "ply-ascii":
        fmt = "ply"
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    lines = Path(path).read_text().splitlines()
    if fmt == "off":
        return _load_off(lines, str(path))
    if fmt == "ply":
        return _load_ply(lines, str(path))
    return _load_xyz(lines, str(path))


def save_cloud(cloud: PointCloud, path: str | Path, format: str | None = None) -> None:
    """Write a cloud as ASCII. XYZ keeps aux columns; PLY keeps 3-wide aux
    as normals; OFF stores coordinates only."""
    fmt = (format or detect_format(path)).lower()
    if fmt == "ply-ascii":
        fmt = "ply"
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    n = len(cloud)
    out: list[str] = []
    if fmt == "off":
        out.append("OFF")
        out.append(f"{n} 0 0")
        for p in cloud.coords:
            out.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    elif fmt == "xyz":
        data = cloud.coords
        if cloud.aux is not None:
            data = np.hstack([cloud.coords, cloud.aux])
        for row in data:
            out.append(" ".join(f"{v:.17g}" for v in row))
    else:  # ply
        normals = cloud.aux is not None and cloud.aux.shape[1] == 3
        out += ["ply", "format ascii 1.0", f"element vertex {n}"]
        out += [f"property double {ax}" for ax in ("x", "y", "z")]
        if normals:
            out += [f"property double {ax}" for ax in ("nx", "ny", "nz")]
        out.append("end_header")
        for i in range(n):
            vals = list(cloud.coords[i])
            if normals:
                vals += list(cloud.aux[i])
            out.append(" ".join(f"{v:.17g}" for v in vals))
    Path(path).write_text("\n".join(out) + "\n")


def save_transform(tf: RigidTransform, path: str | Path, extra: dict | None = None) -> None:
    """Write a transform as text: ``rotation`` (9 row-major numbers) and
    ``translation`` (3 numbers), 17 significant digits. ``extra`` adds
    further ``key value...`` lines after the two required ones."""
    lines = [
        "rotation " + " ".join(f"{v:.17g}" for v in tf.rotation.ravel()),
        "translation " + " ".join(f"{v:.17g}" for v in tf.translation),
    ]
    if extra:
        for key, val in extra.items():
            if isinstance(val, (list, tuple, np.ndarray)):
                lines.append(f"{key} " + " ".join(f"{v:.17g}" for v in np.ravel(val)))
            elif isinstance(val, float):
                lines.append(f"{key} {val:.17g}")
            else:
                lines.append(f"{key} {val}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_transform(path: str | Path) -> RigidTransform:
    """Read a transform file written by :func:`save_transform`. Comment
    lines (``#``) and unknown keys are ignored."""
    rotation = None
    translation = None
    for i, ln in enumerate(Path(path).read_text().splitlines()):
        text = ln.strip()
        if not text or text.startswith("#"):
            continue
        toks = _tokens(text)
        if toks[0] == "rotation":
            vals = _parse_floats(toks[1:], i + 1, str(path))
            if len(vals) != 9:
                raise CloudParseError(f"{path}: line {i + 1}: rotation needs 9 numbers")
            rotation = np.asarray(vals).reshape(3, 3)
        elif toks[0] == "translation":
            vals = _parse_floats(toks[1:], i + 1, str(path))
            if len(vals) != 3:
                raise CloudParseError(f"{path}: line {i + 1}: translation needs 3 numbers")
            translation = np.asarray(vals)
    if rotation is None or translation is None:
        raise CloudParseError(f"{path}: line 1: missing rotation or translation key")
    return RigidTransform(rotation, translation)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def normalize_unit_sphere(cloud: PointCloud) -> tuple[PointCloud, np.ndarray, float]:
    """Center a cloud on its centroid and scale the farthest point to radius 1.

    Returns (normalized cloud, centroid, scale). A fully coincident cloud has
    scale 0; that case warns and uses scale 1 so the output is the centered
    (all-zero) cloud.
    """
    centroid = cloud.coords.mean(axis=0)
    centered = cloud.coords - centroid
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale <= 0.0:
        warnings.warn("all points coincident; normalizing with scale 1", stacklevel=2)
        scale = 1.0
    return PointCloud(centered / scale, cloud.aux), centroid, scale


def sample_indices(n: int, m: int, seed: int) -> np.ndarray:
    """m distinct indices from range(n), drawn by a partial Fisher-Yates
    shuffle over the PCG64(seed) stream (one bounded draw per output)."""
    if not 1 <= m <= n:
        raise ValueError(f"sample size {m} out of range for {n} points")
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = np.arange(n)
    for i in range(m):
        j = i + int(rng.integers(n - i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:m].copy()


def random_sample(cloud: PointCloud, m: int, seed: int) -> PointCloud:
    """Uniform sample of m distinct points. Deterministic given seed."""
    return cloud.take(sample_indices(len(cloud), m, seed))


def apply_transform(cloud: PointCloud, tf: RigidTransform) -> PointCloud:
    """Rigidly move the cloud: each point p becomes R @ p + t."""
    return PointCloud(cloud.coords @ tf.rotation.T + tf.translation, cloud.aux)


def align_inverse(cloud: PointCloud, tf: RigidTransform) -> PointCloud:
    """Undo a transform: each point g becomes R.T @ (g - t). Used to map a
    source cloud back onto the target it was registered against."""
    return PointCloud((cloud.coords - tf.translation) @ tf.rotation, cloud.aux)
