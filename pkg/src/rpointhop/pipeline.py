"""Multi-hop feature learning pipeline.

Training (unsupervised, one pass per hop):

1. Each corpus cloud is optionally unit-sphere normalized, sampled down to
   the hop-1 point budget, and every retained point gets a local reference
   frame (computed once, on this working cloud, and reused at all hops
   with signs re-resolved per hop against the hop's own neighborhood).
2. Hop 1 builds a 24-wide attribute per point: project the point's k
   nearest neighbors into its sign-resolved frame, split them into the 8
   octants (fixed order +++ , ++- , +-+ , +-- , -++ , -+- , --+ , ---,
   where "+" means coordinate >= 0), and concatenate the per-octant mean
   projected coordinates; empty octants contribute zeros. Attributes from
   every cloud are pooled and fit with one joint Saab transform.
3. Hops 2..H first shrink the working cloud by farthest point sampling,
   then build an 8-wide attribute per point and surviving channel: the
   per-octant means of the neighbors' channel value. Each channel is fit
   with its own Saab transform (channel-wise), pooled over the corpus.
4. Channel energies multiply down a :class:`~rpointhop.saab.FeatureTree`;
   channels at or below the energy threshold are dropped together with
   their descendants. Survivors at the last hop are the output feature
   dimensions.

Extraction runs the same geometry with the frozen transforms and returns
one feature row per final-hop point, carrying the point's index into the
input cloud, its input coordinates, and degeneracy diagnostics (minimum
sign-disambiguation margin seen across hops, minimum LRF eigenvalue gap).
Features are invariant to rigid motions of the input up to sign ties,
because every quantity is expressed in the per-point resolved frames.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cloud import PointCloud, normalize_unit_sphere, sample_indices
from .lrf import local_pca_batch, resolve_signs_batch
from .saab import (
    STATUS_DISCARDED,
    FeatureNode,
    FeatureTree,
    SaabLayer,
    cw_saab_fit,
    propagate_energy,
    saab_apply,
    saab_fit,
)
from .spatial import KnnIndex, fps_indices

MODEL_MAGIC = b"RPH1"
MODEL_VERSION = 1


class TrainingError(RuntimeError):
    """Training cannot proceed (empty corpus, all channels pruned, ...)."""


class ModelFormatError(ValueError):
    """A model file is corrupt or has an unsupported version."""


@dataclass(frozen=True)
class HopConfig:
    """Point budget and neighborhood size for one hop."""

    num_points: int
    k_neighbors: int

    def __post_init__(self) -> None:
        if self.num_points < 1:
            raise ValueError("num_points must be positive")
        if self.k_neighbors < 8:
            raise ValueError("k_neighbors must be >= 8 (one point per octant on average)")
        if self.k_neighbors > self.num_points:
            raise ValueError("k_neighbors cannot exceed num_points at that hop")


DEFAULT_HOPS = (
    HopConfig(1024, 64),
    HopConfig(768, 32),
    HopConfig(512, 48),
    HopConfig(384, 48),
)


@dataclass(frozen=True)
class ModelConfig:
    """Full training configuration. Defaults are the object-scale setup:
    1024 working points, neighborhoods 64/32/48/48 over 1024/768/512/384
    points, 64 LRF neighbors, energy threshold 0.001."""

    k_lrf: int = 64
    hops: tuple[HopConfig, ...] = DEFAULT_HOPS
    energy_threshold: float = 0.001
    use_aux_attributes: bool = False
    normalize: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        hops = tuple(self.hops)
        if not hops:
            raise ValueError("at least one hop is required")
        object.__setattr__(self, "hops", hops)
        if self.k_lrf < 3:
            raise ValueError("k_lrf must be >= 3")
        if self.k_lrf > hops[0].num_points:
            raise ValueError("k_lrf cannot exceed the hop-1 point budget")
        for prev, nxt in zip(hops, hops[1:]):
            if nxt.num_points > prev.num_points:
                raise ValueError("hop point budgets must be non-increasing")
        if self.energy_threshold < 0.0:
            raise ValueError("energy_threshold must be non-negative")


@dataclass(frozen=True)
class RPointHopModel:
    """Frozen result of training: the hop-1 joint Saab layer, the per-node
    channel-wise layers of later hops, and the pruned energy tree."""

    config: ModelConfig
    hop1_layer: SaabLayer
    later_hops: tuple[dict[int, SaabLayer], ...]
    tree: FeatureTree
    format_version: int = MODEL_VERSION

    @property
    def feature_dim(self) -> int:
        return self.tree.output_dim()


@dataclass(frozen=True)
class FeatureSet:
    """Features of the final-hop points of one cloud.

    ``point_indices`` index into the cloud that was passed to
    :func:`extract_features`; ``coords`` are that cloud's coordinates at
    those indices. ``sign_margins`` and ``eigen_gaps`` are per-point
    degeneracy diagnostics: points with a tiny sign margin or eigenvalue
    gap have unstable frames and their features need not be invariant.
    """

    point_indices: np.ndarray
    coords: np.ndarray
    features: np.ndarray
    sign_margins: np.ndarray
    eigen_gaps: np.ndarray

    def __post_init__(self) -> None:
        if not (
            len(self.point_indices) == len(self.coords) == len(self.features)
            == len(self.sign_margins) == len(self.eigen_gaps)
        ):
            raise ValueError("feature set arrays must have one row per point")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain non-finite values")

    def __len__(self) -> int:
        return len(self.point_indices)


# ---------------------------------------------------------------------------
# attribute construction
# ---------------------------------------------------------------------------


def _octant_onehot(proj: np.ndarray) -> np.ndarray:
    """(P, k, 8) indicator of each projected neighbor's octant."""
    oct_id = (
        (proj[..., 0] < 0).astype(np.intp) * 4
        + (proj[..., 1] < 0) * 2
        + (proj[..., 2] < 0)
    )
    return np.eye(8, dtype=np.float64)[oct_id]


def _project_neighbors(
    coords: np.ndarray, nbr_idx: np.ndarray, axes: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sign-resolved frame coordinates of each point's neighbors.

    Returns (proj (P,k,3), flips (P,3), margins (P,3)). Signs are resolved
    against this neighborhood, so repeated calls at different hops may flip
    axes differently, as intended.
    """
    rel = coords[nbr_idx] - coords[:, None, :]
    proj0 = np.einsum("pkc,pac->pka", rel, axes)
    flips, margins = resolve_signs_batch(proj0)
    return proj0 * flips[:, None, :], flips, margins


def build_hop1_attributes(
    coords: np.ndarray,
    nbr_idx: np.ndarray,
    axes: np.ndarray,
    aux: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """24-wide octant-mean attributes (plus optional aux columns).

    Returns (attributes (P, 24 [+ aux width]), flips (P,3), margins (P,3)).
    Attribute layout is octant-major: octant 0 mean xyz, octant 1 mean xyz,
    ... in the fixed octant order. Empty octants stay zero.
    """
    proj, flips, margins = _project_neighbors(coords, nbr_idx, axes)
    onehot = _octant_onehot(proj)
    counts = onehot.sum(axis=1)
    sums = np.einsum("pko,pkc->poc", onehot, proj)
    means = sums / np.maximum(counts, 1.0)[:, :, None]
    attrs = means.reshape(coords.shape[0], 24)
    if aux is not None:
        attrs = np.hstack([attrs, aux])
    return attrs, flips, margins


def build_later_hop_attributes(
    coords: np.ndarray, nbr_idx: np.ndarray, axes: np.ndarray, values: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel octant means of neighbor channel values.

    ``values`` is (P, C): the previous hop's surviving coefficients at the
    current hop's points. Returns (attributes (P, 8, C), margins (P, 3));
    attributes[:, :, c] is channel c's 8-wide sample block.
    """
    proj, _, margins = _project_neighbors(coords, nbr_idx, axes)
    onehot = _octant_onehot(proj)
    counts = onehot.sum(axis=1)
    sums = np.einsum("pko,pkc->poc", onehot, values[nbr_idx])
    means = sums / np.maximum(counts, 1.0)[:, :, None]
    return means, margins


def _geometric_features_batch(eigenvalues: np.ndarray) -> np.ndarray:
    """(P, 4) linearity/planarity/sphericity/entropy rows; degenerate
    all-zero rows come back as zeros."""
    lam = np.maximum(eigenvalues, 0.0)
    total = lam.sum(axis=1, keepdims=True)
    safe = np.where(total > 0.0, total, 1.0)
    e = lam / safe
    e1 = np.where(e[:, 0] > 0.0, e[:, 0], 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(e > 0.0, np.log(np.where(e > 0.0, e, 1.0)), 0.0)
    out = np.stack(
        [
            (e[:, 0] - e[:, 1]) / e1,
            (e[:, 1] - e[:, 2]) / e1,
            e[:, 2] / e1,
            -(e * logs).sum(axis=1),
        ],
        axis=1,
    )
    return np.where(total > 0.0, out, 0.0)


class _HopRun:
    """Per-cloud working state shared by training and extraction.

    Holds the hop-1 sampled coordinates, the frames computed once on them,
    and the arrays that shrink with each farthest-point downsampling.
    """

    def __init__(self, coords_full: np.ndarray, config: ModelConfig, seed: int) -> None:
        hop1 = config.hops[0]
        n = coords_full.shape[0]
        if n < hop1.num_points:
            raise ValueError(
                f"cloud has {n} points but hop 1 needs {hop1.num_points}"
            )
        self.orig_indices = sample_indices(n, hop1.num_points, seed)
        self.coords = coords_full[self.orig_indices]
        index = KnnIndex(self.coords)
        table = index.self_neighbor_table(max(config.k_lrf, hop1.k_neighbors))
        self.axes, self.eigenvalues = local_pca_batch(self.coords, table[:, : config.k_lrf])
        self.eigen_gaps = np.minimum(
            self.eigenvalues[:, 0] - self.eigenvalues[:, 1],
            self.eigenvalues[:, 1] - self.eigenvalues[:, 2],
        )
        aux = None
        if config.use_aux_attributes:
            # indoor-style attributes: sign-resolved surface normal (the
            # smallest-eigenvalue axis) plus the four eigenvalue features
            hop1_nbr = table[:, : hop1.k_neighbors]
            _, flips, _ = _project_neighbors(self.coords, hop1_nbr, self.axes)
            normal = self.axes[:, 2, :] * flips[:, 2:3]
            aux = np.hstack([normal, _geometric_features_batch(self.eigenvalues)])
        self.attrs, _, margins = build_hop1_attributes(
            self.coords, table[:, : hop1.k_neighbors], self.axes, aux
        )
        self.min_margin = margins.min(axis=1)
        self.values: np.ndarray | None = None  # surviving coefficients, set per hop

    def downsample(self, num_points: int) -> None:
        sel = fps_indices(self.coords, num_points, start=0)
        self.coords = self.coords[sel]
        self.axes = self.axes[sel]
        self.eigenvalues = self.eigenvalues[sel]
        self.eigen_gaps = self.eigen_gaps[sel]
        self.orig_indices = self.orig_indices[sel]
        self.min_margin = self.min_margin[sel]
        self.values = self.values[sel]

    def hop_attributes(self, k_neighbors: int) -> np.ndarray:
        index = KnnIndex(self.coords)
        nbr_idx = index.self_neighbor_table(k_neighbors)
        means, margins = build_later_hop_attributes(
            self.coords, nbr_idx, self.axes, self.values
        )
        np.minimum(self.min_margin, margins.min(axis=1), out=self.min_margin)
        return means


def _surviving_children(tree: FeatureTree, parent_ids: Sequence[int]) -> list[FeatureNode]:
    out: list[FeatureNode] = []
    for pid in parent_ids:
        out.extend(n for n in tree.children(pid) if n.status != STATUS_DISCARDED)
    return out


def _apply_hop1(model_layer: SaabLayer, tree: FeatureTree, attrs: np.ndarray) -> np.ndarray:
    nodes = [n for n in tree.at_hop(1) if n.status != STATUS_DISCARDED]
    cols = [n.channel for n in sorted(nodes, key=lambda n: n.node_id)]
    return saab_apply(model_layer, attrs)[:, cols]


def _apply_later_hop(
    layers: dict[int, SaabLayer],
    tree: FeatureTree,
    parent_ids: Sequence[int],
    means: np.ndarray,
) -> tuple[np.ndarray, list[int]]:
    """Transform per-channel octant means and keep surviving children.

    ``means`` is (P, 8, C) with channel order matching ``parent_ids``.
    Returns the next hop's (P, C') value matrix and its node id order.
    """
    blocks: list[np.ndarray] = []
    next_ids: list[int] = []
    for col, pid in enumerate(parent_ids):
        keep = [n for n in tree.children(pid) if n.status != STATUS_DISCARDED]
        if not keep:
            continue
        out = saab_apply(layers[pid], means[:, :, col])
        blocks.append(out[:, [n.channel for n in keep]])
        next_ids.extend(n.node_id for n in keep)
    if not blocks:
        return np.empty((means.shape[0], 0)), []
    return np.hstack(blocks), next_ids


def train(corpus: Sequence[PointCloud], config: ModelConfig = ModelConfig()) -> RPointHopModel:
    """Fit all hop transforms on a corpus of clouds.

    Deterministic: the corpus order and ``config.seed`` fully determine the
    model (refits are bit-identical in single-threaded execution).
    """
    clouds = list(corpus)
    if not clouds:
        raise TrainingError("empty corpus")
    rng = np.random.Generator(np.random.PCG64(config.seed))
    cloud_seeds = [int(rng.integers(2**63)) for _ in clouds]

    runs: list[_HopRun] = []
    for cloud, seed in zip(clouds, cloud_seeds):
        coords = cloud.coords
        if config.normalize:
            coords = normalize_unit_sphere(cloud)[0].coords
        runs.append(_HopRun(coords, config, seed))

    n_hops = len(config.hops)
    tree = FeatureTree()
    hop1_layer = saab_fit(np.vstack([run.attrs for run in runs]))
    propagate_energy(
        tree, {0: hop1_layer.energies}, config.energy_threshold, final=(n_hops == 1)
    )
    active = sorted(n.node_id for n in tree.surviving(1))
    if not active:
        raise TrainingError(_prune_message(1, n_hops))
    for run in runs:
        run.values = _apply_hop1(hop1_layer, tree, run.attrs)

    later: list[dict[int, SaabLayer]] = []
    for h in range(1, n_hops):
        hop = config.hops[h]
        means_per_cloud = []
        for run in runs:
            run.downsample(hop.num_points)
            means_per_cloud.append(run.hop_attributes(hop.k_neighbors))
        blocks = {
            pid: np.vstack([m[:, :, col] for m in means_per_cloud])
            for col, pid in enumerate(active)
        }
        layers = cw_saab_fit(blocks)
        propagate_energy(
            tree,
            {pid: layers[pid].energies for pid in active},
            config.energy_threshold,
            final=(h == n_hops - 1),
        )
        survivors = _surviving_children(tree, active)
        if not survivors:
            raise TrainingError(_prune_message(h + 1, n_hops))
        for run, means in zip(runs, means_per_cloud):
            run.values, _ = _apply_later_hop(layers, tree, active, means)
        active = sorted(n.node_id for n in survivors)
        later.append(layers)

    return RPointHopModel(
        config=config, hop1_layer=hop1_layer, later_hops=tuple(later), tree=tree
    )


def _prune_message(hop_reached: int, n_hops: int) -> str:
    if hop_reached >= n_hops:
        return f"energy threshold discarded every output channel at final hop {hop_reached}"
    return f"energy threshold left no surviving channels entering hop {hop_reached + 1}"


def extract_features(model: RPointHopModel, cloud: PointCloud, seed: int = 0) -> FeatureSet:
    """Run the frozen pipeline on one cloud.

    The cloud is consumed as-is (training-time normalization is corpus
    preprocessing, not part of inference) so the returned coordinates live
    in the input frame and transforms estimated from them do too.
    """
    config = model.config
    run = _HopRun(cloud.coords, config, seed)
    run.values = _apply_hop1(model.hop1_layer, model.tree, run.attrs)
    active = sorted(n.node_id for n in model.tree.surviving(1))
    for h in range(1, len(config.hops)):
        hop = config.hops[h]
        run.downsample(hop.num_points)
        means = run.hop_attributes(hop.k_neighbors)
        run.values, active = _apply_later_hop(model.later_hops[h - 1], model.tree, active, means)
    return FeatureSet(
        point_indices=run.orig_indices,
        coords=cloud.coords[run.orig_indices],
        features=run.values,
        sign_margins=run.min_margin,
        eigen_gaps=run.eigen_gaps,
    )


# ---------------------------------------------------------------------------
# model serialization
# ---------------------------------------------------------------------------


def _layer_meta(layer: SaabLayer) -> dict:
    return {"input_dim": layer.input_dim, "n_ac": int(layer.ac_filters.shape[0]), "bias": layer.bias}


def _layer_arrays(layer: SaabLayer) -> list[np.ndarray]:
    return [layer.dc_filter, layer.ac_filters, layer.energies]


def save_model(model: RPointHopModel, path) -> None:
    """Write a model file: magic ``RPH1``, format version, a JSON header
    (config, tree, layer shapes), then all arrays as little-endian float64.
    Byte-identical for identical models."""
    header = {
        "config": {
            "k_lrf": model.config.k_lrf,
            "hops": [[h.num_points, h.k_neighbors] for h in model.config.hops],
            "energy_threshold": model.config.energy_threshold,
            "use_aux_attributes": model.config.use_aux_attributes,
            "normalize": model.config.normalize,
            "seed": model.config.seed,
        },
        "tree": [
            [n.hop, n.parent, n.channel, n.fraction, n.cumulative, n.status]
            for n in model.tree.nodes
        ],
        "hop1": _layer_meta(model.hop1_layer),
        "later": [
            [
                [pid, layer.input_dim, int(layer.ac_filters.shape[0]), layer.bias]
                for pid, layer in sorted(hop.items())
            ]
            for hop in model.later_hops
        ],
    }
    arrays = _layer_arrays(model.hop1_layer)
    for hop in model.later_hops:
        for _, layer in sorted(hop.items()):
            arrays.extend(_layer_arrays(layer))
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<I", MODEL_VERSION))
    buf.write(struct.pack("<Q", len(blob)))
    buf.write(blob)
    for arr in arrays:
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ModelFormatError(f"corrupt model file: truncated while reading {what}")
    return data


def _read_array(fh, shape: tuple[int, ...]) -> np.ndarray:
    count = int(np.prod(shape, dtype=np.int64))
    data = _read_exact(fh, count * 8, f"array {shape}")
    return np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)


def _read_layer(fh, meta: dict) -> SaabLayer:
    n, n_ac = int(meta["input_dim"]), int(meta["n_ac"])
    dc = _read_array(fh, (n,))
    ac = _read_array(fh, (n_ac, n))
    energies = _read_array(fh, (1 + n_ac,))
    return SaabLayer(input_dim=n, dc_filter=dc, ac_filters=ac, bias=float(meta["bias"]), energies=energies)


def load_model(path) -> RPointHopModel:
    """Read a model file written by :func:`save_model`. Rejects unknown
    versions and truncated or corrupt files."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MODEL_MAGIC:
            raise ModelFormatError(f"not a model file (magic {magic!r})")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model format version {version}")
        (blob_len,) = struct.unpack("<Q", _read_exact(fh, 8, "header length"))
        try:
            header = json.loads(_read_exact(fh, blob_len, "header").decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise ModelFormatError(f"corrupt model file: bad header ({exc})") from None
        try:
            cfg = header["config"]
            config = ModelConfig(
                k_lrf=int(cfg["k_lrf"]),
                hops=tuple(HopConfig(int(np_), int(k)) for np_, k in cfg["hops"]),
                energy_threshold=float(cfg["energy_threshold"]),
                use_aux_attributes=bool(cfg["use_aux_attributes"]),
                normalize=bool(cfg["normalize"]),
                seed=int(cfg["seed"]),
            )
            tree = FeatureTree()
            tree.nodes = [
                FeatureNode(
                    node_id=i, hop=int(hop), parent=int(parent), channel=int(channel),
                    fraction=float(fraction), cumulative=float(cumulative), status=str(status),
                )
                for i, (hop, parent, channel, fraction, cumulative, status) in enumerate(header["tree"])
            ]
            hop1_layer = _read_layer(fh, header["hop1"])
            later = []
            for hop_meta in header["later"]:
                layers = {}
                for pid, input_dim, n_ac, bias in hop_meta:
                    layers[int(pid)] = _read_layer(
                        fh, {"input_dim": input_dim, "n_ac": n_ac, "bias": bias}
                    )
                later.append(layers)
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"corrupt model file: missing field ({exc})") from None
        trailing = fh.read(1)
        if trailing:
            raise ModelFormatError("corrupt model file: trailing bytes after arrays")
    return RPointHopModel(
        config=config, hop1_layer=hop1_layer, later_hops=tuple(later),
        tree=tree, format_version=version,
    )


# ---------------------------------------------------------------------------
# config text files
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "k_lrf", "num_points", "k_neighbors", "energy_threshold",
    "use_aux_attributes", "normalize", "seed",
}


def _parse_bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"config key {key}: expected a boolean, got {text!r}")


def parse_config(text: str) -> ModelConfig:
    """Parse the flat ``key = value`` config format.

    ``num_points`` and ``k_neighbors`` take one integer per hop (whitespace
    or comma separated) and must have equal lengths; the remaining keys are
    scalars. Unknown keys are an error.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, val = stripped.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = val.strip()

    kwargs: dict = {}
    if "k_lrf" in values:
        kwargs["k_lrf"] = int(values["k_lrf"])
    if ("num_points" in values) != ("k_neighbors" in values):
        raise ValueError("num_points and k_neighbors must be given together")
    if "num_points" in values:
        pts = [int(v) for v in values["num_points"].replace(",", " ").split()]
        ks = [int(v) for v in values["k_neighbors"].replace(",", " ").split()]
        if len(pts) != len(ks):
            raise ValueError("num_points and k_neighbors must have one entry per hop")
        kwargs["hops"] = tuple(HopConfig(p, k) for p, k in zip(pts, ks))
    if "energy_threshold" in values:
        kwargs["energy_threshold"] = float(values["energy_threshold"])
    if "use_aux_attributes" in values:
        kwargs["use_aux_attributes"] = _parse_bool(values["use_aux_attributes"], "use_aux_attributes")
    if "normalize" in values:
        kwargs["normalize"] = _parse_bool(values["normalize"], "normalize")
    if "seed" in values:
        kwargs["seed"] = int(values["seed"])
    return ModelConfig(**kwargs)


def format_config(config: ModelConfig) -> str:
    """Inverse of :func:`parse_config`."""
    return "\n".join(
        [
            f"k_lrf = {config.k_lrf}",
            "num_points = " + " ".join(str(h.num_points) for h in config.hops),
            "k_neighbors = " + " ".join(str(h.k_neighbors) for h in config.hops),
            f"energy_threshold = {config.energy_threshold!r}",
            f"use_aux_attributes = {str(config.use_aux_attributes).lower()}",
            f"normalize = {str(config.normalize).lower()}",
            f"seed = {config.seed}",
        ]
    ) + "\n"
