"""Saab transforms and the channel energy tree.

A Saab layer is a data-driven orthonormal linear map plus one shared bias.
Filters come in two kinds:

* the DC filter, the constant unit vector (1/sqrt(N)) * [1, ..., 1];
* AC filters, the leading principal components of the training samples
  after their DC projection is removed and the residuals are mean-centered.

The bias is the largest training-sample norm. Since every filter has unit
norm, a_k . v + b >= b - ||v|| >= 0 for any input inside the training
norm ball, so outputs of cascaded layers stay non-negative and the cascade
minus its biases is a plain linear map.

Each filter carries a normalized energy (DC: variance of the DC
coefficients; AC: PCA eigenvalues; all divided by their total). Energies
multiply down the hop hierarchy in a :class:`FeatureTree`: a child's
cumulative energy is its parent's cumulative energy times the child's
within-transform fraction. Nodes at or below the energy threshold are
discarded outright, children and all; there is no leaf-collection of
low-energy nodes. Surviving nodes at the last hop form the output feature
dimensions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

_EIG_CUTOFF = 1e-10  # relative eigenvalue floor: drops numerically-null dims

STATUS_INTERMEDIATE = "intermediate"
STATUS_DISCARDED = "discarded"
STATUS_OUTPUT = "output"


@dataclass(frozen=True)
class SaabLayer:
    input_dim: int
    dc_filter: np.ndarray  # (N,)
    ac_filters: np.ndarray  # (K-1, N)
    bias: float
    energies: np.ndarray  # (K,) normalized, DC first

    @property
    def kept_dim(self) -> int:
        return 1 + self.ac_filters.shape[0]

    @property
    def filters(self) -> np.ndarray:
        """(K, N) stacked filter bank, DC row first."""
        return np.vstack([self.dc_filter[None, :], self.ac_filters])

    def param_count(self) -> int:
        """Stored parameters: filter entries plus the shared bias."""
        return self.filters.size + 1


def saab_fit(
    samples: np.ndarray,
    energy_keep: float = 1.0,
    max_dims: int | None = None,
) -> SaabLayer:
    """Fit one Saab layer to (S, N) training samples.

    ``energy_keep`` keeps AC filters (in descending eigenvalue order) until
    the cumulative within-transform energy reaches the given fraction;
    the default 1.0 keeps every filter with numerically nonzero variance.
    ``max_dims`` additionally caps the total kept dimensions (DC included).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"samples must be 2-D (S, N), got shape {x.shape}")
    s, n = x.shape
    if s < 2:
        raise ValueError("need at least 2 samples to fit a Saab layer")
    if not np.isfinite(x).all():
        raise ValueError("samples contain non-finite values")
    if not 0.0 < energy_keep <= 1.0:
        raise ValueError("energy_keep must lie in (0, 1]")

    dc = np.full(n, 1.0 / np.sqrt(n))
    dc_coeffs = x @ dc
    ac = x - np.outer(dc_coeffs, dc)  # remove the DC projection per sample
    centered = ac - ac.mean(axis=0)
    cov = centered.T @ centered / s
    w, v = np.linalg.eigh(cov)
    w = w[::-1]
    v = v[:, ::-1]

    # eligible AC dims: positive eigenvalues above numerical noise, at most
    # n-1 of them (the DC direction always carries a spurious zero here)
    floor = max(w[0], 0.0) * _EIG_CUTOFF
    eligible = min(int(np.count_nonzero(w > floor)), n - 1)

    dc_energy = float(dc_coeffs.var())
    total = dc_energy + float(w[:eligible].sum())
    keep = eligible
    if energy_keep < 1.0 and total > 0.0:
        # cumulative fraction after keeping DC plus the first j AC filters
        levels = (dc_energy + np.concatenate([[0.0], np.cumsum(w[:eligible])])) / total
        keep = int(np.searchsorted(levels, energy_keep - 1e-12))
        keep = min(keep, eligible)
    if max_dims is not None:
        if max_dims < 1:
            raise ValueError("max_dims must keep at least the DC filter")
        keep = min(keep, max_dims - 1)

    ac_filters = v[:, :keep].T.copy()
    kept_energy = dc_energy + float(w[:keep].sum())
    if kept_energy <= 0.0:
        energies = np.zeros(1 + keep)
        energies[0] = 1.0  # degenerate layer: all mass assigned to DC
    else:
        energies = np.concatenate([[dc_energy], w[:keep]]) / kept_energy
    bias = float(np.linalg.norm(x, axis=1).max())
    return SaabLayer(
        input_dim=n,
        dc_filter=dc,
        ac_filters=ac_filters,
        bias=bias,
        energies=energies,
    )


def saab_apply(layer: SaabLayer, v: np.ndarray) -> np.ndarray:
    """Apply a layer: y_k = a_k . v + bias for every kept filter.

    Accepts one vector (N,) or a batch (S, N). Inputs outside the training
    norm ball (||v|| > bias + 1e-9) are transformed as-is but counted and
    logged; their outputs may be negative.
    """
    arr = np.asarray(v, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != layer.input_dim:
        raise ValueError(
            f"input width {arr.shape[1]} does not match layer input_dim {layer.input_dim}"
        )
    over = int(np.count_nonzero(np.linalg.norm(arr, axis=1) > layer.bias + 1e-9))
    if over:
        logger.debug("saab_apply: %d of %d inputs exceed the training norm ball", over, len(arr))
    out = arr @ layer.filters.T + layer.bias
    return out[0] if single else out


def cw_saab_fit(
    per_channel_samples: Mapping[int, np.ndarray],
    energy_keep: float = 1.0,
    max_dims: int | None = None,
) -> dict[int, SaabLayer]:
    """Independent Saab fit per input channel (channel-wise Saab).

    Keys identify channels; each value is that channel's (S, N) sample
    block. Returns one layer per key. The combined parameter count is far
    below a joint fit on the concatenated width, which is the point.
    """
    if not per_channel_samples:
        raise ValueError("no channels to fit")
    return {
        ch: saab_fit(block, energy_keep=energy_keep, max_dims=max_dims)
        for ch, block in sorted(per_channel_samples.items())
    }


# ---------------------------------------------------------------------------
# energy tree
# ---------------------------------------------------------------------------


@dataclass
class FeatureNode:
    node_id: int
    hop: int
    parent: int  # -1 for the root
    channel: int  # output slot within the parent's transform; -1 for root
    fraction: float  # within-transform normalized energy
    cumulative: float
    status: str


@dataclass
class FeatureTree:
    """Hierarchy of Saab output channels across hops.

    Node 0 is the virtual root (cumulative energy 1). Children are appended
    hop by hop via :func:`propagate_energy`; node ids are list positions.
    """

    nodes: list[FeatureNode] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.nodes:
            self.nodes.append(
                FeatureNode(
                    node_id=0, hop=0, parent=-1, channel=-1,
                    fraction=1.0, cumulative=1.0, status=STATUS_INTERMEDIATE,
                )
            )

    def node(self, node_id: int) -> FeatureNode:
        return self.nodes[node_id]

    def children(self, parent_id: int) -> list[FeatureNode]:
        return [n for n in self.nodes if n.parent == parent_id]

    def at_hop(self, hop: int, status: str | None = None) -> list[FeatureNode]:
        return [
            n for n in self.nodes
            if n.hop == hop and (status is None or n.status == status)
        ]

    def surviving(self, hop: int) -> list[FeatureNode]:
        """Hop nodes that were not discarded (intermediate or output)."""
        return [n for n in self.nodes if n.hop == hop and n.status != STATUS_DISCARDED]

    def output_dim(self) -> int:
        return sum(1 for n in self.nodes if n.status == STATUS_OUTPUT)


def propagate_energy(
    tree: FeatureTree,
    transform_energies: Mapping[int, Sequence[float]],
    threshold: float,
    final: bool = False,
) -> FeatureTree:
    """Append one hop of children below the given parents.

    ``transform_energies`` maps parent node id to that parent transform's
    normalized energy fractions (one per output channel, DC first). Each
    child's cumulative energy is parent.cumulative * fraction; children at
    or below ``threshold`` are discarded, the rest are intermediate, or
    output when ``final`` is set. Parents are processed in ascending node id
    order so child ids are deterministic.
    """
    if threshold < 0.0:
        raise ValueError("threshold must be non-negative")
    if abs(tree.nodes[0].cumulative - 1.0) > 1e-12:
        raise ValueError("root energy must be 1")
    if not transform_energies:
        raise ValueError("no parent transforms supplied")
    parent_ids = sorted(transform_energies)
    hops = {tree.node(p).hop for p in parent_ids}
    if len(hops) != 1:
        raise ValueError(f"parents span multiple hops: {sorted(hops)}")
    child_hop = hops.pop() + 1
    for pid in parent_ids:
        parent = tree.node(pid)
        if parent.status == STATUS_DISCARDED:
            raise ValueError(f"node {pid} is discarded and cannot have children")
        fractions = np.asarray(transform_energies[pid], dtype=np.float64)
        if np.any(fractions < 0.0):
            raise ValueError(f"negative energy fraction under node {pid}")
        for ch, frac in enumerate(fractions):
            cum = parent.cumulative * float(frac)
            if cum > threshold:
                status = STATUS_OUTPUT if final else STATUS_INTERMEDIATE
            else:
                status = STATUS_DISCARDED
            tree.nodes.append(
                FeatureNode(
                    node_id=len(tree.nodes), hop=child_hop, parent=pid,
                    channel=ch, fraction=float(frac), cumulative=cum, status=status,
                )
            )
    return tree
