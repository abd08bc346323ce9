"""Non-orthogonal hexahedral cell geometry and mesh topology.

Conventions (normative for the whole package; README repeats them in
prose):

Vertices.  A cell is 8 vertex positions indexed 0..7 with the bit
layout ``v = i + 2*j + 4*k``: bit 0 set means the plus side of local
axis 0, bit 1 the plus side of axis 1, bit 2 the plus side of axis 2.

Edges.  12 directed edges in 3 groups of 4.  Group ``mu`` holds the
edges running from the minus side to the plus side along local axis
``mu``.  The table below is the package-wide labeling:

    id  tail head group     id  tail head group     id  tail head group
     0    0    1    0        4    0    2    1        8    0    4    2
     1    2    3    0        5    1    3    1        9    1    5    2
     2    4    5    0        6    4    6    1       10    2    6    2
     3    6    7    0        7    5    7    1       11    3    7    2

Node vectors.  ``b[mu]`` is the mean of the four group-``mu`` edge
vectors.  It equals, exactly, the vector joining the corner-mean
centroids of the two faces normal to axis ``mu``.

Faces.  Face ``2*mu`` is the minus-side face of axis ``mu``, face
``2*mu + 1`` the plus side, i.e. the order is (-x, +x, -y, +y, -z, +z)
for an axis-aligned cell.  ``FACE_PARITY[f]`` is +1 on minus faces and
-1 on plus faces and carries all orientation bookkeeping in the
face-basis formulas used by the connection, reflection and pressure
modules.  Face vectors are the quadrilateral vector areas (half the
cross product of the two diagonals), stored outward; a flip applied to
reach the outward orientation is recorded per face.

Volume.  Divergence-theorem sum over the 12 boundary triangles obtained
by cutting every face along the diagonal through corner 0 or corner 7.
That triangulation is watertight and identical to the surface of the
six-tetrahedron decomposition around the main diagonal v0-v7, so both
volume definitions agree to rounding.

Geometry arrays are immutable after construction; sweeps may read them
from any number of workers without locking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateCellError,
    InvertedCellError,
    MeshError,
    MeshFormatError,
)

# ---------------------------------------------------------------------------
# labeling tables

EDGE_TABLE: tuple[tuple[int, int, int], ...] = (
    (0, 1, 0), (2, 3, 0), (4, 5, 0), (6, 7, 0),
    (0, 2, 1), (1, 3, 1), (4, 6, 1), (5, 7, 1),
    (0, 4, 2), (1, 5, 2), (2, 6, 2), (3, 7, 2),
)

# outward corner cycles (for a positively oriented cell) per face;
# the (corner0, corner2) diagonal always touches vertex 0 or vertex 7,
# which is what ties the face triangulation to the 6-tet volume split
FACE_CORNERS = np.array(
    [
        [0, 4, 6, 2],   # -x
        [1, 3, 7, 5],   # +x
        [0, 1, 5, 4],   # -y
        [2, 6, 7, 3],   # +y
        [0, 2, 3, 1],   # -z
        [4, 5, 7, 6],   # +z
    ],
    dtype=np.intp,
)

FACE_AXIS = np.array([0, 0, 1, 1, 2, 2], dtype=np.intp)
FACE_PARITY = np.array([1, -1, 1, -1, 1, -1], dtype=np.float64)
# the two in-plane axes of each face, in ascending order
TANGENT_AXES = np.array(
    [[1, 2], [1, 2], [0, 2], [0, 2], [0, 1], [0, 1]], dtype=np.intp
)

# face diagonals written as edge-vector sums: d1 = e[D1A] + e[D1B],
# d2 = e[D2P] - e[D2M]; the raw face vector is 0.5 * d1 x d2
_D1A = np.array([8, 5, 0, 10, 4, 2], dtype=np.intp)
_D1B = np.array([6, 11, 9, 3, 1, 7], dtype=np.intp)
_D2P = np.array([4, 9, 8, 1, 0, 6], dtype=np.intp)
_D2M = np.array([8, 5, 0, 10, 4, 2], dtype=np.intp)

_EDGE_TAILS = np.array([t for t, _, _ in EDGE_TABLE], dtype=np.intp)
_EDGE_HEADS = np.array([h for _, h, _ in EDGE_TABLE], dtype=np.intp)

# local vertex pair -> (edge id, +1 if the pair is in table order)
_EDGE_BY_PAIR: dict[tuple[int, int], tuple[int, int]] = {}
for _eid, (_t, _h, _g) in enumerate(EDGE_TABLE):
    _EDGE_BY_PAIR[(_t, _h)] = (_eid, 1)
    _EDGE_BY_PAIR[(_h, _t)] = (_eid, -1)

# one representative edge of each tangential group lying on each face
_FACE_GROUP_EDGE: dict[tuple[int, int], int] = {}
for _f in range(6):
    _corners = set(FACE_CORNERS[_f])
    for _eid, (_t, _h, _g) in enumerate(EDGE_TABLE):
        if _t in _corners and _h in _corners and (_f, _g) not in _FACE_GROUP_EDGE:
            _FACE_GROUP_EDGE[(_f, _g)] = _eid

_COND_LIMIT = 1e8


# ---------------------------------------------------------------------------
# per-cell geometry operations (all accept (..., 8, 3) vertex stacks)

def compute_edge_vectors(verts: np.ndarray) -> np.ndarray:
    """Directed edge vectors, shape (..., 12, 3), per the edge table."""
    verts = np.asarray(verts, dtype=np.float64)
    return verts[..., _EDGE_HEADS, :] - verts[..., _EDGE_TAILS, :]


def compute_node_vectors(edge_vectors: np.ndarray) -> np.ndarray:
    """Group means of the edges, shape (..., 3, 3); row mu is b[mu]."""
    e = np.asarray(edge_vectors, dtype=np.float64)
    return 0.25 * (
        e[..., 0::4, :] + e[..., 1::4, :] + e[..., 2::4, :] + e[..., 3::4, :]
    )


def compute_face_vectors(edge_vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward face vectors from edge vectors.

    Returns ``(face_vecs, flipped)`` with shapes (..., 6, 3) and
    (..., 6).  Each raw vector is half the cross product of the face
    diagonals (the exact vector area of the possibly warped
    quadrilateral); it is flipped to point outward when needed, with the
    flip recorded.  Outward is decided by the sign of the projection on
    the matching node vector, which also guards against degenerate
    faces.
    """
    e = np.asarray(edge_vectors, dtype=np.float64)
    d1 = e[..., _D1A, :] + e[..., _D1B, :]
    d2 = e[..., _D2P, :] - e[..., _D2M, :]
    raw = 0.5 * np.cross(d1, d2)

    b = compute_node_vectors(e)
    # projection of each face vector on its axis node vector
    proj = np.einsum("...fi,...fi->...f", raw, b[..., FACE_AXIS, :])
    side = -FACE_PARITY  # -1 on minus faces, +1 on plus faces
    want = proj * side  # must be > 0 for an outward vector

    scale = np.linalg.norm(raw, axis=-1) * np.linalg.norm(
        b[..., FACE_AXIS, :], axis=-1
    )
    bad = np.abs(proj) <= 1e-14 * np.maximum(scale, 1e-300)
    if np.any(bad):
        raise DegenerateCellError(
            "face vector orthogonal to its axis node vector "
            "(zero-area or collapsed face)"
        )
    flipped = want < 0.0
    out = np.where(flipped[..., None], -raw, raw)
    return out, flipped


def compute_volume(verts: np.ndarray) -> np.ndarray | float:
    """Cell volume by the divergence theorem over the triangulated surface.

    Faces are cut along their (corner0, corner2) diagonal, so the result
    equals the six-tetrahedron decomposition around the v0-v7 diagonal
    exactly (same watertight surface).  Raises InvertedCellError when
    the result is not positive.
    """
    v = np.asarray(verts, dtype=np.float64)
    o = v.mean(axis=-2, keepdims=True)
    r = v - o  # positions relative to the vertex mean, for conditioning
    c0 = r[..., FACE_CORNERS[:, 0], :]
    c1 = r[..., FACE_CORNERS[:, 1], :]
    c2 = r[..., FACE_CORNERS[:, 2], :]
    c3 = r[..., FACE_CORNERS[:, 3], :]
    # signed tet volumes against the centroid, both triangles per face
    t1 = np.einsum("...fi,...fi->...f", c0, np.cross(c1, c2))
    t2 = np.einsum("...fi,...fi->...f", c0, np.cross(c2, c3))
    vol = (t1 + t2).sum(axis=-1) / 6.0
    if np.any(vol <= 0.0):
        raise InvertedCellError("non-positive cell volume (vertex order is wrong-handed)")
    return vol if vol.ndim else float(vol)


def compute_gamma(node_vectors: np.ndarray) -> np.ndarray:
    """Gradient-recovery matrix: the inverse of the node-vector rows.

    With ``node_vectors[mu]`` as rows, gamma satisfies
    ``gamma @ (node_vectors @ a) == a`` for any vector ``a``: it maps
    the triple of directional differences along the node vectors back to
    the Cartesian gradient.  Raises DegenerateCellError when the matrix
    is ill-conditioned beyond 1e8.
    """
    nv = np.asarray(node_vectors, dtype=np.float64)
    sig = np.linalg.svd(nv, compute_uv=False)
    cond = sig[..., 0] / np.where(sig[..., -1] > 0.0, sig[..., -1], np.inf)
    if np.any(~np.isfinite(cond)) or np.any(cond > _COND_LIMIT):
        raise DegenerateCellError(
            f"node-vector matrix condition number exceeds {_COND_LIMIT:g}"
        )
    return np.linalg.inv(nv)


def compute_s_coeffs(face_vectors: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Flux coefficients per face: s[f] = gamma^T @ face_vec[f].

    Contracting a face-basis difference triple with s[f] gives the flux
    of the recovered gradient through face f.  Shape (..., 6, 3).
    """
    return np.einsum("...ij,...fi->...fj", gamma, face_vectors)


@dataclass(frozen=True)
class CellGeometry:
    """Complete derived geometry for a single hexahedral cell."""

    verts: np.ndarray          # (8, 3)
    edge_vecs: np.ndarray      # (12, 3)
    node_vecs: np.ndarray      # (3, 3), row mu = b[mu]
    face_vecs: np.ndarray      # (6, 3), outward
    flipped: np.ndarray        # (6,), bool
    volume: float
    gamma: np.ndarray          # (3, 3)
    s_coeffs: np.ndarray       # (6, 3)
    centroid: np.ndarray       # (3,)
    face_centroids: np.ndarray  # (6, 3), corner means


def cell_geometry(verts) -> CellGeometry:
    """Validate one cell and derive every geometric quantity."""
    v = np.asarray(verts, dtype=np.float64)
    if v.shape != (8, 3):
        raise MeshError(f"expected 8 vertices of 3 coordinates, got {v.shape}")
    if not np.isfinite(v).all():
        raise MeshError("non-finite vertex coordinate")
    # coincident vertices collapse an edge and poison every later step
    for i in range(8):
        if (np.abs(v[i + 1:] - v[i]).sum(axis=1) == 0.0).any():
            raise DegenerateCellError("coincident vertices in cell")
    e = compute_edge_vectors(v)
    nv = compute_node_vectors(e)
    fv, flipped = compute_face_vectors(e)
    vol = compute_volume(v)
    gamma = compute_gamma(nv)
    s = compute_s_coeffs(fv, gamma)
    return CellGeometry(
        verts=v,
        edge_vecs=e,
        node_vecs=nv,
        face_vecs=fv,
        flipped=flipped,
        volume=float(vol),
        gamma=gamma,
        s_coeffs=s,
        centroid=v.mean(axis=0),
        face_centroids=v[FACE_CORNERS].mean(axis=1),
    )


# ---------------------------------------------------------------------------
# mesh

@dataclass
class Mesh:
    """Conforming hexahedral mesh with precomputed cell metrics.

    Interior faces are stored as flat pair arrays: entry k couples
    ``(icell_a[k], iface_a[k])`` with ``(icell_b[k], iface_b[k])``.
    The tangential matching arrays translate in-plane axis components
    between the two sides: in-plane axis ``TANGENT_AXES[fa][slot]`` of
    side a corresponds to axis ``tang_axis_b[k, slot]`` of side b with
    relative sign ``tang_sign_b[k, slot]``, as determined from the
    shared edge directions.

    All arrays are set read-only after construction.
    """

    verts: np.ndarray          # (nv, 3)
    cells: np.ndarray          # (nc, 8) vertex ids
    edge_vecs: np.ndarray      # (nc, 12, 3)
    node_vecs: np.ndarray      # (nc, 3, 3)
    face_vecs: np.ndarray      # (nc, 6, 3) outward
    flipped: np.ndarray        # (nc, 6) bool
    volumes: np.ndarray        # (nc,)
    gamma: np.ndarray          # (nc, 3, 3)
    s_coeffs: np.ndarray       # (nc, 6, 3)
    centroids: np.ndarray      # (nc, 3)
    face_centroids: np.ndarray  # (nc, 6, 3)
    face_areas: np.ndarray     # (nc, 6)
    s_normal: np.ndarray       # (nc, 6): s_coeffs along the face axis
    pair_coeff: np.ndarray     # (nc, 6): 2 * parity * s_normal
    cell_size: np.ndarray      # (nc,): min axis thickness, for step diagnostics

    icell_a: np.ndarray        # (nif,)
    iface_a: np.ndarray
    icell_b: np.ndarray
    iface_b: np.ndarray
    tang_axis_b: np.ndarray    # (nif, 2)
    tang_sign_b: np.ndarray    # (nif, 2)

    bcell: np.ndarray          # (nbf,)
    bface: np.ndarray          # (nbf,)
    btag: np.ndarray           # (nbf,) int index into tags
    tags: tuple[str, ...]

    neighbor_cell: np.ndarray  # (nc, 6), -1 where boundary
    neighbor_face: np.ndarray  # (nc, 6), -1 where boundary
    colors: np.ndarray | None = None  # (nc,) 0/1 when the cell graph is bipartite

    _tag_groups: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.verts.shape[0]

    @property
    def n_interior_faces(self) -> int:
        return self.icell_a.shape[0]

    @property
    def n_boundary_faces(self) -> int:
        return self.bcell.shape[0]

    def boundary_group(self, tag: str) -> tuple[np.ndarray, np.ndarray]:
        """(cells, faces) arrays of all boundary faces carrying ``tag``."""
        if tag not in self._tag_groups:
            raise MeshError(f"unknown boundary tag {tag!r}")
        return self._tag_groups[tag]

    def freeze(self):
        for name in (
            "verts", "cells", "edge_vecs", "node_vecs", "face_vecs", "flipped",
            "volumes", "gamma", "s_coeffs", "centroids", "face_centroids",
            "face_areas", "s_normal", "pair_coeff", "cell_size",
            "icell_a", "iface_a", "icell_b", "iface_b",
            "tang_axis_b", "tang_sign_b", "bcell", "bface", "btag",
            "neighbor_cell", "neighbor_face",
        ):
            getattr(self, name).flags.writeable = False
        if self.colors is not None:
            self.colors.flags.writeable = False


def _face_key(cell_verts, f):
    return tuple(sorted(int(cell_verts[c]) for c in FACE_CORNERS[f]))


def _tangent_match(cells, ca, fa, cb, fb):
    """Axis correspondence between the two sides of a shared face.

    For each in-plane axis of side a's face, find which axis of cell b
    runs along the same mesh edge and whether it points the same way.
    """
    axes = np.empty(2, dtype=np.intp)
    signs = np.empty(2, dtype=np.float64)
    pos_b = {int(g): i for i, g in enumerate(cells[cb])}
    for slot in range(2):
        ax = int(TANGENT_AXES[fa][slot])
        eid = _FACE_GROUP_EDGE[(fa, ax)]
        t, h, _ = EDGE_TABLE[eid]
        gt, gh = int(cells[ca][t]), int(cells[ca][h])
        key = (pos_b[gt], pos_b[gh])
        if key not in _EDGE_BY_PAIR:
            raise MeshError(
                f"shared face between cells {ca} and {cb} is not an edge-"
                "conforming quadrilateral"
            )
        eid_b, sign = _EDGE_BY_PAIR[key]
        axes[slot] = EDGE_TABLE[eid_b][2]
        signs[slot] = sign
    return axes, signs


def _two_color(n, nbr):
    """BFS 2-coloring of the cell adjacency; None when not bipartite."""
    color = np.full(n, -1, dtype=np.int8)
    for seed in range(n):
        if color[seed] >= 0:
            continue
        color[seed] = 0
        stack = [seed]
        while stack:
            c = stack.pop()
            for other in nbr[c]:
                if other < 0:
                    continue
                if color[other] < 0:
                    color[other] = 1 - color[c]
                    stack.append(int(other))
                elif color[other] == color[c]:
                    return None
    return color.astype(np.intp)


def build_mesh(vertices, hexes, boundary) -> Mesh:
    """Assemble and validate a mesh.

    Parameters
    ----------
    vertices : (nv, 3) float array-like
    hexes : (nc, 8) int array-like, vertex ids in the package bit layout
    boundary : iterable of (cell, face, tag) declaring every exterior face

    Every local face must end up either in exactly one interior pair
    (matched by its sorted vertex quadruple) or in exactly one boundary
    entry; anything else raises MeshError.  Paired faces are checked to
    carry equal-magnitude, anti-parallel outward vectors.
    """
    verts = np.asarray(vertices, dtype=np.float64)
    cells = np.asarray(hexes, dtype=np.intp)
    if verts.ndim != 2 or verts.shape[1] != 3:
        raise MeshError(f"vertex array must be (nv, 3), got {verts.shape}")
    if cells.ndim != 2 or cells.shape[1] != 8:
        raise MeshError(f"cell array must be (nc, 8), got {cells.shape}")
    if cells.size and (cells.min() < 0 or cells.max() >= len(verts)):
        raise MeshError("cell references a vertex id out of range")
    nc = cells.shape[0]
    if nc == 0:
        raise MeshError("mesh has no cells")

    v8 = verts[cells]  # (nc, 8, 3)
    for c in range(nc):
        if len(set(map(int, cells[c]))) != 8:
            raise DegenerateCellError(f"cell {c} repeats a vertex id")
    edge_vecs = compute_edge_vectors(v8)
    node_vecs = compute_node_vectors(edge_vecs)
    face_vecs, flipped = compute_face_vectors(edge_vecs)
    volumes = np.atleast_1d(compute_volume(v8))
    gamma = compute_gamma(node_vecs)
    centroids = v8.mean(axis=1)
    face_centroids = v8[:, FACE_CORNERS, :].mean(axis=2)

    # closed-surface check: outward vectors of every cell sum to zero
    closure = np.abs(face_vecs.sum(axis=1)).max(axis=1)
    areas0 = np.linalg.norm(face_vecs, axis=2)
    if np.any(closure > 1e-12 * np.maximum(areas0.max(axis=1), 1e-300)):
        raise MeshError("cell surface does not close (face vectors do not cancel)")

    # ---- face pairing ----
    by_key: dict[tuple, list[tuple[int, int]]] = {}
    for c in range(nc):
        cv = cells[c]
        for f in range(6):
            by_key.setdefault(_face_key(cv, f), []).append((c, f))

    declared = {}
    tag_names: list[str] = []
    tag_index: dict[str, int] = {}
    for entry in boundary:
        c, f, tag = int(entry[0]), int(entry[1]), str(entry[2])
        if not (0 <= c < nc and 0 <= f < 6):
            raise MeshError(f"boundary entry ({c}, {f}) out of range")
        if (c, f) in declared:
            raise MeshError(f"boundary face ({c}, {f}) declared twice")
        declared[(c, f)] = tag
        if tag not in tag_index:
            tag_index[tag] = len(tag_names)
            tag_names.append(tag)

    ia, fa_, ib, fb_ = [], [], [], []
    t_axes, t_signs = [], []
    bc, bf, bt = [], [], []
    for key, members in by_key.items():
        if len(members) == 1:
            c, f = members[0]
            if (c, f) not in declared:
                raise MeshError(
                    f"face {f} of cell {c} is neither shared nor declared "
                    "as boundary"
                )
            bc.append(c)
            bf.append(f)
            bt.append(tag_index[declared[(c, f)]])
        elif len(members) == 2:
            (ca, fa), (cb, fb) = members
            if (ca, fa) in declared or (cb, fb) in declared:
                raise MeshError(
                    f"shared face between cells {ca} and {cb} also appears "
                    "in the boundary list"
                )
            axes, signs = _tangent_match(cells, ca, fa, cb, fb)
            ia.append(ca)
            fa_.append(fa)
            ib.append(cb)
            fb_.append(fb)
            t_axes.append(axes)
            t_signs.append(signs)
        else:
            raise MeshError(
                f"vertex quadruple {key} is shared by {len(members)} faces"
            )
    for (c, f) in declared:
        if len(by_key[_face_key(cells[c], f)]) != 1:
            raise MeshError(f"declared boundary face ({c}, {f}) is shared")

    icell_a = np.asarray(ia, dtype=np.intp)
    iface_a = np.asarray(fa_, dtype=np.intp)
    icell_b = np.asarray(ib, dtype=np.intp)
    iface_b = np.asarray(fb_, dtype=np.intp)
    tang_axis_b = (
        np.asarray(t_axes, dtype=np.intp)
        if t_axes else np.empty((0, 2), dtype=np.intp)
    )
    tang_sign_b = (
        np.asarray(t_signs, dtype=np.float64)
        if t_signs else np.empty((0, 2), dtype=np.float64)
    )

    # paired outward vectors must cancel up to rounding; they are then
    # snapped to exact negations (a sub-ulp adjustment) so face exchange
    # and transport terms cancel bitwise across every interior face
    if len(icell_a):
        va = face_vecs[icell_a, iface_a]
        vb = face_vecs[icell_b, iface_b]
        mag = np.linalg.norm(va, axis=1)
        if np.any(np.linalg.norm(va + vb, axis=1) > 1e-12 * mag):
            raise MeshError("paired interior faces are not anti-parallel")
        face_vecs[icell_b, iface_b] = -va

    face_areas = np.linalg.norm(face_vecs, axis=2)
    s_coeffs = compute_s_coeffs(face_vecs, gamma)
    idx = np.arange(6)
    s_normal = s_coeffs[:, idx, FACE_AXIS]
    pair_coeff = 2.0 * FACE_PARITY[None, :] * s_normal
    # per-axis thickness = volume / largest opposing face area
    thick = volumes[:, None] / np.maximum(
        np.maximum(face_areas[:, 0::2], face_areas[:, 1::2]), 1e-300
    )
    cell_size = thick.min(axis=1)

    neighbor_cell = np.full((nc, 6), -1, dtype=np.intp)
    neighbor_face = np.full((nc, 6), -1, dtype=np.intp)
    neighbor_cell[icell_a, iface_a] = icell_b
    neighbor_face[icell_a, iface_a] = iface_b
    neighbor_cell[icell_b, iface_b] = icell_a
    neighbor_face[icell_b, iface_b] = iface_a

    mesh = Mesh(
        verts=verts,
        cells=cells,
        edge_vecs=edge_vecs,
        node_vecs=node_vecs,
        face_vecs=face_vecs,
        flipped=flipped,
        volumes=volumes,
        gamma=gamma,
        s_coeffs=s_coeffs,
        centroids=centroids,
        face_centroids=face_centroids,
        face_areas=face_areas,
        s_normal=s_normal,
        pair_coeff=pair_coeff,
        cell_size=cell_size,
        icell_a=icell_a,
        iface_a=iface_a,
        icell_b=icell_b,
        iface_b=iface_b,
        tang_axis_b=tang_axis_b,
        tang_sign_b=tang_sign_b,
        bcell=np.asarray(bc, dtype=np.intp),
        bface=np.asarray(bf, dtype=np.intp),
        btag=np.asarray(bt, dtype=np.intp),
        tags=tuple(tag_names),
        neighbor_cell=neighbor_cell,
        neighbor_face=neighbor_face,
        colors=_two_color(nc, neighbor_cell),
    )
    groups = {}
    for i, tag in enumerate(mesh.tags):
        sel = mesh.btag == i
        groups[tag] = (mesh.bcell[sel].copy(), mesh.bface[sel].copy())
    mesh._tag_groups = groups
    mesh.freeze()
    return mesh


# ---------------------------------------------------------------------------
# plain-text mesh files
#
# Format (version 1), whitespace separated, '#' starts a comment line:
#
#   hexflow-mesh 1
#   <n_vertices> <n_cells> <n_boundary_faces>
#   x y z                       (n_vertices lines)
#   v0 v1 v2 v3 v4 v5 v6 v7     (n_cells lines, package vertex order)
#   cell face tag               (n_boundary_faces lines, face in 0..5)

def read_mesh_file(path) -> Mesh:
    """Parse a plain-text mesh file and build the mesh."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    lines = []
    for lineno, text in enumerate(raw, start=1):
        text = text.strip()
        if text and not text.startswith("#"):
            lines.append((lineno, text))
    if not lines:
        raise MeshFormatError(f"{path}: empty mesh file")

    def bad(lineno, why):
        return MeshFormatError(f"{path}:{lineno}: {why}")

    lineno, header = lines[0]
    parts = header.split()
    if parts[:1] != ["hexflow-mesh"] or len(parts) != 2 or parts[1] != "1":
        raise bad(lineno, "expected header 'hexflow-mesh 1'")
    if len(lines) < 2:
        raise bad(lineno, "missing counts line")
    lineno, counts = lines[1]
    try:
        nv, nc, nb = (int(x) for x in counts.split())
    except ValueError:
        raise bad(lineno, "counts line must hold three integers") from None
    need = 2 + nv + nc + nb
    if len(lines) != need:
        raise MeshFormatError(
            f"{path}: expected {need} content lines for counts "
            f"{nv} {nc} {nb}, found {len(lines)}"
        )

    verts = np.empty((nv, 3), dtype=np.float64)
    for i in range(nv):
        lineno, text = lines[2 + i]
        try:
            vals = [float(x) for x in text.split()]
        except ValueError:
            raise bad(lineno, "vertex line must hold three floats") from None
        if len(vals) != 3:
            raise bad(lineno, "vertex line must hold three floats")
        verts[i] = vals

    hexes = np.empty((nc, 8), dtype=np.intp)
    for i in range(nc):
        lineno, text = lines[2 + nv + i]
        try:
            ids = [int(x) for x in text.split()]
        except ValueError:
            raise bad(lineno, "cell line must hold eight vertex ids") from None
        if len(ids) != 8:
            raise bad(lineno, "cell line must hold eight vertex ids")
        hexes[i] = ids

    boundary = []
    for i in range(nb):
        lineno, text = lines[2 + nv + nc + i]
        parts = text.split()
        if len(parts) != 3:
            raise bad(lineno, "boundary line must be 'cell face tag'")
        try:
            c, f = int(parts[0]), int(parts[1])
        except ValueError:
            raise bad(lineno, "boundary line must start with two integers") from None
        boundary.append((c, f, parts[2]))

    try:
        return build_mesh(verts, hexes, boundary)
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from exc


def write_mesh_file(mesh: Mesh, path) -> None:
    """Write a mesh back out in the version-1 plain-text format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("hexflow-mesh 1\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_cells} {mesh.n_boundary_faces}\n")
        for x, y, z in mesh.verts:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
        for row in mesh.cells:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")
        for c, f, t in zip(mesh.bcell, mesh.bface, mesh.btag):
            fh.write(f"{int(c)} {int(f)} {mesh.tags[int(t)]}\n")
