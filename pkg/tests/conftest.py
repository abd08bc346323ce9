"""Shared helpers for the test suite."""

import sys

import numpy as np

from hexflow.hexmesh import Mesh, build_mesh


def pytest_terminal_summary(terminalreporter):
    """Replay acceptance verdict lines after the run, outside capture."""
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "_VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in verdicts:
            terminalreporter.write_line(line)

UNIT_CUBE = np.array(
    [[i & 1, (i >> 1) & 1, (i >> 2) & 1] for i in range(8)], dtype=np.float64
)

BOX_TAGS = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


def random_hex(rng, jitter=0.12):
    """A random valid hexahedron: affine image of the cube plus jitter.

    The affine part is a rotation composed with a bounded positive
    stretch, so orientation is preserved; the per-vertex jitter is small
    enough to keep every cell valid.
    """
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    stretch = np.diag(rng.uniform(0.5, 2.0, size=3))
    shear = np.eye(3) + 0.3 * rng.uniform(-1, 1, size=(3, 3)) * (
        1 - np.eye(3)
    )
    verts = UNIT_CUBE @ (shear @ stretch @ q).T
    verts = verts + jitter * rng.standard_normal((8, 3))
    return verts + rng.uniform(-5, 5, size=3)


def box_mesh(
    nx, ny, nz, lengths=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0), warp=None
) -> Mesh:
    """Structured box of nx*ny*nz cells with per-side boundary tags.

    ``warp`` may be a callable mapping an (n, 3) vertex array to a
    displaced copy; interior and boundary connectivity are unchanged, so
    the result is a conforming non-orthogonal mesh.
    """
    xs = origin[0] + lengths[0] * np.arange(nx + 1) / nx
    ys = origin[1] + lengths[1] * np.arange(ny + 1) / ny
    zs = origin[2] + lengths[2] * np.arange(nz + 1) / nz
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    if warp is not None:
        verts = np.asarray(warp(verts), dtype=np.float64)

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    hexes = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                hexes.append(
                    [
                        vid(i + a, j + b, k + c)
                        for c in (0, 1)
                        for b in (0, 1)
                        for a in (0, 1)
                    ]
                )

    def cid(i, j, k):
        return (i * ny + j) * nz + k

    boundary = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                c = cid(i, j, k)
                if i == 0:
                    boundary.append((c, 0, "xmin"))
                if i == nx - 1:
                    boundary.append((c, 1, "xmax"))
                if j == 0:
                    boundary.append((c, 2, "ymin"))
                if j == ny - 1:
                    boundary.append((c, 3, "ymax"))
                if k == 0:
                    boundary.append((c, 4, "zmin"))
                if k == nz - 1:
                    boundary.append((c, 5, "zmax"))
    return build_mesh(verts, hexes, boundary)


def jitter_warp(seed, scale):
    """Vertex displacement field for non-orthogonal conforming boxes."""

    def warp(verts):
        rng = np.random.default_rng(seed)
        return verts + scale * rng.standard_normal(verts.shape)

    return warp
