"""Affine triangular meshes: Gmsh I/O, built-in generators, connectivity.

Only the ASCII MSH subset actually needed is supported: v2.2 and v4.1 files
with 2-node lines and 3-node triangles. The built-in generators exist so the
test suite needs no external mesher.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay


class MeshParseError(ValueError):
    """Malformed or unsupported mesh file; message carries the line number."""


@dataclass
class TriMesh:
    """Conforming triangulation with edge connectivity and affine maps.

    `elements` rows are counterclockwise. Edge k joins vertices
    `edges[k]`; `edge_elems[k]` holds the one or two adjacent element
    indices (second slot is -1 on the boundary).
    """

    vertices: np.ndarray
    elements: np.ndarray
    lc: float | None = None
    edges: np.ndarray = field(init=False)
    edge_elems: np.ndarray = field(init=False)
    elem_edges: np.ndarray = field(init=False)
    boundary_edges: np.ndarray = field(init=False)
    # affine data: x = B r + c maps reference -> physical
    affine_b: np.ndarray = field(init=False)
    affine_c: np.ndarray = field(init=False)
    affine_b_inv: np.ndarray = field(init=False)
    jacobian: np.ndarray = field(init=False)
    h_elem: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.elements = np.asarray(self.elements, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must be (N, 2)")
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:
            raise ValueError("elements must be (N, 3)")
        self._orient_ccw()
        self._build_edges()
        self._build_affine()

    def _orient_ccw(self):
        p = self.vertices[self.elements]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(np.abs(cross) < 1e-14 * np.max(np.abs(p))):
            raise ValueError("degenerate (zero-area) element present")
        flip = cross < 0
        self.elements[flip] = self.elements[flip][:, [0, 2, 1]]

    def _build_edges(self):
        e = self.elements
        # local edge m of an element joins local vertices m and (m+1)%3
        raw = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
        key = np.sort(raw, axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        self.edges = uniq
        n_elm = e.shape[0]
        self.elem_edges = inv.reshape(3, n_elm).T.copy()
        self.edge_elems = np.full((uniq.shape[0], 2), -1, dtype=np.int64)
        for local in range(3):
            for n, k in enumerate(self.elem_edges[:, local]):
                if self.edge_elems[k, 0] < 0:
                    self.edge_elems[k, 0] = n
                elif self.edge_elems[k, 1] < 0:
                    self.edge_elems[k, 1] = n
                else:
                    raise ValueError(f"edge {k} shared by more than two elements")
        self.boundary_edges = np.flatnonzero(self.edge_elems[:, 1] < 0)

    def _build_affine(self):
        p = self.vertices[self.elements]
        v0, v1, v2 = p[:, 0], p[:, 1], p[:, 2]
        # reference vertices (-1,-1), (1,-1), (-1,1)
        b = np.empty((p.shape[0], 2, 2))
        b[:, :, 0] = (v1 - v0) / 2.0
        b[:, :, 1] = (v2 - v0) / 2.0
        self.affine_b = b
        self.affine_c = (v1 + v2) / 2.0
        self.jacobian = b[:, 0, 0] * b[:, 1, 1] - b[:, 0, 1] * b[:, 1, 0]
        self.affine_b_inv = np.empty_like(b)
        self.affine_b_inv[:, 0, 0] = b[:, 1, 1] / self.jacobian
        self.affine_b_inv[:, 0, 1] = -b[:, 0, 1] / self.jacobian
        self.affine_b_inv[:, 1, 0] = -b[:, 1, 0] / self.jacobian
        self.affine_b_inv[:, 1, 1] = b[:, 0, 0] / self.jacobian
        lengths = np.linalg.norm(
            np.stack([v1 - v0, v2 - v1, v0 - v2], axis=1), axis=2
        )
        self.h_elem = lengths.max(axis=1)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    @property
    def h_min(self) -> float:
        return float(self.edge_lengths.min())

    @property
    def h_max(self) -> float:
        return float(self.edge_lengths.max())

    @property
    def h_avg(self) -> float:
        return float(self.edge_lengths.mean())

    def to_reference(self, elem: int, x: np.ndarray) -> np.ndarray:
        """Physical points (n, 2) -> reference coordinates for element `elem`."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - self.affine_c[elem]) @ self.affine_b_inv[elem].T

    def to_physical(self, elem: int, rs: np.ndarray) -> np.ndarray:
        rs = np.atleast_2d(np.asarray(rs, dtype=float))
        return rs @ self.affine_b[elem].T + self.affine_c[elem]

    def element_centroids(self) -> np.ndarray:
        return self.vertices[self.elements].mean(axis=1)

    def dump_json(self, path):
        payload = {
            "vertices": self.vertices.tolist(),
            "elements": self.elements.tolist(),
            "lc": self.lc,
            "n_edges": int(self.edges.shape[0]),
            "n_boundary_edges": int(self.boundary_edges.size),
            "h": [self.h_min, self.h_avg, self.h_max],
        }
        with open(path, "w") as f:
            json.dump(payload, f)


def _lines(stream):
    if isinstance(stream, os.PathLike):
        stream = os.fspath(stream)
    if isinstance(stream, (str, bytes)):
        with open(stream) as f:
            return f.read().splitlines()
    if isinstance(stream, io.IOBase):
        data = stream.read()
        if isinstance(data, bytes):
            data = data.decode()
        return data.splitlines()
    raise TypeError("expected path or stream")


def read_gmsh(path_or_stream, lc: float | None = None) -> TriMesh:
    """Parse an ASCII MSH v2.2 or v4.1 file; keep triangles and drop lines."""
    lines = _lines(path_or_stream)
    if not lines or lines[0].strip() != "$MeshFormat":
        raise MeshParseError("line 1: expected $MeshFormat header")
    fmt = lines[1].split()
    if len(fmt) < 3:
        raise MeshParseError("line 2: malformed format record")
    version, ftype = fmt[0], fmt[1]
    if ftype != "0":
        raise MeshParseError("line 2: binary MSH files are not supported")
    if version.startswith("2"):
        return _read_v2(lines, lc)
    if version.startswith("4"):
        return _read_v4(lines, lc)
    raise MeshParseError(f"line 2: unsupported MSH version {version}")


def _section(lines, name):
    try:
        start = lines.index(f"${name}")
    except ValueError:
        raise MeshParseError(f"missing ${name} section") from None
    try:
        end = lines.index(f"$End{name}", start)
    except ValueError:
        raise MeshParseError(
            f"line {start + 1}: ${name} section is not closed"
        ) from None
    return start, end


def _read_v2(lines, lc):
    n0, n1 = _section(lines, "Nodes")
    try:
        n_nodes = int(lines[n0 + 1])
    except ValueError:
        raise MeshParseError(f"line {n0 + 2}: expected node count") from None
    coords = {}
    for i, ln in enumerate(lines[n0 + 2 : n0 + 2 + n_nodes]):
        parts = ln.split()
        if len(parts) < 4:
            raise MeshParseError(f"line {n0 + 3 + i}: malformed node record")
        coords[int(parts[0])] = (float(parts[1]), float(parts[2]))

    e0, e1 = _section(lines, "Elements")
    n_elems = int(lines[e0 + 1])
    tris = []
    for i, ln in enumerate(lines[e0 + 2 : e0 + 2 + n_elems]):
        parts = ln.split()
        if len(parts) < 3:
            raise MeshParseError(f"line {e0 + 3 + i}: malformed element record")
        etype = int(parts[1])
        n_tags = int(parts[2])
        conn = parts[3 + n_tags :]
        if etype == 2:
            if len(conn) != 3:
                raise MeshParseError(
                    f"line {e0 + 3 + i}: triangle needs 3 nodes"
                )
            tris.append([int(c) for c in conn])
        elif etype in (1, 15):
            continue  # lines and points are ignored
        else:
            raise MeshParseError(
                f"line {e0 + 3 + i}: unsupported element type {etype}"
            )
    return _from_tagged(coords, tris, lc)


def _read_v4(lines, lc):
    n0, n1 = _section(lines, "Nodes")
    header = lines[n0 + 1].split()
    n_blocks = int(header[0])
    coords = {}
    i = n0 + 2
    for _ in range(n_blocks):
        blk = lines[i].split()
        if len(blk) != 4:
            raise MeshParseError(f"line {i + 1}: malformed node block header")
        n_in_block = int(blk[3])
        tags = [int(lines[i + 1 + k]) for k in range(n_in_block)]
        for k in range(n_in_block):
            parts = lines[i + 1 + n_in_block + k].split()
            coords[tags[k]] = (float(parts[0]), float(parts[1]))
        i += 1 + 2 * n_in_block

    e0, e1 = _section(lines, "Elements")
    n_blocks = int(lines[e0 + 1].split()[0])
    tris = []
    i = e0 + 2
    for _ in range(n_blocks):
        blk = lines[i].split()
        if len(blk) != 4:
            raise MeshParseError(f"line {i + 1}: malformed element block header")
        etype, n_in_block = int(blk[2]), int(blk[3])
        for k in range(n_in_block):
            parts = lines[i + 1 + k].split()
            if etype == 2:
                if len(parts) != 4:
                    raise MeshParseError(
                        f"line {i + 2 + k}: triangle needs 3 nodes"
                    )
                tris.append([int(p) for p in parts[1:]])
            elif etype not in (1, 15):
                raise MeshParseError(
                    f"line {i + 2 + k}: unsupported element type {etype}"
                )
        i += 1 + n_in_block
    return _from_tagged(coords, tris, lc)


def _from_tagged(coords, tris, lc):
    if not tris:
        raise MeshParseError("no triangles found in file")
    tags = sorted(coords)
    index = {t: i for i, t in enumerate(tags)}
    vertices = np.array([coords[t] for t in tags])
    elements = np.array([[index[a] for a in tri] for tri in tris])
    used = np.zeros(len(tags), dtype=bool)
    used[elements.ravel()] = True
    remap = -np.ones(len(tags), dtype=np.int64)
    remap[used] = np.arange(used.sum())
    return TriMesh(vertices[used], remap[elements], lc=lc)


def write_gmsh(mesh: TriMesh, path) -> None:
    """Serialize as ASCII MSH v2.2 (triangles only)."""
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write(f"$Nodes\n{mesh.n_vertices}\n")
        for i, (x, y) in enumerate(mesh.vertices, start=1):
            f.write(f"{i} {float(x)!r} {float(y)!r} 0\n")
        f.write("$EndNodes\n")
        f.write(f"$Elements\n{mesh.n_elements}\n")
        for i, (a, b, c) in enumerate(mesh.elements + 1, start=1):
            f.write(f"{i} 2 2 0 0 {a} {b} {c}\n")
        f.write("$EndElements\n")


def _delaunay_mesh(points, keep_centroid=None, lc=None) -> TriMesh:
    points = np.asarray(points, dtype=float)
    tri = Delaunay(points)
    simplices = tri.simplices
    p = points[simplices]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    lengths = np.stack(
        [
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ]
    ).max(axis=0)
    # drop slivers produced by nearly-collinear boundary points
    good = area > 0.05 * lengths**2
    if keep_centroid is not None:
        cent = p.mean(axis=1)
        good &= keep_centroid(cent)
    return TriMesh(points, simplices[good], lc=lc)


def generate_structured_square(
    lc: float,
    lx: float = 1.0,
    ly: float = 1.0,
    origin: tuple[float, float] = (0.0, 0.0),
) -> TriMesh:
    """Quasi-uniform triangulation of [x0, x0+lx] x [y0, y0+ly].

    Vertex rows are offset by half a spacing so the Delaunay triangles come
    out near-equilateral, as a frontal mesher would produce.
    """
    if lc <= 0 or lx <= 0 or ly <= 0:
        raise ValueError("lc and box dimensions must be positive")
    x0, y0 = origin
    nx = max(1, round(lx / lc))
    ny = max(1, round(ly / (lc * np.sqrt(3.0) / 2.0)))
    dx = lx / nx
    ys = np.linspace(y0, y0 + ly, ny + 1)
    pts = []
    for j, y in enumerate(ys):
        if j == 0 or j == ny:
            xs = np.linspace(x0, x0 + lx, nx + 1)
        elif j % 2 == 1:
            xs = np.concatenate(
                ([x0], x0 + dx / 2.0 + dx * np.arange(nx), [x0 + lx])
            )
        else:
            xs = np.linspace(x0, x0 + lx, nx + 1)
        pts.extend((x, y) for x in xs)
    return _delaunay_mesh(np.array(pts), lc=lc)


def generate_structured_disk(
    lc: float,
    radius: float = 1.0,
    center: tuple[float, float] = (0.0, 0.0),
) -> TriMesh:
    """Quasi-uniform disk triangulation; boundary vertices land on the circle
    to round-off (snapping contract for conformal fixtures)."""
    if lc <= 0 or radius <= 0:
        raise ValueError("lc and radius must be positive")
    cx, cy = center
    n_rings = max(1, round(radius / lc))
    dr = radius / n_rings
    pts = [(cx, cy)]
    for k in range(1, n_rings + 1):
        r = k * dr
        n_theta = max(6, round(2.0 * np.pi * r / lc))
        offset = (np.pi / n_theta) * (k % 2)
        theta = offset + 2.0 * np.pi * np.arange(n_theta) / n_theta
        pts.extend(zip(cx + r * np.cos(theta), cy + r * np.sin(theta)))
    pts = np.array(pts)
    # snap the outer ring exactly onto the circle
    rad = np.linalg.norm(pts - (cx, cy), axis=1)
    outer = rad > radius - 0.5 * dr
    pts[outer] = (
        np.array(center)
        + (pts[outer] - (cx, cy)) * (radius / rad[outer])[:, None]
    )

    def inside(cent):
        return np.linalg.norm(cent - (cx, cy), axis=1) < radius

    return _delaunay_mesh(pts, keep_centroid=inside, lc=lc)
