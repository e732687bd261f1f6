"""Indexed triangle meshes: loading, generation, validation and export."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# 0xFFFFFFFF is reserved as the out-of-batch sentinel in the dedup kernels and
# must never appear as a real vertex index.
INVALID_INDEX = 0xFFFFFFFF

# Vertices that were never shaded are rendered gray in heatmap exports.
UNREFERENCED_GRAY = (128, 128, 128)
HEATMAP_LOW = 1
HEATMAP_HIGH = 6


class MeshError(ValueError):
    """Invalid mesh data or mesh construction parameters."""


class ObjParseError(MeshError):
    """Malformed OBJ input; carries the offending line number."""

    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


@dataclass(frozen=True)
class IndexedMesh:
    """Vertex buffer plus triangle index buffer.

    positions: (V, 3) float64, model units.
    indices: (3*T,) uint32, three consecutive entries per triangle.
    attributes: optional opaque per-vertex payload, first axis length V.
        The dedup layer never interprets it.

    Arrays are frozen after construction; instances are safe to share
    across threads.
    """

    positions: np.ndarray
    indices: np.ndarray
    attributes: np.ndarray | None = None
    primitive_size: int = 3

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise MeshError(f"positions must be (V, 3), got {pos.shape}")
        idx = np.ascontiguousarray(self.indices, dtype=np.uint32)
        if idx.ndim != 1:
            raise MeshError("indices must be a flat array")
        if self.primitive_size != 3:
            raise MeshError("meshes are triangle lists (primitive_size 3)")
        if len(idx) % 3 != 0:
            raise MeshError(f"index count {len(idx)} is not a multiple of 3")
        if len(idx) > 0:
            if len(pos) < 1:
                raise MeshError("non-empty index buffer with no vertices")
            top = int(idx.max())
            if top >= len(pos):
                raise MeshError(f"index {top} out of range for {len(pos)} vertices")
            if top >= INVALID_INDEX:
                raise MeshError("vertex index collides with reserved sentinel")
        if self.attributes is not None and len(self.attributes) != len(pos):
            raise MeshError("attributes must have one record per vertex")
        pos.flags.writeable = False
        idx.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "indices", idx)

    @property
    def vertex_count(self) -> int:
        return len(self.positions)

    @property
    def triangle_count(self) -> int:
        return len(self.indices) // 3

    def triangles(self) -> np.ndarray:
        """Indices viewed as a (T, 3) array."""
        return self.indices.reshape(-1, 3)


@dataclass(frozen=True)
class VertexShadingCounts:
    """Per-vertex shader invocation tallies for one strategy run."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.counts, dtype=np.int64)
        if c.ndim != 1:
            raise MeshError("counts must be a flat array")
        if len(c) and c.min() < 0:
            raise MeshError("negative shading count")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def load_obj(path: str | Path) -> IndexedMesh:
    """Parse a Wavefront OBJ file into a validated IndexedMesh.

    Only vertex positions and faces are used; normals, UVs, materials and
    groups are skipped. Polygonal faces are fan-triangulated in declaration
    order. Negative face indices address vertices relative to the end of
    the list declared so far, per the OBJ convention.
    """
    positions: list[tuple[float, float, float]] = []
    indices: list[int] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ObjParseError(path, line_no, "vertex needs 3 coordinates")
                try:
                    x, y, z = (float(p) for p in parts[1:4])
                except ValueError as exc:
                    raise ObjParseError(path, line_no, f"bad vertex coordinate: {exc}") from None
                positions.append((x, y, z))
            elif tag == "f":
                corners = []
                for token in parts[1:]:
                    ref = token.split("/", 1)[0]
                    try:
                        vi = int(ref)
                    except ValueError:
                        raise ObjParseError(path, line_no, f"bad face index {token!r}") from None
                    if vi < 0:
                        vi = len(positions) + vi
                    else:
                        vi = vi - 1
                    if not 0 <= vi < len(positions):
                        raise ObjParseError(
                            path, line_no, f"face references vertex {token} of {len(positions)} declared"
                        )
                    corners.append(vi)
                if len(corners) < 3:
                    raise ObjParseError(path, line_no, "face needs at least 3 vertices")
                for k in range(1, len(corners) - 1):
                    indices.extend((corners[0], corners[k], corners[k + 1]))
            # all other tags (vn, vt, o, g, s, usemtl, mtllib, ...) are ignored
    try:
        return IndexedMesh(
            positions=np.array(positions, dtype=np.float64).reshape(-1, 3),
            indices=np.array(indices, dtype=np.uint32),
        )
    except MeshError as exc:
        raise ObjParseError(path, 0, str(exc)) from None


def save_obj(mesh: IndexedMesh, path: str | Path) -> None:
    """Write positions and triangles as OBJ; coordinates keep full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.positions:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.triangles():
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = [
    (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
    (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
    (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
]
_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def gen_icosphere(subdivisions: int) -> IndexedMesh:
    """Unit icosphere: 10*4^s + 2 vertices, 20*4^s triangles.

    Each subdivision splits every triangle in four; shared edge midpoints
    are deduplicated so the result stays a closed 2-manifold.
    """
    if not 0 <= subdivisions <= 8:
        raise MeshError("subdivisions must be in [0, 8]")
    verts = [_normalized(v) for v in _ICO_VERTS]
    faces = list(_ICO_FACES)
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            cached = midpoint.get(key)
            if cached is not None:
                return cached
            va, vb = verts[a], verts[b]
            verts.append(_normalized(((va[0] + vb[0]) / 2, (va[1] + vb[1]) / 2, (va[2] + vb[2]) / 2)))
            midpoint[key] = len(verts) - 1
            return midpoint[key]

        split = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            split += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = split
    return IndexedMesh(
        positions=np.array(verts, dtype=np.float64),
        indices=np.array(faces, dtype=np.uint32).reshape(-1),
    )


def _normalized(v: tuple[float, float, float]) -> tuple[float, float, float]:
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    return (v[0] / n, v[1] / n, v[2] / n)


def gen_grid(rows: int, cols: int) -> IndexedMesh:
    """Regular grid in the z=0 plane: rows*cols vertices, 2*(rows-1)*(cols-1)
    triangles emitted in row-major strip order."""
    if rows < 2 or cols < 2:
        raise MeshError("grid needs rows, cols >= 2")
    ys, xs = np.mgrid[0:rows, 0:cols]
    positions = np.column_stack(
        [xs.ravel().astype(np.float64), ys.ravel().astype(np.float64), np.zeros(rows * cols)]
    )
    faces = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            v00 = r * cols + c
            v01 = v00 + 1
            v10 = v00 + cols
            v11 = v10 + 1
            faces.append((v00, v10, v01))
            faces.append((v01, v10, v11))
    return IndexedMesh(positions=positions, indices=np.array(faces, dtype=np.uint32).reshape(-1))


def shuffle_triangles(mesh: IndexedMesh, seed: int) -> IndexedMesh:
    """Permute triangle order with a seeded RNG; corner order inside each
    triangle and the vertex buffer are untouched."""
    tris = mesh.triangles().copy()
    rng = np.random.default_rng(seed)
    rng.shuffle(tris, axis=0)
    return IndexedMesh(positions=mesh.positions, indices=tris.reshape(-1), attributes=mesh.attributes)


def shade_count_color(count: int) -> tuple[int, int, int]:
    """Heatmap ramp: gray for unshaded, green at one call, red at six or more,
    linear RGB blend in between."""
    if count <= 0:
        return UNREFERENCED_GRAY
    t = (min(count, HEATMAP_HIGH) - HEATMAP_LOW) / (HEATMAP_HIGH - HEATMAP_LOW)
    return (round(255 * t), round(255 * (1.0 - t)), 0)


def export_heatmap_ply(mesh: IndexedMesh, counts: VertexShadingCounts, path: str | Path) -> None:
    """Write an ASCII PLY with per-vertex uchar RGB encoding shading counts."""
    if len(counts.counts) != mesh.vertex_count:
        raise MeshError("counts length does not match vertex count")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.vertex_count}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write(f"element face {mesh.triangle_count}\n")
        fh.write("property list uchar uint vertex_indices\nend_header\n")
        for (x, y, z), n in zip(mesh.positions, counts.counts):
            r, g, b = shade_count_color(int(n))
            fh.write(f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b}\n")
        for a, b, c in mesh.triangles():
            fh.write(f"3 {a} {b} {c}\n")
