"""Wavefront OBJ export of meshes and of snap animations."""

from __future__ import annotations

import os

import numpy as np

from . import __version__
from .errors import DomainError, MeshError
from .geometry import Mesh, Realization, build_vertices


def _header(params: dict | None) -> list:
    lines = [f"# sandglass {__version__}"]
    for k, v in (params or {}).items():
        lines.append(f"# param {k} = {v!r}" if isinstance(v, float) else f"# param {k} = {v}")
    return lines


def obj_text(mesh: Mesh, params: dict | None = None) -> str:
    lines = _header(params)
    for x, y, z in mesh.vertices:
        lines.append("v %.17g %.17g %.17g" % (x, y, z))
    for a, b, c in mesh.faces:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    for i, j, label in mesh.edges:
        lines.append(f"# edge class {label} {i + 1} {j + 1}")
    return "\n".join(lines) + "\n"


def write_obj(path, mesh: Mesh, params: dict | None = None) -> str:
    with open(path, "w") as fh:
        fh.write(obj_text(mesh, params))
    return str(path)


def read_obj(path) -> dict:
    """Vertices, faces (0-based), labelled edges and header parameters of an OBJ file."""
    verts, faces, edges, params = [], [], [], {}
    with open(path) as fh:
        for ln in fh:
            parts = ln.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(t) for t in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
            elif parts[:3] == ["#", "edge", "class"]:
                edges.append((int(parts[4]) - 1, int(parts[5]) - 1, parts[3]))
            elif parts[:2] == ["#", "param"]:
                key, _, val = ln[len("# param ") :].partition(" = ")
                params[key.strip()] = val.strip()
    if not verts or not faces:
        raise MeshError(f"{path}: no vertices or faces")
    return {"vertices": np.array(verts), "faces": np.array(faces, dtype=int), "edges": edges, "params": params}


def realization_params(real: Realization, **extra) -> dict:
    sp = real.spec
    return {"n": sp.n, "Q1": sp.Q1, "Q2": sp.Q2, "Q3": sp.Q3, "Q4": sp.Q4, "H": real.H, "h": real.h, "r": real.r, **extra}


def sample_path(path: np.ndarray, frames: int) -> np.ndarray:
    """`frames` points spaced uniformly by arc length along a polyline (endpoints included)."""
    if frames < 2:
        raise DomainError("an animation needs at least 2 frames")
    path = np.asarray(path, dtype=float)
    d = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(path, axis=0), axis=1))])
    t = np.linspace(0.0, d[-1], frames)
    out = np.stack([np.interp(t, d, path[:, j]) for j in range(path.shape[1])], -1)
    out[0], out[-1] = path[0], path[-1]
    return out


def animation_frames(snap_result, frames: int) -> list:
    """Meshes along the refined open -> closed path; identical topology in every frame."""
    spec = snap_result.spec
    return [build_vertices(spec, Realization.from_coords(x, spec)) for x in sample_path(snap_result.path, frames)]


def animate(snap_result, frames: int, outdir, stem: str = "frame") -> list:
    os.makedirs(outdir, exist_ok=True)
    pts = sample_path(snap_result.path, frames)
    spec = snap_result.spec
    paths = []
    width = max(3, len(str(frames - 1)))
    for k, x in enumerate(pts):
        real = Realization.from_coords(x, spec)
        p = os.path.join(outdir, f"{stem}_{k:0{width}d}.obj")
        write_obj(p, build_vertices(spec, real), realization_params(real, frame=k, frames=frames))
        paths.append(p)
    return paths
