"""Motion interchange format.

A JSON document with one ``header`` object and one ``frames`` array.
Arrays are flattened row-major. A ``.npz`` file with the same field layout
is accepted as a compact binary variant.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    SMPL_MIRROR_PAIRS,
    SMPL_PARENTS,
    BodyMesh,
    MotionSequence,
    SchemaError,
    ShapeError,
    require_dynamics_length,
)

HEADER_FIELDS = ("fps", "N_U", "J", "K", "faces", "part_labels", "foot_vertex_sets")
FRAME_FIELDS = ("vertex_positions", "joint_positions", "joint_rotations_6d", "root_translation")


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def to_document(m: MotionSequence) -> dict:
    body = m.body
    header = {
        "fps": m.fps,
        "N_U": body.num_vertices,
        "J": m.num_joints,
        "K": body.num_parts,
        "faces": body.faces.ravel().tolist(),
        "part_labels": body.part_labels.tolist(),
        "foot_vertex_sets": {k: v.tolist() for k, v in body.foot_vertex_sets.items()},
        "parents": list(body.parents),
        "mirror_pairs": [list(p) for p in body.mirror_pairs],
        "rest_vertices": body.vertices.ravel().tolist(),
    }
    if body.vertex_mirror_map is not None:
        header["vertex_mirror_map"] = body.vertex_mirror_map.tolist()
    if m.metadata:
        header["metadata"] = _to_jsonable(m.metadata)
    frames = [
        {
            "vertex_positions": m.vertices[t].ravel().tolist(),
            "joint_positions": m.joints[t].ravel().tolist(),
            "joint_rotations_6d": m.rotations_6d[t].ravel().tolist(),
            "root_translation": m.root_translation[t].tolist(),
        }
        for t in range(m.num_frames)
    ]
    return {"header": header, "frames": frames}


def _array(value, where: str, size: int | None = None, dtype=float) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"field '{where}' is not a numeric array") from exc
    if arr.ndim != 1:
        raise SchemaError(f"field '{where}' must be a flat array")
    if size is not None and arr.size != size:
        raise SchemaError(f"field '{where}' has {arr.size} values, expected {size}")
    return arr


def from_document(doc: dict) -> MotionSequence:
    if not isinstance(doc, dict):
        raise SchemaError("document must be an object with 'header' and 'frames'")
    for key in ("header", "frames"):
        if key not in doc:
            raise SchemaError(f"missing field '{key}'")
    header = doc["header"]
    for key in HEADER_FIELDS:
        if key not in header:
            raise SchemaError(f"missing field 'header.{key}'")
    try:
        n, nj, k = int(header["N_U"]), int(header["J"]), int(header["K"])
        fps = float(header["fps"])
    except (TypeError, ValueError) as exc:
        raise SchemaError("header fields 'fps', 'N_U', 'J', 'K' must be numbers") from exc
    faces = _array(header["faces"], "header.faces", dtype=np.int64)
    if faces.size % 3:
        raise SchemaError("field 'header.faces' length must be a multiple of 3")
    labels = _array(header["part_labels"], "header.part_labels", n, dtype=np.int64)
    feet = header["foot_vertex_sets"]
    if not isinstance(feet, dict):
        raise SchemaError("field 'header.foot_vertex_sets' must be an object")
    feet = {side: _array(feet.get(side, []), f"header.foot_vertex_sets.{side}", dtype=np.int64)
            for side in ("left", "right")}

    frames = doc["frames"]
    if not isinstance(frames, list):
        raise SchemaError("field 'frames' must be an array")
    sizes = {"vertex_positions": 3 * n, "joint_positions": 3 * nj,
             "joint_rotations_6d": 6 * nj, "root_translation": 3}
    cols = {key: [] for key in FRAME_FIELDS}
    for t, frame in enumerate(frames):
        if not isinstance(frame, dict):
            raise SchemaError(f"field 'frames[{t}]' must be an object")
        for key in FRAME_FIELDS:
            if key not in frame:
                raise SchemaError(f"missing field 'frames[{t}].{key}'")
            arr = _array(frame[key], f"frames[{t}].{key}")
            if arr.size != sizes[key]:
                raise ShapeError(f"frames[{t}].{key} has {arr.size} values, expected {sizes[key]}")
            cols[key].append(arr)
    require_dynamics_length(len(frames))

    vertices = np.stack(cols["vertex_positions"]).reshape(-1, n, 3)
    rest = header.get("rest_vertices")
    rest = vertices[0] if rest is None else _array(rest, "header.rest_vertices", 3 * n).reshape(n, 3)
    vmap = header.get("vertex_mirror_map")
    body = BodyMesh(
        vertices=rest,
        faces=faces.reshape(-1, 3),
        part_labels=labels,
        foot_vertex_sets=feet,
        num_parts=k,
        parents=tuple(header.get("parents", SMPL_PARENTS if nj == len(SMPL_PARENTS) else [-1] * nj)),
        mirror_pairs=tuple(tuple(p) for p in header.get("mirror_pairs", SMPL_MIRROR_PAIRS)),
        vertex_mirror_map=None if vmap is None else np.asarray(vmap, dtype=np.int64),
    )
    return MotionSequence(
        fps=fps,
        vertices=vertices,
        joints=np.stack(cols["joint_positions"]).reshape(-1, nj, 3),
        rotations_6d=np.stack(cols["joint_rotations_6d"]).reshape(-1, nj, 6),
        root_translation=np.stack(cols["root_translation"]),
        body=body,
        metadata=header.get("metadata", {}),
    )


def save_motion(m: MotionSequence, path: str | Path) -> None:
    path = Path(path)
    doc = to_document(m)
    if path.suffix == ".npz":
        header = doc["header"]
        arrays = {
            "header_json": np.array(json.dumps({k: v for k, v in header.items() if k != "rest_vertices"})),
            "rest_vertices": m.body.vertices,
            "vertex_positions": m.vertices.reshape(m.num_frames, -1),
            "joint_positions": m.joints.reshape(m.num_frames, -1),
            "joint_rotations_6d": m.rotations_6d.reshape(m.num_frames, -1),
            "root_translation": m.root_translation,
        }
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
        return
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_motion(path: str | Path) -> MotionSequence:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(str(z["header_json"]))
            header["rest_vertices"] = z["rest_vertices"].ravel()
            frames = [
                {key: z[key][t] for key in FRAME_FIELDS}
                for t in range(z["vertex_positions"].shape[0])
            ]
        return from_document({"header": header, "frames": frames})
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not a valid JSON document: {exc}") from exc
    return from_document(doc)
