"""On-disk formats: array containers with a human-readable manifest plus
raw binary64 payloads, dataset and model layouts, and report CSVs.

A container is a directory holding manifest.txt and one .bin file per
array. Manifest lines are either `key = value` metadata or array
descriptors `array <name> <rank> <dim>... f8le`. Payloads are raw
IEEE-754 binary64 little-endian values in row-major order, so round
trips are bit-exact and the format is trivially readable from any
language.
"""

from __future__ import annotations

import ast
import csv
from pathlib import Path

import numpy as np

from .pde_data import Dataset
from .pipeline import GridSplit, TrainedOperator, _build_recovery_mesh
from .features import FeatureModel, FeatureWeights
from .sampling import INF, StudentTParams
from .solver import RegularizationSpec

SCHEMA_VERSION = 1
_ENCODING = "f8le"


class FormatError(ValueError):
    """Malformed manifest or payload."""


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def write_arrays(path, arrays: dict, meta: dict | None = None) -> None:
    """Write an array container directory (created if needed)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    lines = [f"schema = {SCHEMA_VERSION}"]
    for key, value in (meta or {}).items():
        if "\n" in str(key) or "\n" in str(value):
            raise FormatError(f"metadata entry {key!r} contains a newline")
        lines.append(f"{key} = {value!r}")
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        data = np.ascontiguousarray(arr, dtype="<f8")
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"array {name} {arr.ndim} {dims} {_ENCODING}".rstrip())
        (root / f"{name}.bin").write_bytes(data.tobytes())
    (root / "manifest.txt").write_text("\n".join(lines) + "\n")


def read_arrays(path) -> tuple[dict, dict]:
    """Read an array container; returns (arrays, metadata)."""
    root = Path(path)
    manifest = root / "manifest.txt"
    if not manifest.is_file():
        raise FormatError(f"no manifest.txt in {root}")
    arrays, meta = {}, {}
    for lineno, raw in enumerate(manifest.read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("array "):
            parts = line.split()
            if len(parts) < 4 or parts[-1] != _ENCODING:
                raise FormatError(f"bad descriptor on line {lineno}: {raw!r}")
            name, rank = parts[1], int(parts[2])
            dims = tuple(int(d) for d in parts[3:-1])
            if len(dims) != rank or any(d < 0 for d in dims):
                raise FormatError(f"bad dims on line {lineno}: {raw!r}")
            payload = root / f"{name}.bin"
            if not payload.is_file():
                raise FormatError(f"missing payload {payload.name}")
            flat = np.frombuffer(payload.read_bytes(), dtype="<f8")
            expected = int(np.prod(dims)) if dims else 1
            if flat.size != expected:
                raise FormatError(
                    f"{payload.name}: {flat.size} values, expected {expected}"
                )
            arrays[name] = flat.reshape(dims).copy()
        elif " = " in line:
            key, _, value = line.partition(" = ")
            meta[key.strip()] = _parse_value(value.strip())
        else:
            raise FormatError(f"unparseable manifest line {lineno}: {raw!r}")
    if meta.get("schema") != SCHEMA_VERSION:
        raise FormatError(f"unsupported schema {meta.get('schema')!r}")
    return arrays, meta


# ---------------------------------------------------------------------------
# datasets


def write_dataset(path, dataset: Dataset) -> None:
    meta = {"kind": "dataset"}
    meta.update(dataset.metadata)
    write_arrays(
        path,
        {
            "inputs": dataset.inputs,
            "outputs": dataset.outputs,
            "input_grid": dataset.input_grid,
            "output_grid": dataset.output_grid,
        },
        meta,
    )


def read_dataset(path) -> Dataset:
    arrays, meta = read_arrays(path)
    if meta.pop("kind", None) != "dataset":
        raise FormatError(f"{path} is not a dataset container")
    meta.pop("schema", None)
    try:
        return Dataset(
            inputs=arrays["inputs"],
            outputs=arrays["outputs"],
            input_grid=arrays["input_grid"],
            output_grid=arrays["output_grid"],
            metadata=meta,
        )
    except KeyError as exc:
        raise FormatError(f"dataset container missing array {exc}") from exc


# ---------------------------------------------------------------------------
# trained operators


def write_operator(path, op: TrainedOperator) -> None:
    meta = {"kind": "operator"}
    meta.update(op.config)
    meta["split_seed"] = op.split.seed
    nodes = op.mesh.nodes
    # a 1D mesh stores nodes sorted; persist them in original split order
    if nodes.ndim == 1:
        nodes = nodes[np.argsort(op.mesh.order)]
    arrays = {
        "omega": op.model.weights.omega,
        "input_grid": np.asarray(op.input_grid),
        "train_nodes": nodes,
        "train_idx": op.split.train_idx.astype(float),
        "valid_idx": op.split.valid_idx.astype(float),
    }
    coeff = op.model.coefficients
    if np.iscomplexobj(coeff):
        arrays["coefficients_re"] = coeff.real
        arrays["coefficients_im"] = coeff.imag
    else:
        arrays["coefficients"] = coeff
    write_arrays(path, arrays, meta)


def read_operator(path) -> TrainedOperator:
    arrays, meta = read_arrays(path)
    if meta.pop("kind", None) != "operator":
        raise FormatError(f"{path} is not an operator container")
    nu = meta["nu"]
    params = StudentTParams(nu=INF if nu == "inf" else float(nu),
                            sigma=float(meta["sigma"]))
    weights = FeatureWeights(omega=arrays["omega"], params=params,
                             seed=meta.get("seed"))
    reg = RegularizationSpec(alpha=float(meta["alpha"]), p=float(meta["p"]))
    if "coefficients" in arrays:
        coeff = arrays["coefficients"]
    else:
        coeff = arrays["coefficients_re"] + 1j * arrays["coefficients_im"]
    model = FeatureModel(weights=weights, coefficients=coeff, reg=reg)
    split = GridSplit(
        train_idx=arrays["train_idx"].astype(int),
        valid_idx=arrays["valid_idx"].astype(int),
        seed=int(meta["split_seed"]),
    )
    mesh = _build_recovery_mesh(arrays["train_nodes"])
    config = {k: meta[k]
              for k in ("nu", "sigma", "n_features", "alpha", "p", "seed",
                        "coefficient_field")
              if k in meta}
    return TrainedOperator(model=model, mesh=mesh,
                           input_grid=arrays["input_grid"], split=split,
                           config=config)


# ---------------------------------------------------------------------------
# meshes


def write_mesh(path, mesh) -> None:
    """Text mesh format: a `nodes <count> <dim>` block of coordinate lines,
    then (2D only) a `triangles <count>` block of index triples."""
    nodes = np.atleast_2d(np.asarray(mesh.nodes, dtype=float).T).T
    lines = [f"nodes {nodes.shape[0]} {nodes.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in nodes]
    triangles = getattr(mesh, "triangles", None)
    if triangles is not None:
        lines.append(f"triangles {triangles.shape[0]}")
        lines += [" ".join(str(i) for i in tri) for tri in triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    """Rebuild a mesh from the text format (validates against the file's
    own triangle list when present)."""
    from .fem import build_mesh_1d, triangulate_2d

    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("nodes "):
        raise FormatError(f"{path}: expected a nodes header")
    _, count, dim = lines[0].split()
    count, dim = int(count), int(dim)
    rows = [tuple(float(x) for x in ln.split()) for ln in lines[1:1 + count]]
    if len(rows) != count or any(len(r) != dim for r in rows):
        raise FormatError(f"{path}: malformed node block")
    nodes = np.asarray(rows)
    if dim == 1:
        return build_mesh_1d(nodes.ravel())
    if dim != 2:
        raise FormatError(f"{path}: unsupported node dimension {dim}")
    return triangulate_2d(nodes)


# ---------------------------------------------------------------------------
# reports


def write_report(path, header: list[str], rows) -> None:
    """CSV report with a fixed header row; values are written verbatim."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def read_report(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise FormatError(f"empty report {path}")
    return rows[0], rows[1:]
