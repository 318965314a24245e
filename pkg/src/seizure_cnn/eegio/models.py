"""Model persistence: ``<name>.manifest.json`` plus ``<name>.weights``.

The weights file is every stored array (trainables and batch-norm running
statistics) as little-endian float32, concatenated in manifest order. The
manifest carries a content hash over the spec, the parameter table and the
blob digest; a mismatch on load is reported as a data error.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from ..arch import assemble
from ..errors import DataError, writing
from ..logging import logger
from ..nncore.network import Network
from ..provenance import hash_data
from ..schemas import ModelManifest, ParameterEntry
from ..shallow import BaselineModel

PathLike = Union[str, Path]
TrainedModel = Union[Network, BaselineModel]

_SUFFIXES = (".manifest.json", ".weights")


def model_paths(path: PathLike) -> tuple[Path, Path]:
    p = Path(path)
    name = p.name
    for suffix in _SUFFIXES:
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return p.parent / f"{name}.manifest.json", p.parent / f"{name}.weights"


def _entries(model: TrainedModel) -> list[tuple[int, str, np.ndarray]]:
    if isinstance(model, Network):
        return model.state()
    return [
        (0, "mean", model.mean),
        (0, "scale", model.scale),
        (0, "weights", model.weights),
        (0, "bias", np.array([model.bias])),
    ]


def _content_hash(manifest: ModelManifest, blob: bytes) -> str:
    fields = manifest.model_dump(mode="json", exclude={"content_hash"})
    return hash_data({**fields, "weights_sha256": hashlib.sha256(blob).hexdigest()})


def save_model(model: TrainedModel, path: PathLike) -> tuple[Path, Path]:
    """Write manifest and weights; values are stored as float32."""
    manifest_path, weights_path = model_paths(path)
    entries = _entries(model)
    blob = b"".join(np.ascontiguousarray(arr, dtype="<f4").tobytes() for _, _, arr in entries)
    parameters = [ParameterEntry(layer=i, name=key, shape=list(arr.shape)) for i, key, arr in entries]
    if isinstance(model, Network):
        fields = {
            "kind": "cnn",
            "arch": model.name,
            "network": model.spec.model_dump(mode="json"),
            "best_epoch": model.best_epoch,
        }
    else:
        fields = {
            "kind": "logistic",
            "arch": "baseline",
            "feature_names": list(model.feature_names),
            "l2": model.l2,
        }
    fields["parameters"] = [p.model_dump() for p in parameters]
    manifest = ModelManifest.model_validate({**fields, "content_hash": "0" * 64})
    manifest = manifest.model_copy(update={"content_hash": _content_hash(manifest, blob)})

    with writing(manifest_path):
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        weights_path.write_bytes(blob)
        manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("saved %s model to %s (%d values)", fields["arch"], manifest_path, len(blob) // 4)
    return manifest_path, weights_path


def read_manifest(path: PathLike) -> ModelManifest:
    manifest_path, _ = model_paths(path)
    try:
        return ModelManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read manifest {manifest_path}: {e}", details={"path": str(manifest_path)})
    except PydanticValidationError as e:
        raise DataError(
            f"invalid manifest {manifest_path}",
            details={"path": str(manifest_path), "errors": e.errors(include_url=False, include_context=False)},
        )


def load_model(path: PathLike) -> TrainedModel:
    """Load a CNN or baseline model saved by ``save_model``.

    Raises:
        DataError: unreadable files, blob size not matching the parameter
            table, hash mismatch, or a parameter table that disagrees with the
            network spec
    """
    manifest = read_manifest(path)
    _, weights_path = model_paths(path)
    try:
        blob = weights_path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read weights {weights_path}: {e}", details={"path": str(weights_path)})
    expected = sum(p.size for p in manifest.parameters)
    if len(blob) != 4 * expected:
        raise DataError(
            f"weights {weights_path.name} hold {len(blob) / 4:g} values, manifest lists {expected}",
            details={"path": str(weights_path), "bytes": len(blob), "expected_values": expected},
        )
    if _content_hash(manifest, blob) != manifest.content_hash:
        raise DataError("model content hash mismatch", details={"path": str(weights_path)})

    values = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    arrays, offset = [], 0
    for p in manifest.parameters:
        arrays.append(values[offset:offset + p.size].reshape(p.shape))
        offset += p.size

    if manifest.kind == "logistic":
        by_name = {p.name: a for p, a in zip(manifest.parameters, arrays)}
        return BaselineModel(
            mean=by_name["mean"],
            scale=by_name["scale"],
            weights=by_name["weights"],
            bias=float(by_name["bias"][0]),
            l2=float(manifest.l2 or 0.0),
            feature_names=tuple(manifest.feature_names),
        )

    network = assemble(manifest.network, seed=0)
    layout = [(i, key, list(arr.shape)) for i, key, arr in network.state()]
    listed = [(p.layer, p.name, p.shape) for p in manifest.parameters]
    if layout != listed:
        raise DataError(
            "manifest parameter table does not match the network spec",
            details={"path": str(weights_path)},
        )
    network.restore(arrays)
    network.best_epoch = manifest.best_epoch
    return network
