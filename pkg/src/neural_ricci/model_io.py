"""Model (de)serialization.

Binary container (default): one line of compact JSON (architecture header,
format version, seed), then the parameter blocks as little-endian float64 in
layer order (weight then bias per trainable layer), then a little-endian
CRC32 of everything before it. A `.json` path selects the pure-JSON variant
(parameters as nested lists) for interchange; both round-trip bit-exactly.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

import numpy as np

from .errors import ModelChecksumError, ModelFormatError, ModelVersionError
from .nn import LayerSpec, ModelSpec

FORMAT_NAME = "neural-ricci-model"
FORMAT_VERSION = 1


def _header(model: ModelSpec) -> dict:
    layers = []
    for layer in model.layers:
        entry = {"kind": layer.kind}
        if layer.kind == "dense":
            entry["shape"] = list(layer.weight.shape)
        elif layer.kind == "conv2d":
            entry["shape"] = list(layer.weight.shape)
            entry["stride"] = layer.stride
            entry["in_shape"] = list(layer.in_shape)
        else:
            entry["pool"] = layer.pool
            entry["in_shape"] = list(layer.in_shape)
        layers.append(entry)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "activation": model.activation,
        "input_dims": model.input_dims,
        "output_dims": model.output_dims,
        "seed": model.seed,
        "layers": layers,
    }


def _layers_from_header(header: dict, params: list[np.ndarray] | None) -> list[LayerSpec]:
    layers = []
    pos = 0
    for entry in header["layers"]:
        kind = entry["kind"]
        if kind == "avgpool2d":
            layers.append(LayerSpec(kind=kind, pool=entry["pool"],
                                    in_shape=tuple(entry["in_shape"])))
            continue
        shape = tuple(entry["shape"])
        if params is None:
            raise ModelFormatError("missing parameter payload")
        weight, bias = params[pos], params[pos + 1]
        pos += 2
        weight = weight.reshape(shape)
        if kind == "dense":
            layers.append(LayerSpec(kind=kind, weight=weight, bias=bias))
        else:
            layers.append(LayerSpec(kind=kind, weight=weight, bias=bias,
                                    stride=entry["stride"],
                                    in_shape=tuple(entry["in_shape"])))
    return layers


def _check_header(header: dict):
    if header.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a model file (bad format field)")
    if header.get("version") != FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format version {header.get('version')!r}")


def save_model(model: ModelSpec, path) -> None:
    path = Path(path)
    model.validate()
    if path.suffix == ".json":
        doc = _header(model)
        for entry, layer in zip(doc["layers"], model.layers):
            if layer.weight is not None:
                entry["weight"] = layer.weight.tolist()
                entry["bias"] = layer.bias.tolist()
        path.write_text(json.dumps(doc, indent=1, sort_keys=True))
        return
    head = json.dumps(_header(model), sort_keys=True).encode() + b"\n"
    blocks = []
    for layer in model.layers:
        if layer.weight is None:
            continue
        blocks.append(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
        blocks.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    payload = head + b"".join(blocks)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    path.write_bytes(payload + crc.to_bytes(4, "little"))


def load_model(path) -> ModelSpec:
    path = Path(path)
    if path.suffix == ".json":
        try:
            doc = json.loads(path.read_text())
        except (ValueError, OSError) as exc:
            raise ModelFormatError(f"cannot parse model JSON: {exc}") from exc
        _check_header(doc)
        params = []
        for entry in doc["layers"]:
            if entry["kind"] == "avgpool2d":
                continue
            if "weight" not in entry:
                raise ModelFormatError("JSON model entry missing weight")
            params.append(np.asarray(entry["weight"], dtype=np.float64).ravel())
            params.append(np.asarray(entry["bias"], dtype=np.float64))
        model = ModelSpec(layers=_layers_from_header(doc, params),
                          activation=doc["activation"],
                          input_dims=doc["input_dims"],
                          output_dims=doc["output_dims"],
                          seed=doc.get("seed"))
        model.validate()
        return model

    raw = path.read_bytes()
    if len(raw) < 6 or b"\n" not in raw:
        raise ModelFormatError(f"truncated model file {path.name}")
    crc_stored = int.from_bytes(raw[-4:], "little")
    payload = raw[:-4]
    nl = payload.index(b"\n")
    try:
        header = json.loads(payload[:nl].decode())
    except ValueError as exc:
        raise ModelFormatError(f"cannot parse model header: {exc}") from exc
    _check_header(header)
    expected = 0
    shapes = []
    for entry in header["layers"]:
        if entry["kind"] == "avgpool2d":
            continue
        shape = tuple(entry["shape"])
        nw = int(np.prod(shape))
        nb = shape[0]
        shapes.append((nw, nb))
        expected += (nw + nb) * 8
    body = payload[nl + 1:]
    if len(body) != expected:
        raise ModelFormatError(
            f"truncated model file {path.name}: expected {expected} parameter "
            f"bytes, found {len(body)}")
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise ModelChecksumError(f"checksum mismatch in {path.name}")
    params = []
    pos = 0
    for nw, nb in shapes:
        params.append(np.frombuffer(body, dtype="<f8", count=nw, offset=pos).copy())
        pos += nw * 8
        params.append(np.frombuffer(body, dtype="<f8", count=nb, offset=pos).copy())
        pos += nb * 8
    model = ModelSpec(layers=_layers_from_header(header, params),
                      activation=header["activation"],
                      input_dims=header["input_dims"],
                      output_dims=header["output_dims"],
                      seed=header.get("seed"))
    model.validate()
    return model
