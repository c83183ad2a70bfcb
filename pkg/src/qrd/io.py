"""JSON encodings for states, channels, observables and regions.

Complex matrices are nested row-major lists whose entries are ``[re, im]``
pairs. A state file holds ``{"dims", "matrix"}`` (or ``"vector"`` for a
pure state), a channel ``{"d_in", "d_out", "kraus"}`` and an observable
``{"dims", "delta"}``.
"""

from __future__ import annotations

import json

import numpy as np

from .distortion import DistortionObservable
from .qchannel import QuantumChannel
from .qstate import DensityMatrix, PureState

__all__ = [
    "encode_matrix",
    "decode_matrix",
    "state_to_json",
    "state_from_json",
    "channel_to_json",
    "channel_from_json",
    "observable_to_json",
    "observable_from_json",
    "load_json",
    "dump_json",
]


def encode_matrix(m) -> list:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [encode_matrix(row) for row in a]


def decode_matrix(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim < 2 or a.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def state_to_json(state) -> dict:
    if isinstance(state, PureState):
        return {"dims": list(state.dims), "vector": encode_matrix(state.vector)}
    return {"dims": list(state.dims), "matrix": encode_matrix(state.matrix)}


def state_from_json(obj: dict):
    try:
        dims = obj.get("dims")
        if "vector" in obj:
            return PureState(decode_matrix(obj["vector"]), dims)
        return DensityMatrix(decode_matrix(obj["matrix"]), dims)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed state: {exc}") from exc


def channel_to_json(ch: QuantumChannel) -> dict:
    return {"d_in": ch.d_in, "d_out": ch.d_out, "kraus": [encode_matrix(k) for k in ch.kraus]}


def channel_from_json(obj: dict) -> QuantumChannel:
    try:
        kraus = [decode_matrix(k) for k in obj["kraus"]]
        ch = QuantumChannel(kraus)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed channel: {exc}") from exc
    if (ch.d_in, ch.d_out) != (obj.get("d_in", ch.d_in), obj.get("d_out", ch.d_out)):
        raise ValueError("declared channel dimensions do not match the Kraus operators")
    return ch


def observable_to_json(obs: DistortionObservable) -> dict:
    return {"dims": list(obs.dims), "delta": encode_matrix(obs.delta)}


def observable_from_json(obj: dict) -> DistortionObservable:
    try:
        return DistortionObservable(decode_matrix(obj["delta"]), tuple(obj["dims"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed observable: {exc}") from exc


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
