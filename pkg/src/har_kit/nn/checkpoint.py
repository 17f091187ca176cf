"""Versioned model checkpoints.

A checkpoint stores one or more named model parts (layer specs plus
parameter tensors), optional optimizer state, RNG states for stochastic
layers, and free-form metadata (task kind, epoch, config hash, seed).
Files are byte-stable: identical runs write identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from har_kit.errors import DataError
from har_kit.nn.layers import layer_from_spec
from har_kit.nn.model import Sequential
from har_kit.serialize import read_header, savez_stable

CHECKPOINT_FORMAT = "har-kit.checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, parts: dict[str, Sequential], meta: dict,
                    optimizer=None, extra_state: dict | None = None) -> None:
    """Write parts plus metadata; ``meta`` should carry ``task``/provenance."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "meta": dict(meta),
        "parts": {
            name: {
                "specs": part.specs(),
                "input_shape": list(part.input_shape),
                "rng_states": part.rng_states(),
            }
            for name, part in parts.items()
        },
        "optimizer": None,
        "extra_state": extra_state or {},
    }
    arrays = {}
    for name, part in parts.items():
        for pname, arr in part.state_arrays().items():
            arrays[f"part/{name}/{pname}"] = arr
    if optimizer is not None:
        header["optimizer"] = {
            "kind": optimizer.kind,
            "t": optimizer.t,
            "lr": optimizer.lr,
            "weight_decay": optimizer.weight_decay,
        }
        for sname, arr in optimizer.state_arrays().items():
            arrays[f"opt/{sname}"] = arr
    savez_stable(path, arrays, header=header)


@dataclass
class Checkpoint:
    meta: dict
    part_specs: dict[str, dict]
    part_arrays: dict[str, dict[str, np.ndarray]]
    optimizer: dict | None
    optimizer_arrays: dict[str, np.ndarray]
    extra_state: dict

    def build_part(self, name: str, dtype=np.float32) -> Sequential:
        """Reconstruct one named part with parameters and RNG state restored."""
        if name not in self.part_specs:
            raise DataError(f"checkpoint has no part {name!r} "
                            f"(has {sorted(self.part_specs)})")
        info = self.part_specs[name]
        layers = [layer_from_spec(spec, dtype=dtype) for spec in info["specs"]]
        part = Sequential(layers, input_shape=info["input_shape"], dtype=dtype)
        part.load_state_arrays(self.part_arrays[name])
        part.set_rng_states(_rng_states_from_json(info.get("rng_states", {})))
        return part

    def load_into(self, name: str, target: Sequential, strict: bool = False):
        """Copy matching parameters of part ``name`` into ``target``.

        Non-strict mode copies only parameters present in both, which is
        how pretext encoder weights transfer into a classifier encoder
        whose padding or pooling differs (parameter shapes are shared
        across those variants).
        """
        target.load_state_arrays(self.part_arrays[name], strict=strict)


def _rng_states_from_json(states: dict) -> dict:
    # json round-trips PCG64 state dicts losslessly apart from int width;
    # numpy accepts plain ints, so nothing to convert.
    return states


def load_checkpoint(path) -> Checkpoint:
    header, arrays = read_header(path, CHECKPOINT_FORMAT, CHECKPOINT_VERSION)
    with arrays:
        part_arrays: dict[str, dict[str, np.ndarray]] = {n: {} for n in header["parts"]}
        optimizer_arrays: dict[str, np.ndarray] = {}
        for key in arrays.files:
            if key == "header":
                continue
            if key.startswith("part/"):
                _, part_name, pname = key.split("/", 2)
                part_arrays[part_name][pname] = arrays[key]
            elif key.startswith("opt/"):
                optimizer_arrays[key[len("opt/"):]] = arrays[key]
    return Checkpoint(
        meta=header["meta"],
        part_specs=header["parts"],
        part_arrays=part_arrays,
        optimizer=header.get("optimizer"),
        optimizer_arrays=optimizer_arrays,
        extra_state=header.get("extra_state", {}),
    )
