"""JSON encoding of matrices, channels, subspaces and superchannels.

Complex numbers are ``[re, im]`` pairs and matrices are flat row-major
lists of such pairs, so values round-trip exactly through ``json``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .channels import QuantumChannel
from .linops import Subspace


def encode_array(a) -> list:
    flat = np.asarray(a, dtype=complex).reshape(-1)
    # adding 0.0 turns -0.0 into 0.0
    return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in flat]


def decode_array(data, shape: tuple[int, ...], name: str = "array") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}: entries must be [re, im] number pairs") from exc
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name}: entries must be [re, im] number pairs")
    if arr.shape[0] != int(np.prod(shape)):
        raise ValueError(f"{name}: expected {int(np.prod(shape))} entries, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


def _positive_int(obj: dict, key: str, default: Optional[int] = None) -> int:
    val = obj.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise ValueError(f"{key}: must be a positive integer")
    return val


def channel_to_json(t: QuantumChannel, vacuum=None) -> dict:
    out: dict[str, Any] = {}
    if t.dim_in == t.dim_out:
        out["dim"] = t.dim_in
    else:
        out["dim_in"], out["dim_out"] = t.dim_in, t.dim_out
    out["kraus"] = [encode_array(k) for k in t.kraus]
    if t.operation:
        out["operation"] = True
    if vacuum is not None:
        out["vacuum"] = encode_array(vacuum)
    return out


def channel_from_json(obj: dict) -> tuple[QuantumChannel, Optional[np.ndarray]]:
    """Parse a channel object; returns the channel and its vacuum (or ``None``).

    Raises:
        ValueError: naming the violated invariant.
    """
    if not isinstance(obj, dict):
        raise ValueError("channel: JSON root must be an object")
    if "dim" in obj:
        d_in = d_out = _positive_int(obj, "dim")
    else:
        d_in, d_out = _positive_int(obj, "dim_in"), _positive_int(obj, "dim_out")
    kraus = obj.get("kraus")
    if not isinstance(kraus, list) or not kraus:
        raise ValueError("kraus: must be a nonempty list of operators")
    ops = [decode_array(k, (d_out, d_in), f"kraus[{i}]") for i, k in enumerate(kraus)]
    ch = QuantumChannel(ops, operation=bool(obj.get("operation", False)))
    vac = obj.get("vacuum")
    v = None if vac is None else decode_array(vac, (d_in,), "vacuum")
    return ch, v


def hamiltonian_from_json(obj: dict) -> np.ndarray:
    d = _positive_int(obj, "dim")
    return decode_array(obj.get("hamiltonian"), (d, d), "hamiltonian")


def subspace_from_json(obj: dict, ambient_dim: int) -> Subspace:
    """``{"basis": [vector, ...]}`` with each vector a list of ``[re, im]`` pairs; spanning sets are allowed."""
    vecs = obj.get("basis") if isinstance(obj, dict) else None
    if not isinstance(vecs, list) or not vecs:
        raise ValueError("basis: must be a nonempty list of vectors")
    cols = [decode_array(v, (ambient_dim,), f"basis[{i}]") for i, v in enumerate(vecs)]
    return Subspace.span(np.stack(cols, axis=1))


def subspace_to_json(sub: Subspace) -> list:
    return [encode_array(sub.basis[:, j]) for j in range(sub.dim)]


def superchannel_to_json(r) -> dict:
    """``in_dim, sys_dim, anc_dim, pre, post`` plus a ``twirl`` entry for reduction superchannels.

    For a reduction superchannel ``pre`` and ``post`` are the untwirled
    composition.  The ``twirl`` entry holds the components around the
    twirled slot so that a reader can fold in the exact group average.
    """
    out = {
        "in_dim": r.in_dim,
        "sys_dim": r.sys_dim,
        "anc_dim": r.anc_dim,
        "pre": channel_to_json(r.pre),
        "post": channel_to_json(r.post),
    }
    if r.core is not None:
        c = r.core
        out["twirl"] = {
            "group_dim": None if c.group is None else c.group.dim,
            "encode": channel_to_json(c.encode),
            "embed": channel_to_json(c.embed),
            "decode": channel_to_json(c.decode),
            "readout": channel_to_json(c.readout),
        }
    return out


def strategy_to_json(d) -> dict:
    s0 = d.initial_state
    return {
        "sys_dim": d.sys_dim,
        "anc_dim": d.anc_dim,
        "steps": d.steps,
        "initial_state": {"dim": s0.shape[0], "entries": encode_array(s0)},
        "lambdas": [channel_to_json(lam) for lam in d.lambdas],
    }


def strategy_from_json(obj: dict):
    from .strategies import DiscriminationStrategy

    if not isinstance(obj, dict):
        raise ValueError("strategy: JSON root must be an object")
    init = obj.get("initial_state")
    if not isinstance(init, dict):
        raise ValueError("initial_state: must be an object with dim and entries")
    n0 = _positive_int(init, "dim")
    s0 = decode_array(init.get("entries"), (n0, n0), "initial_state")
    lams = obj.get("lambdas")
    if not isinstance(lams, list):
        raise ValueError("lambdas: must be a list of channels")
    channels = [channel_from_json(c)[0] for c in lams]
    steps = obj.get("steps")
    if not isinstance(steps, int) or steps < 0:
        raise ValueError("steps: must be a nonnegative integer")
    return DiscriminationStrategy(_positive_int(obj, "sys_dim"), _positive_int(obj, "anc_dim"), steps, s0, channels)


def load_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"json: {path} is not valid JSON ({exc.msg})") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
