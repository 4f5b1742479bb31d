"""JSON instance and result files.

Instance::

    {"mode": "given" | "costly", "items": m, "delta": [..m..],
     "players": [{"valuations": [..m..], "budget": w}
                 | {"valuations": [..m..], "tickets": [t1, ...]}]}

Profiles are stored under ``"profile"`` (row-major ``n x m`` matrix) and
discrete assignments under ``"assignment"`` (one list of 0-based item
indices per player, one entry per ticket).  Result files written by the CLI
use the same keys, so they can be fed back as profile files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidInstance
from .model import (
    GIVEN,
    AuctionInstance,
    ContinuousBudget,
    DiscreteAssignment,
    DiscreteBudget,
    Profile,
    validate_instance,
)


def instance_from_dict(data: dict[str, Any]) -> AuctionInstance:
    """Build and validate an instance; malformed input raises :class:`InvalidInstance`."""
    try:
        players = data["players"]
        if not isinstance(players, list) or not players:
            raise InvalidInstance(["'players' must be a non-empty list"])
        m = int(data.get("items", len(players[0]["valuations"])))
        budgets = []
        rows = []
        for k, p in enumerate(players):
            row = [float(v) for v in p["valuations"]]
            if len(row) != m:
                raise InvalidInstance([f"dimension mismatch: player {k} has {len(row)} valuations for {m} items"])
            rows.append(row)
            if "tickets" in p:
                budgets.append(DiscreteBudget(tuple(float(t) for t in p["tickets"])))
            elif "budget" in p:
                budgets.append(ContinuousBudget(float(p["budget"])))
            else:
                raise InvalidInstance([f"player {k} has neither 'budget' nor 'tickets'"])
        delta = data.get("delta")
        inst = AuctionInstance(
            np.array(rows, dtype=float).reshape(len(rows), m),
            tuple(budgets),
            data.get("mode", GIVEN),
            None if delta is None else [float(d) for d in delta],
        )
    except InvalidInstance:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInstance([f"malformed instance: {exc!r}"]) from exc
    problems = validate_instance(inst)
    if problems:
        raise InvalidInstance(problems)
    return inst


def instance_to_dict(inst: AuctionInstance) -> dict[str, Any]:
    players = []
    for row, b in zip(inst.valuations, inst.budgets):
        p: dict[str, Any] = {"valuations": row.tolist()}
        if isinstance(b, DiscreteBudget):
            p["tickets"] = list(b.tickets)
        else:
            p["budget"] = b.weight
        players.append(p)
    return {"mode": inst.mode, "items": inst.m, "delta": inst.delta.tolist(), "players": players}


def load_instance(path: str | Path) -> AuctionInstance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInstance([f"cannot read instance {path}: {exc}"]) from exc
    if not isinstance(data, dict):
        raise InvalidInstance(["instance file must hold a JSON object"])
    return instance_from_dict(data)


def save_instance(inst: AuctionInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n", encoding="utf-8")


def profile_to_dict(x: Profile) -> dict[str, Any]:
    if isinstance(x, DiscreteAssignment):
        return {"assignment": [list(r) for r in x.items]}
    return {"profile": np.asarray(x, dtype=float).tolist()}


def profile_from_dict(data: dict[str, Any]) -> Profile:
    if "assignment" in data:
        return DiscreteAssignment(tuple(tuple(int(j) for j in r) for r in data["assignment"]))
    if "profile" in data:
        return np.array(data["profile"], dtype=float)
    raise ValueError("profile file needs an 'assignment' or 'profile' key")


def load_profile(path: str | Path) -> Profile:
    return profile_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_json(data: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
