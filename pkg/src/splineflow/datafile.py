"""Self-describing trajectory dataset files.

Binary layout: an 8-byte magic, a little-endian uint32 header length, a
canonical-JSON header, then raw little-endian float64 arrays. Per split
and per trajectory the payload holds the normalized times followed by the
snapshot block in time-major, component-minor order. A JSON-only mode
(nested lists, same header fields) exists for small datasets and
debugging; `read_dataset` dispatches on the leading bytes.

Writes are canonical (sorted keys, fixed separators), so write -> read ->
write round-trips byte-identically.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataFormatError, InvalidArgumentError
from .systems import TrajectorySet
from .timegrid import TimeGrid

MAGIC = b"SFTRAJ1\n"
FORMAT_VERSION = 1


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _header(splits: dict, generator_meta: dict, mode: str) -> dict:
    first = next(iter(splits.values()))
    for name, ts in splits.items():
        if ts.state_dim != first.state_dim or ts.system_tag != first.system_tag:
            raise InvalidArgumentError(f"split {name!r} disagrees on system or dims")
        if ts.raw_horizon != first.raw_horizon:
            raise InvalidArgumentError(f"split {name!r} disagrees on the horizon")
    return {
        "format_version": FORMAT_VERSION,
        "mode": mode,
        "system": first.system_tag,
        "state_dim": first.state_dim,
        "raw_horizon": first.raw_horizon,
        "generator": generator_meta,
        "splits": [
            {"name": name, "n_times": [len(g) for g in ts.grids]}
            for name, ts in splits.items()
        ],
    }


def write_dataset(path, splits: dict, generator_meta: dict | None = None, mode: str = "binary") -> None:
    """Write named TrajectorySet splits plus metadata to one file."""
    if not splits:
        raise InvalidArgumentError("need at least one split to write")
    if mode not in ("binary", "json"):
        raise InvalidArgumentError("mode must be 'binary' or 'json'")
    header = _header(splits, generator_meta or {}, mode)

    if mode == "json":
        payload = dict(header)
        payload["data"] = {
            name: [
                {"times": g.times.tolist(), "states": u.tolist()}
                for g, u in zip(ts.grids, ts.states)
            ]
            for name, ts in splits.items()
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_canonical_json(payload))
        return

    header_bytes = _canonical_json(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(len(header_bytes)).tobytes())
        fh.write(header_bytes)
        for ts in splits.values():
            for g, u in zip(ts.grids, ts.states):
                fh.write(np.ascontiguousarray(g.times, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_dataset(path):
    """Read a dataset file; returns (splits dict, header metadata dict)."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if head == MAGIC:
            return _read_binary(fh, path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise DataFormatError(f"{path}: neither a binary nor a JSON dataset") from exc
    return _read_json(payload, path)


def _check_header(header: dict, path) -> None:
    if header.get("format_version") != FORMAT_VERSION:
        raise DataFormatError(
            f"{path}: unsupported dataset version {header.get('format_version')}"
        )
    for key in ("system", "state_dim", "raw_horizon", "splits"):
        if key not in header:
            raise DataFormatError(f"{path}: header is missing {key!r}")


def _build_split(header: dict, blocks) -> TrajectorySet:
    grids = [
        TimeGrid(times=times, raw_horizon=float(header["raw_horizon"]))
        for times, _ in blocks
    ]
    return TrajectorySet(
        grids=grids,
        states=[states for _, states in blocks],
        state_dim=int(header["state_dim"]),
        system_tag=str(header["system"]),
        raw_horizon=float(header["raw_horizon"]),
    )


def _read_binary(fh, path):
    raw_len = fh.read(4)
    if len(raw_len) != 4:
        raise DataFormatError(f"{path}: truncated header length")
    header_len = int(np.frombuffer(raw_len, dtype="<u4")[0])
    try:
        header = json.loads(fh.read(header_len).decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"{path}: corrupt header") from exc
    _check_header(header, path)
    d = int(header["state_dim"])
    splits = {}
    for entry in header["splits"]:
        blocks = []
        for n in entry["n_times"]:
            need = n * (1 + d) * 8
            buf = fh.read(need)
            if len(buf) != need:
                raise DataFormatError(f"{path}: truncated payload")
            times = np.frombuffer(buf[: n * 8], dtype="<f8").copy()
            states = (
                np.frombuffer(buf[n * 8 :], dtype="<f8").reshape(n, d).copy()
            )
            blocks.append((times, states))
        splits[entry["name"]] = _build_split(header, blocks)
    if fh.read(1):
        raise DataFormatError(f"{path}: trailing bytes after payload")
    return splits, header


def _read_json(payload: dict, path):
    _check_header(payload, path)
    if payload.get("mode") != "json":
        raise DataFormatError(f"{path}: JSON file does not declare json mode")
    data = payload.get("data", {})
    splits = {}
    for entry in payload["splits"]:
        name = entry["name"]
        if name not in data:
            raise DataFormatError(f"{path}: split {name!r} missing from data")
        blocks = [
            (
                np.asarray(traj["times"], dtype=np.float64),
                np.asarray(traj["states"], dtype=np.float64),
            )
            for traj in data[name]
        ]
        splits[name] = _build_split(payload, blocks)
    header = {k: v for k, v in payload.items() if k != "data"}
    return splits, header
