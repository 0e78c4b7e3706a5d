"""Append-only line store for benchmark records.

Each line is one JSON object carrying its schema version, so store files can
be concatenated and partially written sweeps stay readable.
"""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .configspace import config_id, parse_config_id
from .kernelgen import OpKind, Precision
from .results import BenchmarkRecord, ResultSet

SCHEMA_VERSION = 1


class StoreFormatError(ValueError):
    pass


def serialize(r: BenchmarkRecord) -> str:
    obj = {
        "schema": SCHEMA_VERSION,
        "device": r.device_name,
        "op": r.op_kind.value,
        "n": r.n,
        "m": r.m,
        "precision": r.precision.value,
        "config": config_id(r.config),
        "bytes": r.bytes_moved,
        "elapsed": r.elapsed,
        "bandwidth": r.bandwidth,
        "relative_bw": r.relative_bw,
        "verified": r.verified,
        "repetitions": r.repetitions,
        "error": r.error,
        "timestamp": r.timestamp.isoformat(),
    }
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def parse(line: str) -> BenchmarkRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise StoreFormatError(f"not a JSON record: {exc}") from None
    if not isinstance(obj, dict) or obj.get("schema") != SCHEMA_VERSION:
        raise StoreFormatError(f"unsupported record schema {obj.get('schema') if isinstance(obj, dict) else obj!r}")
    try:
        ts = datetime.fromisoformat(obj["timestamp"])
        if ts.tzinfo is None:
            raise StoreFormatError("timestamp must carry a UTC offset")
        return BenchmarkRecord(
            device_name=obj["device"],
            op_kind=OpKind.parse(obj["op"]),
            n=int(obj["n"]),
            m=None if obj["m"] is None else int(obj["m"]),
            config=parse_config_id(obj["config"]),
            bytes_moved=int(obj["bytes"]),
            elapsed=obj["elapsed"],
            bandwidth=obj["bandwidth"],
            relative_bw=obj["relative_bw"],
            verified=bool(obj["verified"]),
            repetitions=int(obj["repetitions"]),
            timestamp=ts,
            precision=Precision.parse(obj["precision"]),
            error=obj["error"],
        )
    except KeyError as exc:
        raise StoreFormatError(f"record lacks field {exc}") from None


def append(path: str | Path, records: Iterable[BenchmarkRecord]) -> int:
    count = 0
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(serialize(r) + "\n")
            count += 1
    return count


def read(path: str | Path) -> ResultSet:
    path = Path(path)
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(parse(line))
            except StoreFormatError as exc:
                raise StoreFormatError(f"{path}:{lineno}: {exc}") from None
    return ResultSet(records, {"source": str(path)})


def read_many(paths: Iterable[str | Path]) -> ResultSet:
    out = ResultSet()
    sources = []
    for p in paths:
        out = out.union(read(p))
        sources.append(str(p))
    return out.with_metadata(source=",".join(sources))
