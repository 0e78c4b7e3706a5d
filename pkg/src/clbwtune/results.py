"""Benchmark records and result sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator

from .configspace import KernelConfig, config_id
from .kernelgen import OpKind, Precision


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class BenchmarkRecord:
    device_name: str
    op_kind: OpKind
    n: int
    m: int | None
    config: KernelConfig
    bytes_moved: int
    elapsed: float | None
    bandwidth: float | None
    relative_bw: float | None
    verified: bool
    repetitions: int
    timestamp: datetime = field(default_factory=utcnow)
    precision: Precision = Precision.FP64
    error: str | None = None

    @property
    def config_key(self) -> str:
        return config_id(self.config)


class ResultSet:
    """Immutable collection of records plus free-form provenance metadata."""

    def __init__(self, records: Iterable[BenchmarkRecord] = (), metadata: dict | None = None):
        self._records = tuple(records)
        self.metadata = dict(metadata or {})

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[BenchmarkRecord]:
        return iter(self._records)

    def __getitem__(self, i):
        return self._records[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResultSet):
            return NotImplemented
        return self._records == other._records

    def __repr__(self) -> str:
        return f"ResultSet({len(self)} records, devices={self.devices}, ops={[o.value for o in self.ops]})"

    @property
    def records(self) -> tuple[BenchmarkRecord, ...]:
        return self._records

    @property
    def devices(self) -> list[str]:
        return sorted({r.device_name for r in self._records})

    @property
    def ops(self) -> list[OpKind]:
        seen = {r.op_kind for r in self._records}
        return [k for k in OpKind if k in seen]

    @property
    def precisions(self) -> list[Precision]:
        seen = {r.precision for r in self._records}
        return [p for p in Precision if p in seen]

    def verified(self) -> "ResultSet":
        return ResultSet((r for r in self._records if r.verified), self.metadata)

    def select(self, device: str | None = None, op: OpKind | str | None = None) -> "ResultSet":
        kind = OpKind.parse(op) if op is not None else None
        recs = (r for r in self._records
                if (device is None or r.device_name == device)
                and (kind is None or r.op_kind is kind))
        return ResultSet(recs, self.metadata)

    def by_config(self) -> dict[str, BenchmarkRecord]:
        """Verified records keyed by config id (last one wins on duplicates)."""
        return {r.config_key: r for r in self._records if r.verified}

    def union(self, other: "ResultSet") -> "ResultSet":
        meta = {**self.metadata, **other.metadata}
        return ResultSet(self._records + other._records, meta)

    def with_metadata(self, **kw) -> "ResultSet":
        return ResultSet(self._records, {**self.metadata, **kw})


def failed_record(device_name: str, op_kind: OpKind, n: int, m: int | None,
                  config: KernelConfig, nbytes: int, precision: Precision,
                  repetitions: int, error: str) -> BenchmarkRecord:
    return BenchmarkRecord(device_name, op_kind, n, m, config, nbytes, None, None, None,
                           False, repetitions, utcnow(), precision, error)

