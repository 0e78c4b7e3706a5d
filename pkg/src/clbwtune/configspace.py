"""Kernel configuration space and device descriptions.

A kernel configuration is the 4-tuple (increment type, vector width, local
work size, number of workgroups).  The full space has 2 x 5 x 10 x 19 = 1900
points; devices with a smaller work-group limit drop whole local-size buckets.
"""

from __future__ import annotations

import csv
import enum
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

VECTOR_WIDTHS = (1, 2, 4, 8, 16)
LOCAL_SIZES = tuple(2**k for k in range(10))  # 1 .. 512
_WORKGROUP_SUPPLEMENT = (48, 80, 96, 112, 160, 192, 224, 384)
WORKGROUP_COUNTS = tuple(sorted({2**k for k in range(11)} | set(_WORKGROUP_SUPPLEMENT)))

GB = 1e9


class IncrementType(enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"

    @property
    def letter(self) -> str:
        return self.value[0]

    @classmethod
    def from_letter(cls, letter: str) -> "IncrementType":
        for inc in cls:
            if inc.letter == letter:
                return inc
        raise ValueError(f"unknown increment letter {letter!r} (expected 'g' or 'l')")


# Global sorts before Local in canonical order.
_INCREMENT_ORDER = {IncrementType.GLOBAL: 0, IncrementType.LOCAL: 1}


class DeviceClass(enum.Enum):
    CPU = "CPU"
    GPU = "GPU"
    ACCELERATOR = "Accelerator"

    @property
    def heuristic_class(self) -> "DeviceClass":
        """Accelerators (Xeon Phi style) are grouped with CPUs for heuristics."""
        return DeviceClass.CPU if self is DeviceClass.ACCELERATOR else self

    @classmethod
    def parse(cls, text: str) -> "DeviceClass":
        key = text.strip().lower()
        for dc in cls:
            if dc.value.lower() == key:
                return dc
        raise ValueError(f"unknown device class {text!r}")


@dataclass(frozen=True, order=False)
class KernelConfig:
    increment: IncrementType
    vector_width: int
    local_size: int
    num_workgroups: int

    def __post_init__(self):
        if not isinstance(self.increment, IncrementType):
            raise ValueError(f"increment must be an IncrementType, got {self.increment!r}")
        if self.vector_width not in VECTOR_WIDTHS:
            raise ValueError(f"vector width {self.vector_width} not in {VECTOR_WIDTHS}")
        if self.local_size not in LOCAL_SIZES:
            raise ValueError(f"local size {self.local_size} is not a power of two in [1, 512]")
        if self.num_workgroups not in WORKGROUP_COUNTS:
            raise ValueError(f"workgroup count {self.num_workgroups} is not admissible")

    @property
    def global_size(self) -> int:
        return self.local_size * self.num_workgroups

    @property
    def key(self) -> str:
        return config_id(self)

    def sort_key(self) -> tuple:
        return (_INCREMENT_ORDER[self.increment], self.vector_width,
                self.local_size, self.num_workgroups)

    def __str__(self) -> str:
        return config_id(self)


def admissible_workgroup_counts() -> list[int]:
    return list(WORKGROUP_COUNTS)


def enumerate_configs(max_local_size: int = 512) -> list[KernelConfig]:
    """All admissible configurations with ``local_size <= max_local_size``.

    Order is canonical: increment (Global first), then vector width, local
    size and workgroup count, each ascending.
    """
    if max_local_size < 1:
        raise ValueError("max_local_size must be >= 1")
    locals_ = [ls for ls in LOCAL_SIZES if ls <= max_local_size]
    return [
        KernelConfig(inc, w, ls, g)
        for inc, w, ls, g in itertools.product(
            (IncrementType.GLOBAL, IncrementType.LOCAL), VECTOR_WIDTHS, locals_, WORKGROUP_COUNTS)
    ]


def config_id(config: KernelConfig) -> str:
    return (f"{config.increment.letter}/v{config.vector_width}"
            f"/l{config.local_size}/w{config.num_workgroups}")


_KEY_RE = re.compile(r"^([gl])/v(\d+)/l(\d+)/w(\d+)$")


def parse_config_id(key: str) -> KernelConfig:
    m = _KEY_RE.match(key.strip())
    if m is None:
        raise ValueError(f"malformed config id {key!r}; expected e.g. 'g/v1/l128/w80'")
    inc, w, ls, g = m.groups()
    try:
        return KernelConfig(IncrementType.from_letter(inc), int(w), int(ls), int(g))
    except ValueError as exc:
        raise ValueError(f"invalid config id {key!r}: {exc}") from None


@dataclass(frozen=True)
class DeviceSpec:
    """Identity and capability limits of one device.

    ``peak_bandwidth`` is in bytes/second and has to be supplied by the user;
    no runtime API reports the theoretical peak.
    """

    name: str
    device_class: DeviceClass
    max_local_size: int
    peak_bandwidth: float
    supports_fp64: bool = True
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.peak_bandwidth <= 0:
            raise ValueError(f"{self.name}: peak bandwidth must be positive")
        if self.max_local_size < 1:
            raise ValueError(f"{self.name}: max_local_size must be >= 1")

    def configs(self) -> list[KernelConfig]:
        return enumerate_configs(self.max_local_size)


# Device spec files: one comma-separated record per line,
#   name, class, max_local_size, peak_GB/s, fp64[, key=value ...]
# '#' starts a comment.  Extra key=value fields are kept in DeviceSpec.extra
# (used e.g. for simulator profiles or OpenCL device matching).

_TRUE = {"yes", "true", "1", "y", "fp64"}
_FALSE = {"no", "false", "0", "n", "fp32"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"cannot read {text!r} as a yes/no flag")


def parse_device_line(line: str, where: str = "<string>") -> DeviceSpec:
    fields = next(csv.reader([line], skipinitialspace=True))
    fields = [f.strip() for f in fields]
    if len(fields) < 5:
        raise ValueError(f"{where}: expected at least 5 fields, got {len(fields)}: {line!r}")
    name, cls, max_ls, peak, fp64 = fields[:5]
    if "." not in peak:
        raise ValueError(f"{where}: peak bandwidth {peak!r} must be written with a decimal point (GB/s)")
    extra = {}
    for item in fields[5:]:
        if "=" not in item:
            raise ValueError(f"{where}: extra field {item!r} is not key=value")
        k, v = item.split("=", 1)
        extra[k.strip()] = v.strip()
    return DeviceSpec(
        name=name,
        device_class=DeviceClass.parse(cls),
        max_local_size=int(max_ls),
        peak_bandwidth=float(peak) * GB,
        supports_fp64=_parse_bool(fp64),
        extra=extra,
    )


def parse_device_specs(lines: Iterable[str], source: str = "<string>") -> dict[str, DeviceSpec]:
    devices: dict[str, DeviceSpec] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        spec = parse_device_line(line, f"{source}:{lineno}")
        if spec.name in devices:
            raise ValueError(f"{source}:{lineno}: duplicate device name {spec.name!r}")
        devices[spec.name] = spec
    return devices


def load_device_specs(path: str | Path) -> dict[str, DeviceSpec]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_device_specs(fh, str(path))


def bundled_device_spec_path() -> Path:
    return Path(__file__).with_name("data") / "devices.txt"
