"""On-disk formats: family files, bit strings, function tables, reports and run manifests."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .partitions import PartitionError, PartitionFamily
from .reports import to_jsonable

FAMILY_VERSION = 1
MANIFEST_VERSION = 1


class FormatError(ValueError):
    """Malformed input file or argument."""


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    return sha256_bytes(Path(path).read_bytes())


# --- families -----------------------------------------------------------------------


def family_to_json(fam: PartitionFamily) -> str:
    return dumps(
        {
            "version": FAMILY_VERSION,
            "v": fam.v,
            "w": fam.w,
            "u": fam.u,
            "provenance": fam.provenance,
            "strings": fam.strings.tolist(),
        }
    )


def _load_json(text: str, name: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{name}: line {exc.lineno} column {exc.colno} (offset {exc.pos}): {exc.msg}") from None


def family_from_json(text: str, name: str = "<family>") -> PartitionFamily:
    data = _load_json(text, name)
    if not isinstance(data, dict):
        raise FormatError(f"{name}: top level must be an object")
    missing = [k for k in ("version", "v", "w", "u", "strings") if k not in data]
    if missing:
        raise FormatError(f"{name}: missing field(s) {', '.join(missing)}")
    if data["version"] != FAMILY_VERSION:
        raise FormatError(f"{name}: unsupported version {data['version']!r}")
    v, w, u, strings = data["v"], data["w"], data["u"], data["strings"]
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in (v, w, u)):
        raise FormatError(f"{name}: v, w and u must be integers")
    if not isinstance(strings, list) or len(strings) != u:
        raise FormatError(f"{name}: expected {u} strings")
    for i, s in enumerate(strings):
        if not isinstance(s, list) or len(s) != w or not all(isinstance(x, int) and not isinstance(x, bool) for x in s):
            raise FormatError(f"{name}: strings[{i}] must be a list of {w} integers")
    try:
        return PartitionFamily(v, w, np.array(strings, dtype=np.int64).reshape(u, w), data.get("provenance", {"kind": "explicit"}))
    except PartitionError as exc:
        raise FormatError(f"{name}: {exc}") from None


def read_family(path: str | Path) -> PartitionFamily:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {p}: {exc.strerror}") from None
    return family_from_json(text, str(p))


# --- bit strings --------------------------------------------------------------------


def parse_hex_bits(text: str, n: int) -> list[int]:
    """Hex value read as an n-bit number whose most significant bit is x_0."""
    t = text.strip().lower()
    if t.startswith("0x"):
        t = t[2:]
    if not t:
        raise FormatError("empty hex input")
    try:
        value = int(t, 16)
    except ValueError:
        raise FormatError(f"not a hex string: {text!r}") from None
    if value >> n:
        raise FormatError(f"hex input {text!r} does not fit in n={n} bits")
    return [(value >> (n - 1 - i)) & 1 for i in range(n)]


def format_hex_bits(bits) -> str:
    n = len(bits)
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return format(value, f"0{max(1, (n + 3) // 4)}x")


def parse_index_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise FormatError(f"expected comma-separated integers, got {text!r}") from None


def read_function_table(path: str | Path, v: int, w: int) -> np.ndarray:
    """Whitespace or comma separated table with v rows and w columns; returns shape (w, v)."""
    try:
        text = Path(path).read_text(encoding="utf-8").replace(",", " ")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        table = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if table.shape != (v, w):
        raise FormatError(f"{path}: expected {v} rows of {w} values, got shape {table.shape}")
    return table.T.copy()


# --- manifests ----------------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    parameters: dict
    rng_seed: int | None
    inputs: dict = field(default_factory=dict)  # path -> sha256
    artifacts: dict = field(default_factory=dict)  # "stdout" / "out" -> sha256
    exit_code: int = 0
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "command": self.command,
            "argv": self.argv,
            "parameters": self.parameters,
            "rng_seed": self.rng_seed,
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "exit_code": self.exit_code,
            "tool_version": self.tool_version,
        }

    @classmethod
    def from_json(cls, text: str, name: str = "<manifest>") -> "RunManifest":
        data = _load_json(text, name)
        try:
            if data.get("version") != MANIFEST_VERSION:
                raise FormatError(f"{name}: unsupported manifest version {data.get('version')!r}")
            return cls(
                data["command"],
                list(data["argv"]),
                dict(data["parameters"]),
                data["rng_seed"],
                dict(data.get("inputs", {})),
                dict(data.get("artifacts", {})),
                int(data.get("exit_code", 0)),
                data.get("tool_version", ""),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise FormatError(f"{name}: malformed manifest ({exc})") from None
