"""Key and ciphertext file formats, plus the error-injection channel model.

Key files are JSON ("rmc-key-v1"); every integer leaf is a decimal
string so arbitrarily large values survive any JSON reader.  Ciphertext
files are plain text: a header line

    RMCv1 k=<k> blocks=<B> len=<bytes> fp=<hex>

followed by k lines of k space-separated decimal integers per block, LF
line endings.  The key index n never appears in a ciphertext file: it is
secret key material.  Fingerprints tie the two formats together and are
checked before any arithmetic is attempted.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .coding import (KIND_GENERAL, KIND_RIGHT, KIND_SYMMETRIC, CodingKey,
                     key_fingerprint, validate_key)
from .exactmat import IntMatrix

KEY_FORMAT = "rmc-key-v1"
CIPHER_MAGIC = "RMCv1"


class KeyFormatError(ValueError):
    pass


class CipherFormatError(ValueError):
    pass


class FingerprintMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# key files
# ---------------------------------------------------------------------------

def key_to_dict(key: CodingKey) -> dict:
    out: dict = {"format": KEY_FORMAT, "kind": key.kind, "order": key.order,
                 "index": str(key.index)}
    if key.coeffs is not None:
        out["coefficients"] = [str(c) for c in key.coeffs]
    if key.left is not None:
        out["left_matrix"] = [[str(v) for v in row] for row in key.left]
    if key.x0 is not None:
        out["initial_vector"] = [str(v) for v in key.x0]
    if key.m0 is not None:
        out["initial_matrix"] = [[str(v) for v in row] for row in key.m0]
    out["fingerprint"] = key_fingerprint(key)
    return out


def _ints(values, what: str) -> list[int]:
    try:
        return [int(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise KeyFormatError(f"bad integer list in {what}") from exc


def _int_matrix(rows, what: str) -> list[list[int]]:
    if not isinstance(rows, list):
        raise KeyFormatError(f"{what} must be a list of rows")
    return [_ints(row, what) for row in rows]


def key_from_dict(data: dict, verify_fingerprint: bool = True,
                  validate: bool = True) -> CodingKey:
    if data.get("format") != KEY_FORMAT:
        raise KeyFormatError(f"unsupported key format {data.get('format')!r}")
    kind = data.get("kind")
    try:
        order = int(data["order"])
        index = int(data["index"])
    except (KeyError, TypeError, ValueError) as exc:
        raise KeyFormatError("missing or malformed order/index") from exc
    try:
        if kind == KIND_SYMMETRIC:
            key = CodingKey(kind, order, index,
                            coeffs=tuple(_ints(data["coefficients"], "coefficients")),
                            x0=tuple(_ints(data["initial_vector"], "initial_vector")))
        elif kind == KIND_GENERAL:
            key = CodingKey(kind, order, index,
                            left=tuple(tuple(r) for r in _int_matrix(data["left_matrix"], "left_matrix")),
                            x0=tuple(_ints(data["initial_vector"], "initial_vector")))
        elif kind == KIND_RIGHT:
            key = CodingKey(kind, order, index,
                            coeffs=tuple(_ints(data["coefficients"], "coefficients")),
                            m0=tuple(tuple(r) for r in _int_matrix(data["initial_matrix"], "initial_matrix")))
        else:
            raise KeyFormatError(f"unknown key kind {kind!r}")
    except KeyError as exc:
        raise KeyFormatError(f"missing key field {exc}") from exc
    except ValueError as exc:
        raise KeyFormatError(str(exc)) from exc
    if verify_fingerprint and "fingerprint" in data:
        actual = key_fingerprint(key)
        if data["fingerprint"] != actual:
            raise FingerprintMismatchError(
                f"key fingerprint {data['fingerprint']} does not match content ({actual})")
    if validate:
        report = validate_key(key)
        if not report.ok:
            failures = [it.name for it in report.items if it.hard and it.status == "fail"]
            raise KeyFormatError(f"key fails validation: {', '.join(failures)}")
    return key


def save_key(key: CodingKey, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(key_to_dict(key), indent=2, sort_keys=True) + "\n")


def load_key(path: Union[str, Path], validate: bool = True) -> CodingKey:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise KeyFormatError(f"not a JSON key file: {exc}") from exc
    return key_from_dict(data, validate=validate)


# ---------------------------------------------------------------------------
# ciphertext files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CipherText:
    blocks: tuple[tuple[tuple[int, ...], ...], ...]
    length: int
    order: int
    fingerprint: str

    def block_list(self) -> list[IntMatrix]:
        return [[list(row) for row in block] for block in self.blocks]


def cipher_to_text(blocks: Sequence[IntMatrix], length: int, order: int,
                   fingerprint: str) -> str:
    lines = [f"{CIPHER_MAGIC} k={order} blocks={len(blocks)} len={length} fp={fingerprint}"]
    for block in blocks:
        for row in block:
            lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def cipher_from_text(text: str) -> CipherText:
    lines = text.splitlines()
    if not lines:
        raise CipherFormatError("empty ciphertext file")
    head = lines[0].split()
    if not head or head[0] != CIPHER_MAGIC:
        raise CipherFormatError("missing RMCv1 header")
    fields = dict(part.split("=", 1) for part in head[1:] if "=" in part)
    try:
        order = int(fields["k"])
        count = int(fields["blocks"])
        length = int(fields["len"])
        fingerprint = fields["fp"]
    except (KeyError, ValueError) as exc:
        raise CipherFormatError(f"malformed header: {lines[0]!r}") from exc
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != count * order:
        raise CipherFormatError(
            f"expected {count * order} matrix lines, found {len(body)}")
    if count * order * order < length:
        raise CipherFormatError("declared length exceeds block capacity")
    blocks = []
    for b in range(count):
        rows = []
        for i in range(order):
            parts = body[b * order + i].split()
            if len(parts) != order:
                raise CipherFormatError(f"block {b} row {i} has {len(parts)} entries, wanted {order}")
            try:
                rows.append(tuple(int(p) for p in parts))
            except ValueError as exc:
                raise CipherFormatError(f"non-integer entry in block {b} row {i}") from exc
        blocks.append(tuple(rows))
    return CipherText(blocks=tuple(blocks), length=length, order=order,
                      fingerprint=fingerprint)


def save_cipher(blocks: Sequence[IntMatrix], length: int, order: int,
                fingerprint: str, path: Union[str, Path]) -> None:
    Path(path).write_text(cipher_to_text(blocks, length, order, fingerprint))


def load_cipher(path: Union[str, Path]) -> CipherText:
    return cipher_from_text(Path(path).read_text())


# ---------------------------------------------------------------------------
# error injection
# ---------------------------------------------------------------------------

MODEL_REPLACE = "replace_uniform"
MODEL_TRANSPOSE = "digit_transpose"
MODEL_ADDITIVE = "additive_noise"
MODELS = (MODEL_REPLACE, MODEL_TRANSPOSE, MODEL_ADDITIVE)


@dataclass(frozen=True)
class ErrorModel:
    """Channel corruption model: positions are distinct within a block."""

    kind: str = MODEL_REPLACE
    count: int = 1
    magnitude: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in MODELS:
            raise ValueError(f"unknown error model {self.kind!r}")
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.magnitude < 1:
            raise ValueError("magnitude must be positive")


@dataclass(frozen=True)
class CorruptionRecord:
    block: int
    row: int
    col: int
    original: int
    corrupted: int


def _transpose_digits(value: int, rng: random.Random) -> int:
    sign = -1 if value < 0 else 1
    digits = list(str(abs(value)))
    if len(digits) >= 2:
        positions = list(range(len(digits) - 1))
        rng.shuffle(positions)
        for p in positions:
            if digits[p] != digits[p + 1]:
                digits[p], digits[p + 1] = digits[p + 1], digits[p]
                return sign * int("".join(digits))
    return value + 1  # all digits equal: fall back to a minimal change


def _corrupt_value(value: int, model: ErrorModel, rng: random.Random) -> int:
    if model.kind == MODEL_TRANSPOSE:
        return _transpose_digits(value, rng)
    if model.kind == MODEL_ADDITIVE:
        delta = rng.randint(1, model.magnitude) * rng.choice((-1, 1))
        return value + delta
    lo = value - model.magnitude
    hi = value + model.magnitude
    new = rng.randint(lo, hi)
    while new == value:
        new = rng.randint(lo, hi)
    return new


def corrupt_blocks(blocks: Sequence[IntMatrix], model: ErrorModel,
                   seed: Optional[int] = None) -> tuple[list[IntMatrix], list[CorruptionRecord]]:
    """Deterministically corrupt `count` distinct entries per block.

    Returns the corrupted blocks and a ground-truth record of every
    change (the sidecar content for audits)."""
    rng = random.Random(model.seed if seed is None else seed)
    out: list[IntMatrix] = []
    records: list[CorruptionRecord] = []
    for b, block in enumerate(blocks):
        k = len(block)
        copy = [list(row) for row in block]
        count = min(model.count, k * k)
        positions = rng.sample([(i, j) for i in range(k) for j in range(k)], count)
        for i, j in positions:
            original = copy[i][j]
            corrupted = _corrupt_value(original, model, rng)
            copy[i][j] = corrupted
            records.append(CorruptionRecord(b, i, j, original, corrupted))
        out.append(copy)
    return out, records


def records_to_json(records: Sequence[CorruptionRecord]) -> list[dict]:
    return [{"block": r.block, "row": r.row, "col": r.col,
             "original": str(r.original), "corrupted": str(r.corrupted)}
            for r in records]


def records_from_json(data: Sequence[dict]) -> list[CorruptionRecord]:
    return [CorruptionRecord(int(d["block"]), int(d["row"]), int(d["col"]),
                             int(d["original"]), int(d["corrupted"])) for d in data]
