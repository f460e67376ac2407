"""Byte-stream digitization and exact block encryption / decryption.

Plaintext bytes fill k x k blocks row by row, left to right, padded with
zero bytes; the original length is kept alongside so binary payloads
invert exactly.  Encryption is C = P * M_n; decryption multiplies by the
exact rational inverse and demands an integral, in-alphabet result,
raising a corruption error that names the offending block and entry
otherwise.
"""

from __future__ import annotations

from math import lcm
from typing import Optional, Sequence

from .coding import CodingKey, MatrixBuilder
from .exactmat import IntMatrix

ALPHABET_MAX = 255


class CorruptionError(ValueError):
    """Decryption produced a non-integral or out-of-alphabet entry."""

    def __init__(self, block: int, row: int, col: int, detail: str):
        super().__init__(f"block {block}, entry ({row}, {col}): {detail}")
        self.block = block
        self.row = row
        self.col = col
        self.detail = detail


def digitize(data: bytes, k: int) -> tuple[list[IntMatrix], int]:
    """Split bytes into k x k blocks (row-major), zero-padded; returns
    the blocks and the original byte length."""
    if k < 2:
        raise ValueError("block dimension must be at least 2")
    size = k * k
    blocks: list[IntMatrix] = []
    for start in range(0, len(data), size):
        chunk = data[start:start + size]
        chunk = chunk + b"\x00" * (size - len(chunk))
        blocks.append([[chunk[i * k + j] for j in range(k)] for i in range(k)])
    return blocks, len(data)


def assemble(blocks: Sequence[Sequence[Sequence[int]]], length: int) -> bytes:
    """Inverse of digitize: flatten row-major and strip the padding."""
    out = bytearray()
    for block in blocks:
        for row in block:
            out.extend(int(v) for v in row)
    if length > len(out):
        raise ValueError("stored length exceeds block capacity")
    return bytes(out[:length])


def encrypt(blocks: Sequence[IntMatrix], key: CodingKey, n: Optional[int] = None) -> list[IntMatrix]:
    """C_b = P_b * M_n, the same M_n for every block."""
    if n is None:
        n = key.index
    builder = MatrixBuilder(key)
    m = builder.matrix(n)
    k = key.order
    out: list[IntMatrix] = []
    for b, block in enumerate(blocks):
        if len(block) != k or any(len(row) != k for row in block):
            raise ValueError(f"block {b} does not match the key dimension {k}")
        out.append([[sum(block[i][t] * m[t][j] for t in range(k)) for j in range(k)]
                    for i in range(k)])
    return out


def decrypt(blocks: Sequence[IntMatrix], key: CodingKey, length: Optional[int] = None,
            n: Optional[int] = None) -> bytes:
    """Exact decryption; every entry must be an integer in [0, 255].

    When length is None the full padded payload is returned.
    """
    if n is None:
        n = key.index
    builder = MatrixBuilder(key)
    minv = builder.inverse(n)
    k = key.order
    denom = lcm(*(f.denominator for row in minv for f in row))
    mint = [[int(f * denom) for f in row] for row in minv]
    plain: list[IntMatrix] = []
    for b, block in enumerate(blocks):
        if len(block) != k or any(len(row) != k for row in block):
            raise ValueError(f"block {b} does not match the key dimension {k}")
        rows: IntMatrix = []
        for i in range(k):
            out_row: list[int] = []
            for j in range(k):
                num = sum(block[i][t] * mint[t][j] for t in range(k))
                q, r = divmod(num, denom)
                if r != 0:
                    raise CorruptionError(b, i, j, "non-integral plaintext value")
                if not 0 <= q <= ALPHABET_MAX:
                    raise CorruptionError(b, i, j, f"plaintext value {q} outside [0, {ALPHABET_MAX}]")
                out_row.append(q)
            rows.append(out_row)
        plain.append(rows)
    total = len(blocks) * k * k
    return assemble(plain, total if length is None else length)


def encrypt_bytes(data: bytes, key: CodingKey, n: Optional[int] = None) -> tuple[list[IntMatrix], int]:
    blocks, length = digitize(data, key.order)
    return encrypt(blocks, key, n), length
