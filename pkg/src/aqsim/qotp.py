"""Classical-keyed Pauli masking of qubit sequences (quantum one-time pad).

A key of 2n bits encrypts an n-qubit product sequence: qubit i (0-based)
is hit with sigma_x^{k[2i]} sigma_z^{k[2i+1]}, sigma_z first. Decryption
applies the exact operator inverse (sigma_x then sigma_z), so round trips
are amplitude-exact, not merely phase-equal.

``pair_transform`` is a second keyed mask in which qubit i draws its x bit
from position i and its z bit from i's pair partner (positions swap within
consecutive pairs: 0<->1, 2<->3, ...). It is provided for completeness and
is not used by the signing flow; the index convention is documented in the
README.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import statevector as sv
from .statevector import PauliBits, PureState

ROLE_SIGNER = "signer-key"      # shared signer <-> arbiter
ROLE_VERIFIER = "verifier-key"  # shared verifier <-> arbiter
ROLE_PAD = "pad"                # signer's private message pad
ROLE_PEER = "peer-key"          # shared signer <-> verifier; reserved, unused by the flow
ROLE_EXTRACTED = "extracted"


class KeyTooShort(Exception):
    pass


@dataclass(frozen=True)
class KeyBits:
    """An ordered classical bit string with a protocol role tag."""

    bits: tuple[int, ...]
    role: str

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("key bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    def to_hex(self) -> str:
        """Big-endian bit order: bit 0 is the MSB of the first hex digit.

        Lengths not divisible by 4 are zero-padded at the tail; the true
        length travels alongside in ``to_jsonable``.
        """
        if not self.bits:
            return ""
        pad = (-len(self.bits)) % 4
        value = 0
        for b in self.bits + (0,) * pad:
            value = (value << 1) | b
        return format(value, f"0{(len(self.bits) + pad) // 4}x")

    @classmethod
    def from_hex(cls, hex_str: str, length: int, role: str) -> "KeyBits":
        total = 4 * len(hex_str)
        if length > total:
            raise ValueError(f"hex string holds {total} bits, {length} requested")
        value = int(hex_str, 16) if hex_str else 0
        bits = tuple((value >> (total - 1 - i)) & 1 for i in range(length))
        return cls(bits, role)

    def to_jsonable(self) -> dict:
        return {"role": self.role, "len": len(self.bits), "hex": self.to_hex()}


def random_bits(length: int, role: str, rng: np.random.Generator) -> KeyBits:
    """Uniform key material from a seeded stream."""
    return KeyBits(tuple(int(b) for b in rng.integers(0, 2, size=length)), role)


def random_pad(n: int, rng: np.random.Generator) -> KeyBits:
    """A fresh 2n-bit message pad (one 2-bit block per qubit)."""
    if n < 1:
        raise ValueError("pad needs at least one qubit block")
    return random_bits(2 * n, ROLE_PAD, rng)


def pauli_at(key: KeyBits, index: int) -> PauliBits:
    """Pauli bits the pad assigns to qubit ``index`` (0-based): x=k[2i], z=k[2i+1]."""
    if 2 * index + 1 >= len(key.bits):
        raise KeyTooShort(
            f"key of {len(key.bits)} bits cannot cover qubit index {index}"
        )
    return PauliBits(key.bits[2 * index], key.bits[2 * index + 1])


def _check_product_sequence(seq: Sequence[PureState]) -> None:
    for i, state in enumerate(seq):
        if state.num_qubits != 1:
            raise ValueError(f"sequence element {i} spans {state.num_qubits} qubits; "
                             "the pad acts on product sequences of single qubits")


def encrypt(seq: Sequence[PureState], key: KeyBits) -> tuple[PureState, ...]:
    """Mask each qubit with its positional Pauli; consumes 2 bits per qubit."""
    _check_product_sequence(seq)
    if len(key.bits) < 2 * len(seq):
        raise KeyTooShort(f"{len(seq)} qubits need {2 * len(seq)} key bits, have {len(key.bits)}")
    return tuple(
        sv.apply_pauli(state, state.labels[0], pauli_at(key, i))
        for i, state in enumerate(seq)
    )


def decrypt(seq: Sequence[PureState], key: KeyBits) -> tuple[PureState, ...]:
    """Exact inverse of ``encrypt``: applies sigma_x then sigma_z per qubit."""
    _check_product_sequence(seq)
    if len(key.bits) < 2 * len(seq):
        raise KeyTooShort(f"{len(seq)} qubits need {2 * len(seq)} key bits, have {len(key.bits)}")
    out = []
    for i, state in enumerate(seq):
        p = pauli_at(key, i)
        label = state.labels[0]
        state = sv.apply_pauli(state, label, PauliBits(p.x, 0))
        state = sv.apply_pauli(state, label, PauliBits(0, p.z))
        out.append(state)
    return tuple(out)


def pair_transform(seq: Sequence[PureState], key: KeyBits) -> tuple[PureState, ...]:
    """Keyed mask with pair-swapped z bits: qubit i uses (x=k[i], z=k[i^1])."""
    _check_product_sequence(seq)
    n = len(seq)
    needed = n + 1 if n % 2 else n
    if len(key.bits) < needed:
        raise KeyTooShort(f"pair transform over {n} qubits needs {needed} key bits, "
                          f"have {len(key.bits)}")
    return tuple(
        sv.apply_pauli(state, state.labels[0], PauliBits(key.bits[i], key.bits[i ^ 1]))
        for i, state in enumerate(seq)
    )
