"""Attack strategies against the signing flow.

Three repudiation-dilemma moves leave the arbiter's record untouched while
a dispute still erupts: the verifier falsely negates a good comparison, the
signer ships corrupted Bell results, or a channel eavesdropper corrupts
them in flight. The signer can also publish a wrong pad after the fact.

The two Trojan-horse attacks ride the double transmission of the same
carriers (signer -> verifier -> arbiter): the signer tucks one half of a
fresh Bell pair next to each masked-message carrier, lets the verifier's
keyed apparatus act on it, then intercepts it before the arbiter and reads
the verifier's key bits off a Bell measurement against the retained half.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import statevector as sv
from .protocol import (
    BAND_OFF,
    BAND_SIGNAL,
    CLAIM_TELEPORT_MISMATCH,
    Carrier,
    CipherPayload,
    Claim,
    CompareResult,
    PublicBoard,
    QuantumRegistry,
    SignaturePackage,
)
from .qotp import ROLE_PAD, KeyBits
from .statevector import BELL_ORDER


class AttackError(Exception):
    pass


class InvalidPhase(AttackError):
    pass


class IndexOutOfRange(AttackError):
    pass


class SizeMismatch(AttackError):
    pass


class MissingDecoy(AttackError):
    pass


class ScenarioVariant(Enum):
    HONEST = "honest"
    BOB_LIES = "bob-lies"
    ALICE_TAMPERS = "alice-tamper"
    EVE_DISTURBS = "eve-disturb"
    ALICE_FALSE_PAD = "alice-false-pad"
    IPE = "ipe"
    DELAY_PHOTON = "delay-photon"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "ScenarioVariant":
        for variant in cls:
            if variant.value == token:
                return variant
        raise ValueError(f"unknown scenario {token!r}")


SCENARIO_TOKENS = tuple(v.value for v in ScenarioVariant)

_TAMPERING = (ScenarioVariant.ALICE_TAMPERS, ScenarioVariant.EVE_DISTURBS)


@dataclass(frozen=True)
class Scenario:
    """A scenario selection plus its parameters."""

    variant: ScenarioVariant
    tamper_indices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tamper_indices", tuple(self.tamper_indices))
        if self.variant not in _TAMPERING and self.tamper_indices:
            raise ValueError(f"scenario {self.variant.token} takes no tamper indices")

    @classmethod
    def from_token(cls, token: str) -> "Scenario":
        variant = ScenarioVariant.from_token(token)
        indices = (1,) if variant in _TAMPERING else ()
        return cls(variant, indices)

    @property
    def token(self) -> str:
        return self.variant.token


@dataclass(frozen=True)
class RunState:
    """Minimal view of a live run, for phase-gated attack moves."""

    phase: str  # "setup" | "signed" | "forwarded" | "verified" | "compared"
    genuine_compare: CompareResult | None = None


@dataclass(frozen=True)
class DecoySet:
    """Fresh Bell pairs (probe, keeper); the attacker keeps every keeper."""

    pairs: tuple[tuple[str, str], ...]


def make_decoy_set(n: int, registry: QuantumRegistry) -> DecoySet:
    pairs = []
    for i in range(1, n + 1):
        probe, keeper = f"d1_{i}", f"d2_{i}"
        registry.add(sv.make_bell_pair(probe, keeper))
        pairs.append((probe, keeper))
    return DecoySet(tuple(pairs))


def bob_dos_negate(state: RunState) -> Claim:
    """Verifier falsely reports a comparison mismatch on a genuinely good run.

    Only callable once the teleport comparison really returned a match;
    the point is that nothing in the arbiter's record can refute the lie.
    """
    if state.phase != "compared":
        raise InvalidPhase(f"cannot negate before the comparison step (phase={state.phase})")
    if state.genuine_compare is not CompareResult.MATCH_OK:
        raise InvalidPhase("negation targets a genuinely matching run")
    return Claim("bob", CLAIM_TELEPORT_MISMATCH)


def _check_indices(indices, n: int) -> tuple[int, ...]:
    idx = tuple(indices)
    if not idx:
        raise IndexOutOfRange("need at least one index to tamper")
    for i in idx:
        if not 1 <= i <= n:
            raise IndexOutOfRange(f"index {i} outside 1..{n}")
    return idx


def alice_tamper_outcomes(package: SignaturePackage, indices) -> SignaturePackage:
    """Signer replaces listed Bell results (1-based) with a different variant.

    Masked and signature carriers stay untouched, so the arbiter's check
    still passes; only the verifier's teleport comparison breaks.
    """
    idx = _check_indices(indices, package.n)
    results = list(package.bell_results)
    for i in idx:
        row = BELL_ORDER.index(results[i - 1])
        results[i - 1] = BELL_ORDER[(row + 1) % 4]
    return SignaturePackage(package.masked, package.signature, tuple(results))


def eve_disturb_outcomes(
    package: SignaturePackage, indices, rng: np.random.Generator
) -> SignaturePackage:
    """Channel eavesdropper corrupts listed Bell results in flight.

    Same effect surface as the signer-side tamper; only the transcript
    actor differs. Disturbing anything else would flip the arbiter's bit
    and break the three-way indistinguishability.
    """
    idx = _check_indices(indices, package.n)
    results = list(package.bell_results)
    for i in idx:
        row = BELL_ORDER.index(results[i - 1])
        results[i - 1] = BELL_ORDER[(row + 1 + int(rng.integers(0, 3))) % 4]
    return SignaturePackage(package.masked, package.signature, tuple(results))


def alice_publish_false_pad(
    board: PublicBoard, true_pad: KeyBits, rng: np.random.Generator
) -> KeyBits:
    """Signer posts an arbitrary pad different from the one she used."""
    n_bits = len(true_pad.bits)
    while True:
        bits = tuple(int(b) for b in rng.integers(0, 2, size=n_bits))
        if bits != true_pad.bits:
            break
    false_pad = KeyBits(bits, ROLE_PAD)
    board.post("alice", false_pad.to_jsonable())
    return false_pad


def _inject(package: SignaturePackage, decoys: DecoySet, band: str) -> SignaturePackage:
    signal = [c for c in package.masked if c.band == BAND_SIGNAL]
    if len(signal) != len(decoys.pairs):
        raise SizeMismatch(f"{len(decoys.pairs)} decoys for {len(signal)} carriers")
    injected: list[Carrier] = []
    for carrier, (probe, _) in zip(package.masked, decoys.pairs):
        injected.append(carrier)
        injected.append(Carrier(id=probe, band=band, time_slot=carrier.time_slot, payload=probe))
    return SignaturePackage(tuple(injected), package.signature, package.bell_results)


def ipe_inject(package: SignaturePackage, decoys: DecoySet) -> SignaturePackage:
    """Insert each probe next to its masked-message carrier, off the signal band.

    Honest apparatus never looks at the extra band, but honest keying is by
    time slot, so the probe still picks up the verifier's positional Pauli.
    """
    return _inject(package, decoys, BAND_OFF)


def delay_photon_inject(package: SignaturePackage, decoys: DecoySet) -> SignaturePackage:
    """Same insertion, but on the signal band sharing an occupied time slot.

    Invisible to the wavelength filter; a photon-number splitter sees the
    doubly occupied slots.
    """
    return _inject(package, decoys, BAND_SIGNAL)


def intercept_decoys(
    payload: CipherPayload, decoys: DecoySet
) -> tuple[CipherPayload, tuple[str, ...]]:
    """Pull the probe carriers out of the verifier->arbiter transmission."""
    probe_labels = {probe for probe, _ in decoys.pairs}
    captured = tuple(c.payload for c in payload.masked if c.payload in probe_labels)
    cleaned = tuple(c for c in payload.masked if c.payload not in probe_labels)
    return (
        CipherPayload(masked=cleaned, signature=payload.signature,
                      verdict_carrier=payload.verdict_carrier),
        captured,
    )


def ipe_extract(
    captured: tuple[str, ...],
    decoys: DecoySet,
    registry: QuantumRegistry,
    rng: np.random.Generator,
) -> tuple[int, ...]:
    """Bell-measure each (probe, keeper) pair and read off the key bits.

    The verifier's Pauli (x, z) turned the fresh pair into the Bell state
    encoded (x, z), so each measurement yields two of his key bits with
    certainty.
    """
    have = set(captured)
    bits: list[int] = []
    for probe, keeper in decoys.pairs:
        if probe not in have:
            raise MissingDecoy(f"probe {probe!r} never came back (filtered upstream?)")
        outcome = registry.bell_measure(probe, keeper, rng)
        bits.append(outcome.x)
        bits.append(outcome.z)
    return tuple(bits)
