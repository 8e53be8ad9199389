"""Three-party signing flow: signer (alice), verifier (bob), arbiter (trent).

The signer masks her message with a private random pad, binds a second
masked copy under the signer/arbiter key, and teleports a third copy to
the verifier through pre-shared Bell pairs. The arbiter checks that the
bound copy matches what he can recompute, returns a verification bit, and
the verifier then compares his teleported copy against the delivered one.
On success the signer publishes the pad on an append-only public board and
the verifier unmasks the message.

Everything quantum lives in a ``QuantumRegistry`` keyed by qubit label;
``Carrier`` values are the channel-level handles (band + time slot) that
the adversary and defense layers manipulate. The arbiter's entire view of
a run is the ``TrentRecord``; dispute arbitration is a pure function of
that record plus the parties' claims.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import qotp
from . import statevector as sv
from .jsonutil import canonical_bytes, sha256_hex
from .qotp import KeyBits
from .statevector import BellOutcome, LabelCollision, PauliBits, PureState, UnknownLabel

BAND_SIGNAL = "signal"
BAND_OFF = "off-band"

EQUALITY_TOL = 1e-9  # state-equality tolerance for all verification checks
UNIFORM_LAW_TOL = 1e-12


class ProtocolError(Exception):
    pass


class CompareResult(Enum):
    REJECT = "reject"
    MATCH_OK = "match-ok"
    MISMATCH = "mismatch"


class Verdict(Enum):
    SIGNATURE_INVALID = "signature-invalid"
    INCONCLUSIVE = "inconclusive"
    NO_DISPUTE = "no-dispute"


# Claim statements the arbiter understands.
CLAIM_FOLLOWED = "followed-protocol"
CLAIM_TELEPORT_MISMATCH = "teleport-mismatch"
CLAIM_PAD_MISMATCH = "pad-mismatch"

_DISPUTE_STATEMENTS = (CLAIM_TELEPORT_MISMATCH, CLAIM_PAD_MISMATCH)


@dataclass(frozen=True)
class Claim:
    party: str
    statement: str


@dataclass(frozen=True)
class MessageSpec:
    """The signer's classical description of her n-qubit message.

    Holding the message classically is what lets her prepare the three
    copies the flow needs without cloning anything.
    """

    coefficients: tuple[tuple[complex, complex], ...]

    def __post_init__(self):
        coeffs = tuple((complex(a), complex(b)) for a, b in self.coefficients)
        if not coeffs:
            raise ValueError("message needs at least one qubit")
        for i, (a, b) in enumerate(coeffs):
            norm_sq = abs(a) ** 2 + abs(b) ** 2
            if abs(norm_sq - 1.0) > sv.INPUT_NORM_TOL:
                raise sv.NotNormalized(f"coefficient pair {i} has |a|^2+|b|^2 = {norm_sq!r}")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def n(self) -> int:
        return len(self.coefficients)

    def qubits(self, prefix: str) -> tuple[PureState, ...]:
        """One fresh copy of the message, labeled ``prefix1 .. prefixN``."""
        return tuple(
            sv.make_qubit(a, b, f"{prefix}{i + 1}")
            for i, (a, b) in enumerate(self.coefficients)
        )

    def qubit(self, i: int, label) -> PureState:
        a, b = self.coefficients[i]
        return sv.make_qubit(a, b, label)


def random_message_spec(
    n: int, rng: np.random.Generator, generic_margin: float = 0.0
) -> MessageSpec:
    """Sample n random qubit descriptions.

    With ``generic_margin`` > 0, resample any qubit whose Bloch vector comes
    within the margin of a Pauli axis, so no sampled qubit is close to an
    eigenstate of any nonidentity Pauli. Such "generic" qubits make every
    wrong Pauli detectable by the equality checks.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    coeffs = []
    for _ in range(n):
        while True:
            re_a, im_a, re_b, im_b = rng.normal(size=4)
            a = complex(re_a, im_a)
            b = complex(re_b, im_b)
            norm = (abs(a) ** 2 + abs(b) ** 2) ** 0.5
            if norm < 1e-6:
                continue
            a /= norm
            b /= norm
            if generic_margin > 0.0:
                cross = a.conjugate() * b
                axis_max = max(
                    abs(2.0 * cross.real),               # <X>
                    abs(2.0 * cross.imag),               # <Y>
                    abs(abs(a) ** 2 - abs(b) ** 2),      # <Z>
                )
                if axis_max > 1.0 - generic_margin:
                    continue
            coeffs.append((a, b))
            break
    return MessageSpec(tuple(coeffs))


@dataclass(frozen=True)
class Carrier:
    """Channel-level handle for one photon: band, slot, and the qubit it holds."""

    id: str
    band: str
    time_slot: int
    payload: str

    def meta(self) -> dict:
        return {"id": self.id, "band": self.band, "slot": self.time_slot}


class QuantumRegistry:
    """Tracks which PureState group currently holds each labeled qubit.

    Operations rebind whole groups (states are immutable); a Bell
    measurement merges the two groups involved, then drops the measured
    labels.
    """

    def __init__(self):
        self._groups: dict = {}

    def add(self, state: PureState) -> None:
        for label in state.labels:
            if label in self._groups:
                raise LabelCollision(f"label {label!r} already registered")
        for label in state.labels:
            self._groups[label] = state

    def state_of(self, label) -> PureState:
        try:
            return self._groups[label]
        except KeyError:
            raise UnknownLabel(f"label {label!r} not in registry") from None

    def has(self, label) -> bool:
        return label in self._groups

    def _rebind(self, old_labels, new_state: PureState) -> None:
        for label in old_labels:
            del self._groups[label]
        for label in new_state.labels:
            self._groups[label] = new_state

    def apply_pauli(self, label, p: PauliBits) -> None:
        group = self.state_of(label)
        self._rebind(group.labels, sv.apply_pauli(group, label, p))

    def apply_pauli_inverse(self, label, p: PauliBits) -> None:
        """Undo ``apply_pauli`` exactly: sigma_x first, then sigma_z."""
        group = self.state_of(label)
        new = sv.apply_pauli(group, label, PauliBits(p.x, 0))
        new = sv.apply_pauli(new, label, PauliBits(0, p.z))
        self._rebind(group.labels, new)

    def _merged(self, label1, label2) -> PureState:
        g1 = self.state_of(label1)
        g2 = self.state_of(label2)
        return g1 if g1 is g2 else sv.tensor(g1, g2)

    def bell_probabilities(self, label1, label2) -> tuple[float, float, float, float]:
        return sv.bell_probabilities(self._merged(label1, label2), label1, label2)

    def bell_measure(
        self, label1, label2, rng: np.random.Generator, forced: BellOutcome | None = None
    ) -> BellOutcome:
        merged = self._merged(label1, label2)
        outcome, residual = sv.bell_measure(merged, label1, label2, rng, forced=forced)
        for label in merged.labels:
            del self._groups[label]
        for label in residual.labels:
            self._groups[label] = residual
        return outcome

    def sequence(self, labels: Sequence) -> tuple[PureState, ...]:
        return tuple(self.state_of(label) for label in labels)


@dataclass(frozen=True)
class SignaturePackage:
    """What the signer ships: masked message carriers, bound-signature
    carriers, and her Bell results (one per message qubit)."""

    masked: tuple[Carrier, ...]
    signature: tuple[Carrier, ...]
    bell_results: tuple[BellOutcome, ...]

    def __post_init__(self):
        object.__setattr__(self, "masked", tuple(self.masked))
        object.__setattr__(self, "signature", tuple(self.signature))
        object.__setattr__(self, "bell_results", tuple(self.bell_results))
        if len(self.signature) != len(self.bell_results):
            raise ValueError("signature carriers and bell results must align")
        if len(self.signature) == 0 or len(self.masked) == 0:
            raise ValueError("empty package")

    @property
    def n(self) -> int:
        return len(self.signature)


@dataclass(frozen=True)
class CipherPayload:
    """The carrier streams of one quantum ciphertext transmission."""

    masked: tuple[Carrier, ...]
    signature: tuple[Carrier, ...]
    verdict_carrier: Carrier | None = None

    def all_carriers(self) -> tuple[Carrier, ...]:
        extra = (self.verdict_carrier,) if self.verdict_carrier is not None else ()
        return self.masked + self.signature + extra

    def digest(self, registry: QuantumRegistry) -> str:
        """Receive-time digest: carrier metadata plus the exact states held."""
        doc = [
            {
                "id": c.id,
                "band": c.band,
                "slot": c.time_slot,
                "state": registry.state_of(c.payload).to_jsonable(),
            }
            for c in self.all_carriers()
        ]
        return sha256_hex(doc)


class PublicBoard:
    """Append-only broadcast board; entries are never mutated or removed."""

    def __init__(self):
        self._entries: list[tuple[str, dict]] = []

    def post(self, author: str, value: dict) -> None:
        self._entries.append((author, value))

    @property
    def entries(self) -> tuple[tuple[str, dict], ...]:
        return tuple(self._entries)

    def to_jsonable(self) -> list:
        return [{"author": a, "value": v} for a, v in self._entries]


@dataclass(frozen=True)
class TrentRecord:
    """Everything the arbiter observes in one run.

    Deliberately poor: no Bell results, no verifier-side qubits, no pad.
    Dispute verdicts may depend on nothing else.
    """

    received_digest: str
    masked_snapshot: tuple
    signature_snapshot: tuple
    verified: int
    returned_digest: str

    def to_jsonable(self) -> dict:
        return {
            "received_digest": self.received_digest,
            "masked": list(self.masked_snapshot),
            "signature": list(self.signature_snapshot),
            "V": self.verified,
            "returned_digest": self.returned_digest,
        }

    def canonical_bytes(self) -> bytes:
        return canonical_bytes(self.to_jsonable())


@dataclass(frozen=True)
class ProtocolKeys:
    signer: KeyBits
    verifier: KeyBits
    peer: KeyBits


@dataclass(frozen=True)
class SignerPrivate:
    """What the signer keeps to herself after signing."""

    pad: KeyBits
    outcome_probabilities: tuple
    max_probability_deviation: float


@dataclass(frozen=True)
class CompareReport:
    result: CompareResult
    verify_bit: int
    per_qubit: tuple[bool, ...]


class Transcript:
    """Append-only event log of one run plus its config and final checks."""

    def __init__(self, scenario: str, n: int, seed: int, defenses: Sequence[str]):
        self.config = {"scenario": scenario, "n": n, "seed": seed, "defenses": list(defenses)}
        self.events: list[dict] = []
        self.board: list = []
        self.verdict: str | None = None
        self.checks: dict | None = None

    def log(self, actor: str, kind: str, payload: dict) -> None:
        self.events.append({"t": len(self.events), "actor": actor, "kind": kind, "payload": payload})

    def finish(self, board: PublicBoard, verdict: str | None, checks: dict) -> None:
        self.board = board.to_jsonable()
        self.verdict = verdict
        self.checks = checks

    def to_jsonable(self) -> dict:
        return {
            "config": self.config,
            "events": self.events,
            "board": self.board,
            "verdict": self.verdict,
            "checks": self.checks,
        }

    def to_bytes(self) -> bytes:
        return canonical_bytes(self.to_jsonable())


def checks_jsonable(
    verified: int | None,
    compare: str | None,
    recover_fidelity_min: float | None,
    signature_valid: bool | None,
) -> dict:
    """The transcript's fixed-order checks block."""
    return {
        "V": verified,
        "v5": compare,
        "recover_fidelity_min": recover_fidelity_min,
        "signature_valid": signature_valid,
    }


# --- the protocol steps -----------------------------------------------------


def setup_keys(n: int, rng: np.random.Generator) -> ProtocolKeys:
    """Trusted setup: arbiter-shared keys plus the reserved peer key.

    The verifier key is 4n+2 bits: 2 per masked-message qubit, 2 per
    signature qubit, and 2 for the verification-bit qubit on the return leg.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    return ProtocolKeys(
        signer=qotp.random_bits(2 * n, qotp.ROLE_SIGNER, rng),
        verifier=qotp.random_bits(4 * n + 2, qotp.ROLE_VERIFIER, rng),
        peer=qotp.random_bits(2 * n, qotp.ROLE_PEER, rng),
    )


def distribute_bell_pairs(n: int, registry: QuantumRegistry) -> tuple[tuple, tuple]:
    """n shared Bell pairs; the signer keeps the a-halves, the verifier the b-halves.

    Delivery is modeled as a perfect authenticated channel.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    alice_labels = []
    bob_labels = []
    for i in range(1, n + 1):
        a, b = f"a{i}", f"b{i}"
        registry.add(sv.make_bell_pair(a, b))
        alice_labels.append(a)
        bob_labels.append(b)
    return tuple(alice_labels), tuple(bob_labels)


def alice_sign(
    spec: MessageSpec,
    signer_key: KeyBits,
    rng: np.random.Generator,
    registry: QuantumRegistry,
    alice_labels: Sequence,
    forced_pad: KeyBits | None = None,
    forced_outcomes: Sequence[BellOutcome] | None = None,
) -> tuple[SignaturePackage, KeyBits, SignerPrivate]:
    """Produce the signature package.

    Three copies of the message are prepared from the classical spec: one is
    pad-masked and shipped, one is pad-masked then bound under the signer
    key, and one is pad-masked and consumed by Bell measurements against the
    signer's halves of the shared pairs. Each measurement's four analytic
    branch probabilities are checked to be exactly 1/4 before sampling.
    """
    n = spec.n
    if len(alice_labels) != n:
        raise ProtocolError(f"have {len(alice_labels)} shared pairs for {n} qubits")
    pad = qotp.random_pad(n, rng)  # always drawn, to keep the stream aligned
    if forced_pad is not None:
        if len(forced_pad.bits) != 2 * n:
            raise ProtocolError("forced pad has the wrong length")
        pad = forced_pad

    masked_states = qotp.encrypt(spec.qubits("p"), pad)
    signature_states = qotp.encrypt(qotp.encrypt(spec.qubits("sa"), pad), signer_key)
    teleport_states = qotp.encrypt(spec.qubits("t"), pad)
    for state in masked_states + signature_states + teleport_states:
        registry.add(state)

    outcomes = []
    all_probs = []
    max_dev = 0.0
    for i in range(n):
        probs = registry.bell_probabilities(f"t{i + 1}", alice_labels[i])
        dev = max(abs(p - 0.25) for p in probs)
        max_dev = max(max_dev, dev)
        if dev > UNIFORM_LAW_TOL:
            raise ProtocolError(
                f"Bell branch probabilities {probs} deviate from 1/4 beyond {UNIFORM_LAW_TOL}"
            )
        forced = forced_outcomes[i] if forced_outcomes is not None else None
        outcomes.append(registry.bell_measure(f"t{i + 1}", alice_labels[i], rng, forced=forced))
        all_probs.append(probs)

    # One channel message, one slot sequence: masked slots 0..n-1, then
    # signature slots n..2n-1. Key bits are consumed positionally by slot.
    package = SignaturePackage(
        masked=tuple(
            Carrier(id=f"p{i + 1}", band=BAND_SIGNAL, time_slot=i, payload=f"p{i + 1}")
            for i in range(n)
        ),
        signature=tuple(
            Carrier(id=f"sa{i + 1}", band=BAND_SIGNAL, time_slot=n + i, payload=f"sa{i + 1}")
            for i in range(n)
        ),
        bell_results=tuple(outcomes),
    )
    private = SignerPrivate(
        pad=pad,
        outcome_probabilities=tuple(all_probs),
        max_probability_deviation=max_dev,
    )
    return package, pad, private


def _same_qubit_state(a: PureState, b: PureState) -> bool:
    """Phase-insensitive equality of two single-qubit states held under
    different labels (the comparison is over content, not identity)."""
    return sv.equal_up_to_phase(a, PureState(a.labels, b.amps), EQUALITY_TOL)


def _slots(carriers: Sequence[Carrier]) -> dict[int, list[Carrier]]:
    grouped: dict[int, list[Carrier]] = {}
    for c in carriers:
        grouped.setdefault(c.time_slot, []).append(c)
    return grouped


def _mask_stream(
    registry: QuantumRegistry,
    carriers: Sequence[Carrier],
    key: KeyBits,
    inverse: bool,
) -> None:
    """Apply each slot's positional key Pauli to every carrier in the slot.

    Honest apparatus keys by time slot, which is exactly why an adversarial
    carrier sharing a slot picks up the same keyed operation.
    """
    grouped = _slots(carriers)
    for slot in sorted(grouped):
        p = qotp.pauli_at(key, slot)
        for carrier in grouped[slot]:
            if inverse:
                registry.apply_pauli_inverse(carrier.payload, p)
            else:
                registry.apply_pauli(carrier.payload, p)


def bob_forward(
    package: SignaturePackage, verifier_key: KeyBits, registry: QuantumRegistry
) -> CipherPayload:
    """Encrypt the masked and signature streams under the verifier key.

    The streams form one concatenated sequence over slots 0..2n-1, so the
    transmission consumes 4n key bits. Bell results are retained, never
    forwarded.
    """
    _mask_stream(registry, package.masked + package.signature, verifier_key, inverse=False)
    return CipherPayload(masked=package.masked, signature=package.signature)


def trent_verify(
    payload: CipherPayload,
    signer_key: KeyBits,
    verifier_key: KeyBits,
    registry: QuantumRegistry,
) -> tuple[CipherPayload, TrentRecord]:
    """Arbiter check: decrypt, recompute the bound copy, compare, re-encrypt.

    The verification bit is encoded as one extra computational-basis qubit,
    keyed by the final two verifier-key bits on the way back.
    """
    n = len(payload.signature)
    if len(payload.masked) != n:
        raise ProtocolError(
            f"expected {n} masked carriers to match {n} signature carriers, "
            f"got {len(payload.masked)}"
        )
    received_digest = payload.digest(registry)

    _mask_stream(registry, payload.masked + payload.signature, verifier_key, inverse=True)

    masked_snapshot = tuple(registry.state_of(c.payload).to_jsonable() for c in payload.masked)
    signature_snapshot = tuple(
        registry.state_of(c.payload).to_jsonable() for c in payload.signature
    )

    # Bind the received masked copy under the signer key and compare per qubit.
    for i, carrier in enumerate(payload.masked):
        registry.apply_pauli(carrier.payload, qotp.pauli_at(signer_key, i))
    all_match = all(
        _same_qubit_state(registry.state_of(pm.payload), registry.state_of(ps.payload))
        for pm, ps in zip(payload.masked, payload.signature)
    )
    verified = 1 if all_match else 0
    # Recover the masked copy from the bound one.
    for i, carrier in enumerate(payload.masked):
        registry.apply_pauli_inverse(carrier.payload, qotp.pauli_at(signer_key, i))

    verdict_label = "v"
    registry.add(sv.make_qubit(1, 0, verdict_label) if verified == 0
                 else sv.make_qubit(0, 1, verdict_label))
    verdict_carrier = Carrier(id=verdict_label, band=BAND_SIGNAL, time_slot=2 * n,
                              payload=verdict_label)

    returned = CipherPayload(
        masked=payload.masked, signature=payload.signature, verdict_carrier=verdict_carrier
    )
    _mask_stream(registry, returned.all_carriers(), verifier_key, inverse=False)
    record = TrentRecord(
        received_digest=received_digest,
        masked_snapshot=masked_snapshot,
        signature_snapshot=signature_snapshot,
        verified=verified,
        returned_digest=returned.digest(registry),
    )
    return returned, record


def _read_basis_bit(state: PureState) -> int:
    amps = np.abs(state.amps)
    bit = int(np.argmax(amps))
    if abs(amps[bit] - 1.0) > EQUALITY_TOL:
        raise ProtocolError("verification qubit is not a computational basis state")
    return bit


def bob_verify_and_compare(
    payload: CipherPayload,
    bell_results: Sequence[BellOutcome],
    bob_labels: Sequence,
    verifier_key: KeyBits,
    registry: QuantumRegistry,
) -> CompareReport:
    """Verifier's turn: decrypt the return leg, honor the verification bit,
    then teleport-correct each held half and compare it with the delivered
    masked qubit."""
    n = len(payload.signature)
    if payload.verdict_carrier is None:
        raise ProtocolError("return payload carries no verification qubit")
    if len(bob_labels) != n or len(bell_results) != n:
        raise ProtocolError("verifier context does not match payload size")

    _mask_stream(registry, payload.all_carriers(), verifier_key, inverse=True)

    verify_bit = _read_basis_bit(registry.state_of(payload.verdict_carrier.payload))
    if verify_bit == 0:
        return CompareReport(CompareResult.REJECT, 0, ())

    per_qubit = []
    for i in range(n):
        registry.apply_pauli(bob_labels[i], sv.teleport_correction(bell_results[i]))
        per_qubit.append(
            _same_qubit_state(
                registry.state_of(bob_labels[i]),
                registry.state_of(payload.masked[i].payload),
            )
        )
    result = CompareResult.MATCH_OK if all(per_qubit) else CompareResult.MISMATCH
    return CompareReport(result, 1, tuple(per_qubit))


def publish_pad(board: PublicBoard, pad: KeyBits) -> None:
    """Signer posts her pad; the board is tamper-free and append-only."""
    board.post("alice", pad.to_jsonable())


def bob_recover(
    masked_states: Sequence[PureState], pad: KeyBits
) -> tuple[PureState, ...]:
    """Unmask the delivered message copy with the published pad."""
    return qotp.decrypt(masked_states, pad)


def verify_signature_pair(
    signature_states: Sequence[PureState],
    pad: KeyBits,
    spec: MessageSpec,
    signer_key: KeyBits,
) -> bool:
    """Final validity check of the held (signature, pad) pair.

    Rebuilds pad-masked-then-bound copies from the message spec and compares
    them per qubit against the held signature states.
    """
    if len(signature_states) != spec.n:
        raise ProtocolError("signature length does not match the message spec")
    fresh = tuple(
        spec.qubit(i, state.labels[0]) for i, state in enumerate(signature_states)
    )
    expected = qotp.encrypt(qotp.encrypt(fresh, pad), signer_key)
    return all(
        sv.equal_up_to_phase(e, s, EQUALITY_TOL)
        for e, s in zip(expected, signature_states)
    )


def arbitrate(record: TrentRecord, alice_claim: Claim, bob_claim: Claim) -> Verdict:
    """Pure dispute function of the arbiter's record and the parties' claims.

    A failed verification bit is the one thing the arbiter witnessed
    himself. Anything about the teleport comparison or the published pad
    lies outside his record (no Bell results, no verifier qubits, no pad),
    so a live dispute there is undecidable for him.
    """
    if record.verified == 0:
        return Verdict.SIGNATURE_INVALID
    disputed = bob_claim.statement in _DISPUTE_STATEMENTS or (
        alice_claim.statement in _DISPUTE_STATEMENTS
    )
    if disputed:
        return Verdict.INCONCLUSIVE
    return Verdict.NO_DISPUTE
