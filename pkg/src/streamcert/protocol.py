"""Shared prover/verifier plumbing: annotation chunks, transcripts, outcomes,
and cost accounting.

Annotation is measured in bits: every chunk pays a one-word length prefix
plus a one-word position tag on top of its fixed-width payload. Verifier
space is measured in words of live verifier state (field elements, counters,
hash descriptions); pure-function lookup tables that depend only on public
parameters (Lagrange coefficient rows, factorial tables) are recomputable
constants and are not charged.
"""

import hashlib
import random
import time
from dataclasses import dataclass, field as dfield

WORD_BITS = 64
CHUNK_OVERHEAD_BITS = 2 * WORD_BITS  # length prefix + position tag
COUNT_BITS = 64
STAGE_BITS = 16


class ConfigError(ValueError):
    """Bad scheme configuration, reported before any streaming begins."""


class Reject(Exception):
    """Raised inside a verifier when an annotation check fails."""


def id_bits(n: int) -> int:
    """Bits to name one element of a size-n universe."""
    return max(1, (max(n, 2) - 1).bit_length())


def derive_rng(seed, label: str) -> random.Random:
    """Independent RNG for one protocol role, stable across processes.

    Avoids seeding from tuple hashes, whose string components are salted per
    interpreter run."""
    digest = hashlib.sha256(f"{seed!r}|{label}".encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


@dataclass(frozen=True)
class Chunk:
    kind: str
    data: object
    bits: int


@dataclass(frozen=True)
class Outcome:
    """Scheme output: a value, or reject (bottom)."""

    value: object = None
    rejected: bool = False

    @classmethod
    def ok(cls, value):
        return cls(value=value, rejected=False)

    @classmethod
    def reject(cls):
        return cls(value=None, rejected=True)

    @property
    def accepted(self):
        return not self.rejected


@dataclass(frozen=True)
class RelaxedOutcome:
    """One-sided graph-scheme output: convinced, or not convinced.

    Not-convinced is a refusal, never a proof that the property fails, so
    this is deliberately a distinct type from Outcome.
    """

    convinced: bool

    @property
    def rejected(self):
        return not self.convinced

    @property
    def accepted(self):
        return self.convinced

    @property
    def value(self):
        return 1 if self.convinced else None


@dataclass
class CostReport:
    hcost_bits: int
    vcost_words: int
    vcost_bits: int
    wall_time: float


@dataclass
class RunResult:
    outcome: object
    cost: CostReport
    info: dict = dfield(default_factory=dict)

    @property
    def value(self):
        return self.outcome.value

    @property
    def rejected(self):
        return self.outcome.rejected

    @property
    def accepted(self):
        return not self.outcome.rejected


@dataclass
class Transcript:
    """Recorded annotated stream: start chunks, updates with any interleaved
    chunks, end chunks, and the total annotation bit count."""

    start_chunks: list
    updates: list
    update_chunks: list  # (update index, chunk) pairs
    end_chunks: list
    hcost_bits: int


class Prover:
    """Prover half of a scheme.

    Online provers see nothing at start() and each update exactly once via
    on_update(), so their annotation is prefix-causal by construction.
    Prescient provers receive the whole stream at construction time and set
    the class flag.
    """

    prescient = False

    def start(self):
        return []

    def on_update(self, u):
        return []

    def finish(self, query):
        return []


def build_transcript(prover: Prover, updates, query=None) -> Transcript:
    start = list(prover.start())
    mid = []
    for i, u in enumerate(updates):
        for c in prover.on_update(u):
            mid.append((i, c))
    end = list(prover.finish(query))
    bits = sum(c.bits + CHUNK_OVERHEAD_BITS for c in start)
    bits += sum(c.bits + CHUNK_OVERHEAD_BITS for _, c in mid)
    bits += sum(c.bits + CHUNK_OVERHEAD_BITS for c in end)
    return Transcript(start, list(updates), mid, end, bits)


def run_transcript(verifier, transcript: Transcript, query=None) -> RunResult:
    """Single sequential verifier pass over a recorded transcript."""
    t0 = time.perf_counter()
    peak = 0
    try:
        verifier.begin(transcript.start_chunks)
        peak = max(peak, verifier.words)
        mid = {}
        for i, c in transcript.update_chunks:
            mid.setdefault(i, []).append(c)
        for i, u in enumerate(transcript.updates):
            verifier.update(u)
            for c in mid.get(i, ()):
                verifier.interleaved(i, c)
        peak = max(peak, verifier.words)
        outcome = verifier.end(transcript.end_chunks, query)
    except Reject:
        outcome = Outcome.reject()
    peak = max(peak, verifier.words)
    extra_bits = getattr(verifier, "public_coin_bits", 0)
    cost = CostReport(
        hcost_bits=transcript.hcost_bits + extra_bits,
        vcost_words=peak,
        vcost_bits=peak * getattr(verifier, "word_bits", WORD_BITS),
        wall_time=time.perf_counter() - t0,
    )
    return RunResult(outcome, cost)


def run_protocol(verifier, prover, updates, query=None):
    """Drive prover and verifier over one stream; the transcript is the only
    channel between them."""
    transcript = build_transcript(prover, updates, query)
    return run_transcript(verifier, transcript, query), transcript


class Verifier:
    """Verifier half of a scheme; subclasses implement the three phases."""

    word_bits = WORD_BITS

    def begin(self, chunks):
        if chunks:
            raise Reject("unexpected start annotation")

    def update(self, u):
        raise NotImplementedError

    def interleaved(self, index, chunk):
        raise Reject("unexpected interleaved annotation")

    def end(self, chunks, query):
        raise NotImplementedError

    @property
    def words(self):
        return 0


def need(condition, why=""):
    """Check an annotation property, rejecting the run when it fails."""
    if not condition:
        raise Reject(why)


def resolve_prover(prover, honest_factory):
    """Run functions accept a Prover instance, a wrapper callable applied to
    the honest prover (how adversaries are injected), or None for honest."""
    if prover is None:
        return honest_factory()
    if isinstance(prover, Prover):
        return prover
    return prover(honest_factory())
