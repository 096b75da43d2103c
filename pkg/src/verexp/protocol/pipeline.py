"""End-to-end run: setup, provider commitments, proving, verification.

The transcript holds only deterministic data (board dump, keys digests,
outcome), so two runs with the same seed produce byte-identical transcripts.
Wall-clock timings are returned beside it.
"""

import json
import random
import time
from dataclasses import dataclass, field, replace

from ..backend import get_backend
from ..constraints import synthesize_main
from ..errors import IncompleteBoardError, PipelineError, VerExpError
from ..params import require_valid
from .board import MemoryBoard
from .parties import Opening, post_result, provider_commit, verexp_prove, verexp_verify

TAMPER_CLASSES = ("input", "rand", "med", "commitment", "range")
ANALYST = "analyst"


def provider_owner(i):
    return f"provider-{i:04d}"


@dataclass
class PipelineResult:
    accept: bool
    reason: str
    med: int
    transcript: dict
    timings: dict = field(default_factory=dict)

    def transcript_json(self):
        return json.dumps(self.transcript, sort_keys=True, indent=2)


def _phase(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except IncompleteBoardError:
        raise
    except VerExpError as exc:
        raise PipelineError(name, exc) from exc


def _other(values, v, rng):
    choices = [u for u in values if u != v]
    return rng.choice(choices)


def run_pipeline(params, inputs=None, seed=None, backend="mock", board=None, tamper=None, security=128):
    """Run all four roles in order and return the verifier's verdict with a transcript."""
    _phase("params", require_valid, params)
    if tamper is not None and tamper not in TAMPER_CLASSES:
        raise PipelineError("params", f"unknown tamper class {tamper!r}")
    be = get_backend(backend) if isinstance(backend, str) else backend
    board = board if board is not None else MemoryBoard()
    master = random.Random(seed) if seed is not None else random.SystemRandom()
    if inputs is None:
        inputs = [master.choice(params.range) for _ in range(params.m)]
    if len(inputs) != params.m:
        raise PipelineError("params", f"expected {params.m} provider inputs, got {len(inputs)}")
    timings = {}

    t = time.perf_counter()
    cs = _phase("setup", synthesize_main, params)
    keys = _phase("setup", be.setup, cs, security, seed)
    timings["setup"] = time.perf_counter() - t

    t = time.perf_counter()
    records = []
    for i, x in enumerate(inputs):
        prng = random.Random(f"{seed}/provider/{i}") if seed is not None else None
        target = board
        if tamper == "commitment" and i == 0:
            # provider 0's message is replaced on its way to the board
            target = _Rewriting(board, str(master.randrange(params.p)))
        records.append(_phase("commit", provider_commit, provider_owner(i), x, params, target, prng))
    timings["commit"] = time.perf_counter() - t

    openings = [rec.opening for rec in records]
    if tamper == "input":
        o = openings[0]
        openings[0] = Opening(o.owner, _other(params.range, o.x, master), o.r)
    elif tamper == "rand":
        o = openings[0]
        openings[0] = Opening(o.owner, o.x, (o.r + 1 + master.randrange(params.p - 1)) % params.p)

    result = _phase("prove", verexp_prove, keys.pk, params, openings, be)
    timings.update(result.timings)
    if tamper == "med":
        result = _replace(result, med=_other(params.range, result.med, master))
    elif tamper == "range":
        bad = list(result.range)
        bad[0] = bad[0] + 1 if bad[0] + 1 not in bad else max(bad) + 1
        result = _replace(result, range=bad)
    _phase("prove", post_result, board, ANALYST, result)

    t = time.perf_counter()
    verdict = _phase("verify", verexp_verify, keys.vk, params, board, be)
    timings["verify"] = time.perf_counter() - t

    transcript = {
        "accept": verdict.accept,
        "backend": be.backend_id,
        "board": [e.to_dict() for e in board.entries()],
        "med": str(verdict.med) if verdict.med is not None else None,
        "params": params.to_dict(),
        "params_digest": params.digest,
        "reason": verdict.reason,
        "seed": seed,
        "tamper": tamper,
        "vk_digest": keys.vk.digest(),
    }
    return PipelineResult(verdict.accept, verdict.reason, verdict.med, transcript, timings)


def _replace(result, **changes):
    return replace(result, **changes)


class _Rewriting:
    """Board wrapper that swaps the payload of the appends passing through it."""

    def __init__(self, board, payload):
        self.board, self.payload = board, payload

    def append(self, owner, kind, payload):
        return self.board.append(owner, kind, self.payload)
