"""The three party roles: data provider, analyst (prover) and verifier.

Board payload formats (all JSON, big integers as decimal strings):

* ``commitment``: the commitment value as a bare decimal string;
* ``result``: ``{"range": [...], "med": "...", "coms": [...]}``;
* ``proof``: ``{"result_index": i, "backend_id": "...", "proof": "<hex>"}``.

Provider order is the board index order of commitment entries.
"""

import json
import secrets
import time
from dataclasses import dataclass, field

from ..backend import Proof, get_backend
from ..constraints import gen_witness
from ..errors import DomainError, IncompleteBoardError, InputShapeError, KeyMismatchError
from ..hash_commit import Commitment, commit, hash_instance


@dataclass(frozen=True)
class Opening:
    """What a provider sends the analyst over the private channel."""

    owner: str
    x: int
    r: int


@dataclass(frozen=True)
class ProviderRecord:
    owner: str
    x: int
    r: int
    c: Commitment
    board_index: int

    @property
    def opening(self):
        return Opening(self.owner, self.x, self.r)


def provider_commit(owner, x, params, board, rng=None):
    """Commit to ``x`` with fresh randomness and post the commitment."""
    if x not in params.range:
        raise DomainError(f"input {x!r} is not an element of the query range")
    rng = rng or secrets.SystemRandom()
    r = rng.randrange(params.p)
    c = commit(x, r, hash_instance(params.hash_id, params.p))
    idx = board.append(owner, "commitment", str(c.value))
    return ProviderRecord(owner, x, r, c, idx)


def commitment_entries(board):
    return [e for e in board.entries() if e.kind == "commitment"]


def order_openings(board, openings, m):
    """Arrange openings to match the board order of the owners' commitments."""
    by_owner = {o.owner: o for o in openings}
    if len(by_owner) != len(openings):
        raise InputShapeError("duplicate provider in openings")
    owners = [e.owner for e in commitment_entries(board)][:m]
    if sorted(owners) != sorted(by_owner):
        raise InputShapeError("openings do not match the providers on the board")
    return [by_owner[o] for o in owners]


@dataclass(frozen=True)
class ProveResult:
    med: int
    coms: list
    proof: Proof
    range: list
    timings: dict = field(default_factory=dict, compare=False)

    def result_payload(self):
        return json.dumps(
            {"coms": [str(c) for c in self.coms], "med": str(self.med), "range": [str(v) for v in self.range]},
            sort_keys=True,
        )


def verexp_prove(pk, params, openings, backend=None):
    """Witness generation plus proving; ``openings`` are in provider order."""
    backend = backend or get_backend(pk.backend_id)
    if pk.params_digest != params.digest:
        raise KeyMismatchError("proving key was generated for different parameters")
    if len(openings) != params.m:
        raise InputShapeError(f"expected {params.m} provider openings, got {len(openings)}")
    t0 = time.perf_counter()
    witness, _ = gen_witness(params, [o.x for o in openings], [o.r for o in openings])
    t1 = time.perf_counter()
    outputs, proof = backend.prove(pk, params.range, witness)
    t2 = time.perf_counter()
    return ProveResult(
        med=outputs["med"],
        coms=list(outputs["coms"]),
        proof=proof,
        range=list(params.range),
        timings={"witness": t1 - t0, "prove": t2 - t1},
    )


def post_result(board, owner, result):
    """Post the result entry, then the proof entry pointing at it."""
    ridx = board.append(owner, "result", result.result_payload())
    payload = json.dumps(
        {"backend_id": result.proof.backend_id, "proof": result.proof.to_bytes().hex(), "result_index": ridx},
        sort_keys=True,
    )
    pidx = board.append(owner, "proof", payload)
    return ridx, pidx


@dataclass(frozen=True)
class Verdict:
    accept: bool
    reason: str
    med: int = None

    def __bool__(self):
        return self.accept


def _latest_result(entries):
    proofs = [e for e in entries if e.kind == "proof"]
    if not proofs:
        raise IncompleteBoardError("no proof has been posted")
    doc = json.loads(proofs[-1].payload)
    ridx = int(doc["result_index"])
    if not 0 <= ridx < len(entries) or entries[ridx].kind != "result":
        raise IncompleteBoardError(f"proof refers to missing result entry {ridx}")
    return json.loads(entries[ridx].payload), Proof.from_bytes(bytes.fromhex(doc["proof"]))


def verexp_verify(vk, params, board, backend=None):
    """Accept iff the proof verifies and every board commitment equals the circuit's.

    Uses only public data: the board, the parameters and the verifying key.
    """
    backend = backend or get_backend(vk.backend_id)
    entries = board.entries()
    posted = [e for e in entries if e.kind == "commitment"]
    if len(posted) < params.m:
        raise IncompleteBoardError(f"{len(posted)} of {params.m} provider commitments on the board")
    try:
        result, proof = _latest_result(entries)
    except (ValueError, KeyError, TypeError) as exc:
        return Verdict(False, f"malformed result or proof entry: {exc}")
    if len(posted) > params.m:
        return Verdict(False, f"{len(posted)} commitments posted for m={params.m} providers")
    if vk.params_digest != params.digest:
        return Verdict(False, "verifying key is bound to different parameters")
    try:
        rng = [int(v) for v in result["range"]]
        med = int(result["med"])
        coms = [int(c) for c in result["coms"]]
    except (KeyError, TypeError, ValueError) as exc:
        return Verdict(False, f"malformed result entry: {exc}")
    if rng != list(params.range):
        return Verdict(False, "posted range differs from the query range")
    if len(coms) != params.m:
        return Verdict(False, "result carries the wrong number of commitments")
    if not backend.verify(vk, list(params.range), {"med": med, "coms": coms}, proof):
        return Verdict(False, "proof does not verify", med)
    for i, (entry, com) in enumerate(zip(posted, coms)):
        if entry.payload.strip() != str(com):
            return Verdict(False, f"commitment {i} on the board differs from the circuit's", med)
    return Verdict(True, "accepted", med)
