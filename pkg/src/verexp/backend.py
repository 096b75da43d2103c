"""Proof backends behind a setup / prove / verify interface.

The built-in ``mock`` backend is transparent: it checks the constraint
system directly and authenticates the public statement with an HMAC keyed
by a secret that also sits in the verifying key.  It gives completeness and
tamper detection for testing.  It gives NO zero-knowledge and NO
cryptographic soundness: anyone holding the verifying key can forge proofs.

Other backends register under the ``verexp.backends`` entry-point group and
are loaded by name.
"""

import hashlib
import hmac
import json
import math
import os
import struct
from dataclasses import dataclass, field
from importlib.metadata import entry_points

from .constraints.r1cs import check_satisfied
from .errors import (
    BackendUnavailableError,
    InputShapeError,
    KeyMismatchError,
    ProofRefusedError,
    SetupError,
)

PROOF_MAGIC = b"VXPF"
PK_MAGIC = b"VXPK"
VK_MAGIC = b"VXVK"
CONTAINER_VERSION = 1
ENTRY_POINT_GROUP = "verexp.backends"


def _pack(magic, header, payload):
    h = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    return magic + struct.pack("<HI", CONTAINER_VERSION, len(h)) + h + struct.pack("<I", len(payload)) + payload


def _unpack(magic, data):
    data = bytes(data)
    if len(data) < 10 or data[:4] != magic:
        raise InputShapeError("unrecognized container")
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != CONTAINER_VERSION:
        raise InputShapeError(f"unsupported container version {version}")
    pos = 10 + hlen
    if len(data) < pos + 4:
        raise InputShapeError("truncated container")
    header = json.loads(data[10:pos])
    (plen,) = struct.unpack_from("<I", data, pos)
    payload = data[pos + 4 :]
    if len(payload) != plen:
        raise InputShapeError("truncated container payload")
    return header, payload


def statement_bytes(backend_id, params_digest, cs_digest, public_inputs, outputs):
    """Canonical encoding of the statement a proof speaks about."""
    doc = {
        "backend": backend_id,
        "coms": [str(c) for c in outputs["coms"]],
        "cs": cs_digest,
        "med": str(outputs["med"]),
        "params": params_digest,
        "range": [str(v) for v in public_inputs],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


@dataclass
class ProvingKey:
    backend_id: str
    params_digest: str
    cs_digest: str
    security: int
    secret: bytes
    num_range: int
    cs: object = field(default=None, repr=False, compare=False)

    def to_bytes(self):
        return _pack(PK_MAGIC, self._header(), self.secret)

    def _header(self):
        return {
            "backend_id": self.backend_id,
            "cs_digest": self.cs_digest,
            "lambda": self.security,
            "num_range": self.num_range,
            "params_digest": self.params_digest,
        }

    @classmethod
    def from_bytes(cls, data):
        h, payload = _unpack(PK_MAGIC, data)
        return cls(h["backend_id"], h["params_digest"], h["cs_digest"], h["lambda"], payload, h["num_range"])

    def attach(self, cs):
        """Re-attach the constraint system after loading the key from disk."""
        if cs.digest() != self.cs_digest:
            raise KeyMismatchError("constraint system does not match the proving key")
        self.cs = cs
        return self


@dataclass(frozen=True)
class VerifyingKey:
    backend_id: str
    params_digest: str
    cs_digest: str
    security: int
    secret: bytes
    num_range: int

    def to_bytes(self):
        header = {
            "backend_id": self.backend_id,
            "cs_digest": self.cs_digest,
            "lambda": self.security,
            "num_range": self.num_range,
            "params_digest": self.params_digest,
        }
        return _pack(VK_MAGIC, header, self.secret)

    @classmethod
    def from_bytes(cls, data):
        h, payload = _unpack(VK_MAGIC, data)
        return cls(h["backend_id"], h["params_digest"], h["cs_digest"], h["lambda"], payload, h["num_range"])

    def digest(self):
        return hashlib.sha256(self.to_bytes()).hexdigest()


@dataclass(frozen=True)
class KeyMaterial:
    pp: bytes
    pk: ProvingKey
    vk: VerifyingKey
    backend_id: str
    params_digest: str


@dataclass(frozen=True)
class Proof:
    backend_id: str
    payload: bytes
    public_io_digest: str
    security: int = 128

    def to_bytes(self):
        header = {
            "backend_id": self.backend_id,
            "lambda": self.security,
            "public_io_digest": self.public_io_digest,
        }
        return _pack(PROOF_MAGIC, header, self.payload)

    @classmethod
    def from_bytes(cls, data):
        h, payload = _unpack(PROOF_MAGIC, data)
        return cls(h["backend_id"], payload, h["public_io_digest"], h["lambda"])


class MockBackend:
    backend_id = "mock"

    def tag_length(self, security):
        return max(32, math.ceil(2 * security / 8))

    def setup(self, cs, security=128, seed=None):
        if not isinstance(security, int) or not 1 <= security <= 256:
            raise SetupError("security parameter must be an integer in [1, 256]")
        try:
            cs.check_well_formed()
        except InputShapeError as exc:
            raise SetupError(f"malformed constraint system: {exc}") from exc
        cs_digest = cs.digest()
        if seed is None:
            secret = os.urandom(32)
        else:
            secret = hashlib.sha3_256(b"verexp/mock-setup:" + cs_digest.encode() + b":" + str(seed).encode()).digest()
        num_range = _num_range(cs)
        pk = ProvingKey(self.backend_id, cs.params_digest, cs_digest, security, secret, num_range, cs)
        vk = VerifyingKey(self.backend_id, cs.params_digest, cs_digest, security, secret, num_range)
        pp = json.dumps(
            {"backend_id": self.backend_id, "lambda": security, "params_digest": cs.params_digest},
            sort_keys=True,
        ).encode()
        return KeyMaterial(pp, pk, vk, self.backend_id, cs.params_digest)

    def _tag(self, key, message):
        return hmac.new(key.secret, message, hashlib.sha3_512).digest()[: self.tag_length(key.security)]

    def prove(self, pk, public_inputs, witness):
        if pk.backend_id != self.backend_id:
            raise KeyMismatchError(f"proving key belongs to backend {pk.backend_id!r}")
        cs = pk.cs
        if cs is None:
            raise KeyMismatchError("proving key has no constraint system attached")
        if cs.params_digest != pk.params_digest:
            raise KeyMismatchError("constraint system and proving key disagree on params digest")
        if len(witness) != cs.num_vars:
            raise ProofRefusedError(f"witness has {len(witness)} wires, system has {cs.num_vars}")
        if not check_satisfied(cs, witness):
            raise ProofRefusedError("witness does not satisfy the constraint system")
        pub = [witness[i] for i in cs.public_indices]
        n = pk.num_range
        public_inputs = [int(v) for v in public_inputs]
        if pub[:n] != [v % cs.p for v in public_inputs]:
            raise ProofRefusedError("public inputs differ from the witness's range wires")
        outputs = {"med": pub[n], "coms": pub[n + 1 :]}
        message = statement_bytes(self.backend_id, pk.params_digest, pk.cs_digest, public_inputs, outputs)
        proof = Proof(self.backend_id, self._tag(pk, message), hashlib.sha256(message).hexdigest(), pk.security)
        return outputs, proof

    def verify(self, vk, public_inputs, outputs, proof):
        try:
            if proof.backend_id != self.backend_id or vk.backend_id != self.backend_id:
                return False
            if len(proof.payload) != self.tag_length(vk.security) or proof.security != vk.security:
                return False
            if len(public_inputs) != vk.num_range:
                return False
            message = statement_bytes(
                self.backend_id, vk.params_digest, vk.cs_digest, [int(v) for v in public_inputs], outputs
            )
            if proof.public_io_digest != hashlib.sha256(message).hexdigest():
                return False
            return hmac.compare_digest(self._tag(vk, message), proof.payload)
        except (KeyError, TypeError, ValueError):
            return False


def _num_range(cs):
    """Range wires lead the public wires; med and one wire per commitment follow."""
    if not 0 < cs.num_range < len(cs.public_indices):
        raise SetupError("constraint system does not record its public layout")
    return cs.num_range


_BUILTIN = {"mock": MockBackend}


def get_backend(name="mock"):
    if name in _BUILTIN:
        return _BUILTIN[name]()
    for ep in entry_points(group=ENTRY_POINT_GROUP):
        if ep.name == name or name == "external":
            return ep.load()()
    raise BackendUnavailableError(
        f"backend {name!r} is not available; install a package providing the {ENTRY_POINT_GROUP!r} entry point"
    )


def available_backends():
    return sorted(set(_BUILTIN) | {ep.name for ep in entry_points(group=ENTRY_POINT_GROUP)})
