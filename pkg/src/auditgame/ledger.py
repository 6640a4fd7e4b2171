"""Signature-backed artificial currency: coins, spend receipts, and an
append-only approved-receipt store.

A coin binds an owner's public key and metadata under the administrator's
signature, so counterfeits fail verification.  Spending is two-phase: the
ledger issues a random challenge for a raw receipt, the owner signs the
(receipt, challenge) pair, and approval requires the owner match, fresh
coins, and a valid signature.  Approved receipts are persisted one record
per line and replayed (with full re-verification) on load.

Secret keys never pass through ledger operations; signing happens on the
owner's side via `sign_receipt`.
"""

from __future__ import annotations

import hashlib
import hmac as hmac_mod
import json
import os
import secrets
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from .errors import InputError


class SignatureScheme(ABC):
    """Abstract signature primitive: key generation, signing, verification.

    Contract: verification accepts exactly the signatures produced with
    the matching secret key (up to the scheme's security level), and
    `verify` is deterministic on identical inputs.
    """

    security_parameter: int = 0

    @abstractmethod
    def gen(self) -> tuple:
        """Return a fresh (secret_key, public_key) pair of byte strings."""

    @abstractmethod
    def sign(self, sk: bytes, message: bytes) -> bytes:
        ...

    @abstractmethod
    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        ...


class Ed25519Scheme(SignatureScheme):
    """Production scheme backed by Ed25519 (128-bit security level)."""

    security_parameter = 128

    def __init__(self):
        from cryptography.hazmat.primitives.asymmetric import ed25519
        self._ed25519 = ed25519

    def gen(self) -> tuple:
        private = self._ed25519.Ed25519PrivateKey.generate()
        from cryptography.hazmat.primitives import serialization
        sk = private.private_bytes(
            serialization.Encoding.Raw,
            serialization.PrivateFormat.Raw,
            serialization.NoEncryption(),
        )
        pk = private.public_key().public_bytes(
            serialization.Encoding.Raw, serialization.PublicFormat.Raw
        )
        return sk, pk

    def sign(self, sk: bytes, message: bytes) -> bytes:
        return self._ed25519.Ed25519PrivateKey.from_private_bytes(sk).sign(message)

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        try:
            self._ed25519.Ed25519PublicKey.from_public_bytes(pk).verify(signature, message)
            return True
        except Exception:
            return False


class DeterministicScheme(SignatureScheme):
    """Seeded test double: MAC-style signatures keyed off the public key.

    Reproducible given the seed and self-contained across processes, so
    tampered messages and mismatched keys are rejected honestly.  Anyone
    who knows the construction can forge, so it carries no real security;
    it exists for reproducible unit tests only.  Distinct parties should
    use distinct seeds, otherwise they share a key sequence.
    """

    security_parameter = 32

    def __init__(self, seed: int = 0):
        import random
        self._rng = random.Random(seed)

    @staticmethod
    def _pk_for(sk: bytes) -> bytes:
        return b"td:" + hashlib.sha256(b"pk" + sk).digest()[:16]

    @staticmethod
    def _mac_key(pk: bytes) -> bytes:
        return hashlib.sha256(b"mac" + pk).digest()

    def gen(self) -> tuple:
        sk = self._rng.getrandbits(256).to_bytes(32, "big")
        return sk, self._pk_for(sk)

    def sign(self, sk: bytes, message: bytes) -> bytes:
        return hmac_mod.new(self._mac_key(self._pk_for(sk)), message, hashlib.sha256).digest()

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        expected = hmac_mod.new(self._mac_key(pk), message, hashlib.sha256).digest()
        return hmac_mod.compare_digest(expected, signature)


def keygen(scheme: SignatureScheme) -> tuple:
    """Fresh (secret_key, public_key) pair from the scheme."""
    sk, pk = scheme.gen()
    if not sk or not pk:
        raise RuntimeError("signature scheme produced an empty key")
    return sk, pk


# -- value objects -------------------------------------------------------


@dataclass(frozen=True)
class CoinMetadata:
    coin_id: int
    valid_from: str = ""
    valid_to: str = ""
    issuer_note: str = ""

    def to_dict(self) -> dict:
        return {
            "coin_id": self.coin_id,
            "valid_from": self.valid_from,
            "valid_to": self.valid_to,
            "issuer_note": self.issuer_note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoinMetadata":
        return cls(coin_id=int(d["coin_id"]), valid_from=d.get("valid_from", ""),
                   valid_to=d.get("valid_to", ""), issuer_note=d.get("issuer_note", ""))


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class Coin:
    owner_pk: bytes
    metadata: CoinMetadata
    issuer_sig: bytes

    @staticmethod
    def signed_payload(owner_pk: bytes, metadata: CoinMetadata) -> bytes:
        return _canonical({"owner_pk": owner_pk.hex(), "metadata": metadata.to_dict()})

    @property
    def key(self) -> tuple:
        """Ledger identity of the coin: unique per (owner, coin_id)."""
        return (self.owner_pk.hex(), self.metadata.coin_id)

    def to_dict(self) -> dict:
        return {
            "owner_pk": self.owner_pk.hex(),
            "metadata": self.metadata.to_dict(),
            "issuer_sig": self.issuer_sig.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Coin":
        return cls(
            owner_pk=bytes.fromhex(d["owner_pk"]),
            metadata=CoinMetadata.from_dict(d["metadata"]),
            issuer_sig=bytes.fromhex(d["issuer_sig"]),
        )


@dataclass(frozen=True)
class RawReceipt:
    """Pre-challenge purchase description: goods, price, and the coins offered."""

    goods: str
    price: int
    coins: tuple

    def __post_init__(self):
        coins = tuple(self.coins)
        if not coins:
            raise InputError("a receipt must list at least one coin")
        owners = {c.owner_pk for c in coins}
        if len(owners) != 1:
            raise InputError("all coins in one receipt must share a single owner key")
        if len({c.key for c in coins}) != len(coins):
            raise InputError("a receipt lists each coin at most once")
        if self.price < 0:
            raise InputError("price cannot be negative")
        object.__setattr__(self, "coins", coins)

    @property
    def owner_pk(self) -> bytes:
        return self.coins[0].owner_pk

    def to_dict(self) -> dict:
        return {
            "goods": self.goods,
            "price": self.price,
            "coins": [c.to_dict() for c in self.coins],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RawReceipt":
        return cls(goods=d["goods"], price=int(d["price"]),
                   coins=tuple(Coin.from_dict(c) for c in d["coins"]))

    def canonical_bytes(self) -> bytes:
        return _canonical(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


@dataclass(frozen=True)
class Receipt:
    raw: RawReceipt
    challenge: bytes        # 128-bit value issued by the ledger
    user_sig: bytes

    @staticmethod
    def signed_payload(raw: RawReceipt, challenge: bytes) -> bytes:
        return _canonical({"challenge": challenge.hex(), "receipt": raw.to_dict()})

    def to_dict(self) -> dict:
        return {
            "goods": self.raw.goods,
            "price": self.raw.price,
            "coins": [c.to_dict() for c in self.raw.coins],
            "challenge": self.challenge.hex(),
            "user_sig": self.user_sig.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Receipt":
        raw = RawReceipt(goods=d["goods"], price=int(d["price"]),
                         coins=tuple(Coin.from_dict(c) for c in d["coins"]))
        return cls(raw=raw, challenge=bytes.fromhex(d["challenge"]),
                   user_sig=bytes.fromhex(d["user_sig"]))


def sign_receipt(scheme: SignatureScheme, sk: bytes, raw: RawReceipt,
                 challenge: bytes) -> Receipt:
    """Owner-side helper: sign (raw receipt, challenge) with one's own key."""
    sig = scheme.sign(sk, Receipt.signed_payload(raw, challenge))
    return Receipt(raw=raw, challenge=challenge, user_sig=sig)


@dataclass(frozen=True)
class SpendOutcome:
    approved: bool
    reason: Optional[str] = None   # double-spend | bad-signature | invalid-coin |
                                   # owner-mismatch | unknown-challenge | expired-challenge

    def __bool__(self):
        return self.approved


# -- the ledger ----------------------------------------------------------


class LedgerState:
    """Administrator-side state: keys, approved receipts, spent coins,
    pending challenges.

    `finalize_spend` serializes its spent-set check, log append, and
    spend marking through one lock; signature checks run outside it on
    immutable data.
    """

    CHALLENGE_BYTES = 16

    def __init__(self, scheme: SignatureScheme, admin_sk: bytes, admin_pk: bytes,
                 log_path=None, challenge_ttl: float = 600.0, rng=None, clock=None):
        self.scheme = scheme
        self._admin_sk = admin_sk
        self.admin_pk = admin_pk
        self.log_path = log_path
        self.challenge_ttl = challenge_ttl
        self._rng = rng
        self._clock = clock or time.monotonic
        self._lock = threading.Lock()
        self.approved: list = []
        self._spent: set = set()
        self._issued: set = set()
        self._pending: dict = {}   # r0 digest -> {challenge bytes: deadline}

    @classmethod
    def create(cls, scheme: SignatureScheme, log_path=None, **kwargs) -> "LedgerState":
        sk, pk = keygen(scheme)
        return cls(scheme, sk, pk, log_path=log_path, **kwargs)

    @classmethod
    def load(cls, scheme: SignatureScheme, admin_sk: bytes, admin_pk: bytes,
             log_path, **kwargs) -> "LedgerState":
        """Rebuild from the approved-receipt log, re-verifying every record."""
        state = cls(scheme, admin_sk, admin_pk, log_path=log_path, **kwargs)
        if log_path and os.path.exists(log_path):
            with open(log_path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    receipt = Receipt.from_dict(json.loads(line))
                    problem = state._receipt_integrity_problem(receipt)
                    if problem:
                        raise InputError(f"log line {lineno} fails re-verification: {problem}")
                    for coin in receipt.raw.coins:
                        if coin.key in state._spent:
                            raise InputError(f"log line {lineno} double-spends coin {coin.key}")
                        state._spent.add(coin.key)
                        state._issued.add(coin.key)
                    state.approved.append(receipt)
        return state

    # -- coins ---------------------------------------------------------

    def mint(self, recipient_pk: bytes, metadata: CoinMetadata) -> Coin:
        with self._lock:
            key = (recipient_pk.hex(), metadata.coin_id)
            if key in self._issued:
                raise InputError(
                    f"coin id {metadata.coin_id} was already issued to this recipient"
                )
            self._issued.add(key)
        sig = self.scheme.sign(self._admin_sk, Coin.signed_payload(recipient_pk, metadata))
        return Coin(owner_pk=recipient_pk, metadata=metadata, issuer_sig=sig)

    def verify_coin(self, coin: Coin) -> bool:
        return verify_coin(self.scheme, self.admin_pk, coin)

    # -- two-phase spending ---------------------------------------------

    def begin_spend(self, raw: RawReceipt) -> bytes:
        """Issue a fresh 128-bit challenge for the raw receipt."""
        if not isinstance(raw, RawReceipt):
            raise InputError("begin_spend expects a RawReceipt")
        if self._rng is not None:
            challenge = self._rng.getrandbits(8 * self.CHALLENGE_BYTES).to_bytes(
                self.CHALLENGE_BYTES, "big")
        else:
            challenge = secrets.token_bytes(self.CHALLENGE_BYTES)
        deadline = self._clock() + self.challenge_ttl
        with self._lock:
            self._pending.setdefault(raw.digest(), {})[challenge] = deadline
        return challenge

    def pending_challenges(self, raw: RawReceipt) -> tuple:
        """Challenges still usable for this raw receipt (expired ones drop out)."""
        now = self._clock()
        with self._lock:
            challenges = self._pending.get(raw.digest(), {})
            live = {z: d for z, d in challenges.items() if d >= now}
            if len(live) != len(challenges):
                if live:
                    self._pending[raw.digest()] = live
                else:
                    self._pending.pop(raw.digest(), None)
            return tuple(live)

    def _receipt_integrity_problem(self, receipt: Receipt) -> Optional[str]:
        """Signature and ownership checks; no spent-set or challenge state."""
        signer_pk = receipt.raw.owner_pk
        for coin in receipt.raw.coins:
            if coin.owner_pk != signer_pk:
                return "owner-mismatch"
            if not self.verify_coin(coin):
                return "invalid-coin"
        payload = Receipt.signed_payload(receipt.raw, receipt.challenge)
        if not self.scheme.verify(signer_pk, payload, receipt.user_sig):
            return "bad-signature"
        return None

    def finalize_spend(self, receipt: Receipt) -> SpendOutcome:
        """Approve or reject; on approval the receipt is appended and its
        coins are marked spent atomically."""
        if not isinstance(receipt, Receipt):
            raise InputError("finalize_spend expects a Receipt")
        problem = self._receipt_integrity_problem(receipt)
        if problem:
            return SpendOutcome(False, problem)

        digest = receipt.raw.digest()
        now = self._clock()
        with self._lock:
            challenges = self._pending.get(digest, {})
            deadline = challenges.get(receipt.challenge)
            if deadline is None:
                return SpendOutcome(False, "unknown-challenge")
            if now > deadline:
                del challenges[receipt.challenge]
                return SpendOutcome(False, "expired-challenge")
            for coin in receipt.raw.coins:
                if coin.key in self._spent:
                    return SpendOutcome(False, "double-spend")
            # All checks passed: commit.
            for coin in receipt.raw.coins:
                self._spent.add(coin.key)
            del challenges[receipt.challenge]
            if not challenges:
                self._pending.pop(digest, None)
            self.approved.append(receipt)
            if self.log_path:
                with open(self.log_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(receipt.to_dict(), sort_keys=True) + "\n")
        return SpendOutcome(True)

    def is_spent(self, coin: Coin) -> bool:
        with self._lock:
            return coin.key in self._spent


def verify_coin(scheme: SignatureScheme, admin_pk: bytes, coin: Coin) -> bool:
    """True exactly when the administrator's signature on the coin verifies."""
    payload = Coin.signed_payload(coin.owner_pk, coin.metadata)
    return scheme.verify(admin_pk, payload, coin.issuer_sig)


def mint(ledger: LedgerState, recipient_pk: bytes, metadata: CoinMetadata) -> Coin:
    return ledger.mint(recipient_pk, metadata)


def begin_spend(ledger: LedgerState, raw: RawReceipt) -> bytes:
    return ledger.begin_spend(raw)


def finalize_spend(ledger: LedgerState, receipt: Receipt) -> SpendOutcome:
    return ledger.finalize_spend(receipt)
