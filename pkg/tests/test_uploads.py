"""Two-stage upload handshake: integrity, one-shot tokens, expiry."""

from __future__ import annotations

import hashlib
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airaxiv.blobs import MemoryBlobStore
from airaxiv.errors import (Conflict, GoneError, IntegrityMismatch, NotFound,
                            PayloadTooLarge, TokenAlreadyConsumed,
                            ValidationFailed)
from airaxiv.ids import IdFactory
from airaxiv.store import MemoryStore
from airaxiv.uploads import UploadGateway

from conftest import ManualClock


@pytest.fixture
def clock():
    return ManualClock()


@pytest.fixture
def blobs():
    return MemoryBlobStore()


@pytest.fixture
def gateway(clock, blobs):
    store = MemoryStore()
    ids = IdFactory(clock=clock, rng=random.Random(7))
    return UploadGateway(store, blobs, ids, clock, max_bytes=2 * 1024 * 1024)


def full_handshake(gateway, data, declared=None, provided=None):
    created = gateway.create_upload(filename="f.pdf", sha256=declared)
    gateway.receive_bytes(created["upload_id"], data)
    return gateway.complete(created["upload_id"], sha256=provided)


def test_happy_path_yields_one_time_token(gateway):
    data = b"%PDF- fake body"
    digest = hashlib.sha256(data).hexdigest()
    view = full_handshake(gateway, data, declared=digest, provided=digest)
    assert view["state"] == "completed"
    assert view["sha256"] == digest
    assert view["size"] == len(data)
    blob_ref = gateway.consume(view["pdf_file_id"])
    assert blob_ref  # content address handed to the paper pipeline


def test_known_digest_oracles(gateway):
    empty = full_handshake(gateway, b"")
    assert empty["sha256"] == ("e3b0c44298fc1c149afbf4c8996fb924"
                               "27ae41e4649b934ca495991b7852b855")
    abc = full_handshake(gateway, b"abc")
    assert abc["sha256"] == ("ba7816bf8f01cfea414140de5dae2223"
                             "b00361a396177a9cb410ff61f20015ad")


def test_mismatched_digest_rejected_and_session_expired(gateway, blobs):
    data = b"real bytes"
    wrong = hashlib.sha256(b"other bytes").hexdigest()
    created = gateway.create_upload(filename="f.pdf")
    gateway.receive_bytes(created["upload_id"], data)
    with pytest.raises(IntegrityMismatch) as exc_info:
        gateway.complete(created["upload_id"], sha256=wrong)
    message = str(exc_info.value)
    assert wrong in message
    assert hashlib.sha256(data).hexdigest() in message
    assert gateway.get_session(created["upload_id"]).state == "expired"
    assert len(blobs.list_addresses()) == 0  # no orphan bytes


def test_declared_digest_checked_without_provided(gateway):
    declared = hashlib.sha256(b"expected").hexdigest()
    created = gateway.create_upload(filename="f.pdf", sha256=declared)
    gateway.receive_bytes(created["upload_id"], b"different")
    with pytest.raises(IntegrityMismatch):
        gateway.complete(created["upload_id"])


def test_complete_without_bytes_conflicts(gateway):
    created = gateway.create_upload(filename="f.pdf")
    with pytest.raises(Conflict):
        gateway.complete(created["upload_id"])


def test_double_complete_conflicts(gateway):
    view = full_handshake(gateway, b"x")
    with pytest.raises(Conflict):
        gateway.complete(view["upload_id"])


def test_token_single_use(gateway):
    view = full_handshake(gateway, b"abc")
    gateway.consume(view["pdf_file_id"])
    with pytest.raises(TokenAlreadyConsumed):
        gateway.consume(view["pdf_file_id"])


def test_unknown_token_not_found(gateway):
    with pytest.raises(NotFound):
        gateway.consume("pdf_nonexistent")


def test_oversize_upload_rejected(gateway):
    created = gateway.create_upload(filename="big.pdf")
    with pytest.raises(PayloadTooLarge):
        gateway.receive_bytes(created["upload_id"], b"x" * (2 * 1024 * 1024 + 1))


def test_bad_filename_rejected(gateway):
    with pytest.raises(ValidationFailed):
        gateway.create_upload(filename="notes.txt")


def test_bad_declared_digest_rejected(gateway):
    with pytest.raises(ValidationFailed):
        gateway.create_upload(filename="f.pdf", sha256="zz")


def test_expired_session_rejects_put_and_complete(gateway, clock):
    created = gateway.create_upload(filename="f.pdf")
    clock.advance(seconds=86400 + 1)
    with pytest.raises(GoneError):
        gateway.receive_bytes(created["upload_id"], b"late")
    with pytest.raises(GoneError):
        gateway.complete(created["upload_id"])


def test_expired_token_not_found_and_blob_released(gateway, clock, blobs):
    view = full_handshake(gateway, b"payload")
    assert len(blobs.list_addresses()) == 1
    clock.advance(seconds=86400 + 1)
    with pytest.raises(NotFound):
        gateway.consume(view["pdf_file_id"])
    assert len(blobs.list_addresses()) == 0


def test_sweep_expires_stale_sessions(gateway, clock, blobs):
    view = full_handshake(gateway, b"payload")
    gateway.create_upload(filename="f.pdf")  # stays open
    clock.advance(seconds=86400 + 1)
    assert gateway.sweep_expired() == 2
    assert gateway.get_session(view["upload_id"]).state == "expired"
    assert len(blobs.list_addresses()) == 0


def test_describe_applies_lazy_expiry(gateway, clock):
    created = gateway.create_upload(filename="f.pdf")
    clock.advance(seconds=86400 + 1)
    assert gateway.describe(created["upload_id"])["state"] == "expired"


def test_second_put_conflicts(gateway):
    created = gateway.create_upload(filename="f.pdf")
    gateway.receive_bytes(created["upload_id"], b"first")
    with pytest.raises(Conflict):
        gateway.receive_bytes(created["upload_id"], b"second")


def test_concurrent_consume_exactly_one_winner(gateway):
    view = full_handshake(gateway, b"contended")
    outcomes: list[str] = []
    lock = threading.Lock()
    barrier = threading.Barrier(8)

    def attempt():
        barrier.wait()
        try:
            gateway.consume(view["pdf_file_id"])
            result = "ok"
        except TokenAlreadyConsumed:
            result = "reused"
        with lock:
            outcomes.append(result)

    threads = [threading.Thread(target=attempt) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert outcomes.count("ok") == 1
    assert outcomes.count("reused") == 7


def test_concurrent_put_single_winner_consistent_digest(clock):
    store = MemoryStore()
    blobs = MemoryBlobStore()
    gateway = UploadGateway(store, blobs, IdFactory(clock=clock,
                                                    rng=random.Random(3)),
                            clock)
    created = gateway.create_upload(filename="f.pdf")
    payloads = [b"payload-a", b"payload-bb"]
    results: list = [None, None]
    barrier = threading.Barrier(2)

    def put(i):
        barrier.wait()
        try:
            results[i] = gateway.receive_bytes(created["upload_id"], payloads[i])
        except Conflict:
            results[i] = "conflict"

    threads = [threading.Thread(target=put, args=(i,)) for i in (0, 1)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    winners = [r for r in results if isinstance(r, dict)]
    assert len(winners) == 1
    completed = gateway.complete(created["upload_id"])
    winner_bytes = payloads[results.index(winners[0])]
    assert completed["sha256"] == hashlib.sha256(winner_bytes).hexdigest()
    blob_ref = gateway.consume(completed["pdf_file_id"])
    assert blobs.get(blob_ref) == winner_bytes


@given(data=st.binary(min_size=1, max_size=4096),
       tamper=st.booleans())
@settings(max_examples=60, deadline=None)
def test_integrity_property(data, tamper):
    """complete succeeds iff the provided digest matches the exact bytes."""
    clock = ManualClock()
    gateway = UploadGateway(MemoryStore(), MemoryBlobStore(),
                            IdFactory(clock=clock, rng=random.Random(1)),
                            clock)
    digest = hashlib.sha256(data).hexdigest()
    provided = digest
    if tamper:
        provided = hashlib.sha256(data + b"!").hexdigest()
    created = gateway.create_upload(filename="f.pdf")
    gateway.receive_bytes(created["upload_id"], data)
    if tamper:
        with pytest.raises(IntegrityMismatch):
            gateway.complete(created["upload_id"], sha256=provided)
    else:
        view = gateway.complete(created["upload_id"], sha256=provided)
        assert view["sha256"] == digest
