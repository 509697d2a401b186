"""Persistence layer: typed CRUD, serialized mutation, export round-trips."""

from __future__ import annotations

import threading

import pytest

from airaxiv.domain import Principal
from airaxiv.errors import Conflict, NotFound
from airaxiv.store import MemoryStore, SqliteStore

BACKENDS = ["memory", "sqlite"]


def build_store(kind, tmp_path):
    if kind == "memory":
        return MemoryStore()
    return SqliteStore(tmp_path / "t.db")


@pytest.fixture(params=BACKENDS)
def store(request, tmp_path):
    s = build_store(request.param, tmp_path)
    yield s
    s.close()


def test_put_get_roundtrip(store):
    record = Principal(api_key_id="key_a", name="ann", usage_count=3)
    store.put(record)
    loaded = store.get(Principal, "key_a")
    assert loaded == record


def test_put_duplicate_conflicts(store):
    store.put(Principal(api_key_id="key_a", name="ann"))
    with pytest.raises(Conflict):
        store.put(Principal(api_key_id="key_a", name="bob"))


def test_replace_overwrites(store):
    store.put(Principal(api_key_id="key_a", name="ann"))
    store.replace(Principal(api_key_id="key_a", name="bob"))
    assert store.get(Principal, "key_a").name == "bob"


def test_require_missing_raises(store):
    with pytest.raises(NotFound):
        store.require(Principal, "key_missing")


def test_mutate_applies_and_returns(store):
    store.put(Principal(api_key_id="key_a", name="ann"))
    updated = store.mutate(
        Principal, "key_a",
        lambda p: p.model_copy(update={"usage_count": p.usage_count + 1}))
    assert updated.usage_count == 1
    assert store.get(Principal, "key_a").usage_count == 1


def test_mutate_missing_raises(store):
    with pytest.raises(NotFound):
        store.mutate(Principal, "nope", lambda p: p)


def test_mutate_rejects_id_change(store):
    store.put(Principal(api_key_id="key_a", name="ann"))
    with pytest.raises(Conflict):
        store.mutate(Principal, "key_a",
                     lambda p: p.model_copy(update={"api_key_id": "key_b"}))


def test_mutate_is_serialized_under_threads(store):
    store.put(Principal(api_key_id="key_a", name="ann"))

    def bump():
        for _ in range(50):
            store.mutate(
                Principal, "key_a",
                lambda p: p.model_copy(update={"usage_count": p.usage_count + 1}))

    threads = [threading.Thread(target=bump) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert store.get(Principal, "key_a").usage_count == 400


def test_list_all_with_predicate(store):
    for i in range(5):
        store.put(Principal(api_key_id=f"key_{i}", name=f"u{i}",
                            usage_count=i))
    busy = store.list_all(Principal, lambda p: p.usage_count >= 3)
    assert sorted(p.api_key_id for p in busy) == ["key_3", "key_4"]
    assert store.count(Principal) == 5


def test_delete_removes(store):
    store.put(Principal(api_key_id="key_a", name="ann"))
    store.delete(Principal, "key_a")
    assert store.get(Principal, "key_a") is None


def test_export_import_roundtrip(store, tmp_path):
    for i in range(3):
        store.put(Principal(api_key_id=f"key_{i}", name=f"u{i}"))
    out = tmp_path / "dump"
    assert store.export_dir(out) == 3

    fresh = MemoryStore()
    assert fresh.import_dir(out) == 3
    assert {p.api_key_id for p in fresh.list_all(Principal)} == \
        {"key_0", "key_1", "key_2"}


def test_sqlite_persists_across_reopen(tmp_path):
    path = tmp_path / "p.db"
    first = SqliteStore(path)
    first.put(Principal(api_key_id="key_a", name="ann"))
    first.close()

    second = SqliteStore(path)
    assert second.get(Principal, "key_a").name == "ann"
    second.close()
