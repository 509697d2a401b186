"""REST surface: routes, auth, error envelopes, content types."""

from __future__ import annotations

import hashlib
import json

import pytest
from fastapi.testclient import TestClient

from airaxiv.gateway import create_gateway

from conftest import ManualClock, make_app, make_paper_pdf


@pytest.fixture()
def stack():
    clock = ManualClock()
    app = make_app(clock=clock)
    with TestClient(create_gateway(app)) as client:
        key = client.post("/v1/keys",
                          json={"name": "webuser"}).json()["api_key"]
        client.headers["X-API-Key"] = key
        yield app, clock, client, key
    app.close()


def upload_via_http(client, pdf):
    created = client.post("/v1/uploads", json={"filename": "w.pdf"}).json()
    put = client.put(f"/v1/uploads/{created['upload_id']}", content=pdf)
    assert put.status_code == 200
    done = client.post(f"/v1/uploads/{created['upload_id']}/complete",
                       json={})
    assert done.status_code == 200
    return done.json()["pdf_file_id"]


def submit_via_http(client, title, abstract="An abstract.", body=None):
    pdf = make_paper_pdf(title, abstract, body or ["Body text."])
    token = upload_via_http(client, pdf)
    response = client.post("/v1/papers", json={
        "title": title, "pdf_file_id": token, "abstract": abstract})
    assert response.status_code == 200, response.text
    return response.json(), pdf


class TestPlumbing:
    def test_healthz_is_public(self, stack):
        app, clock, client, key = stack
        response = client.get("/healthz", headers={"X-API-Key": ""})
        assert response.json() == {"status": "ok"}

    def test_review_schema_published(self, stack):
        app, clock, client, key = stack
        schema = client.get("/v1/schemas/review.json").json()
        assert len(schema["properties"]["dimension_scores"]["required"]) == 7

    def test_missing_key_is_401_envelope(self, stack):
        app, clock, client, key = stack
        response = client.get("/v1/papers", headers={"X-API-Key": ""})
        assert response.status_code == 401
        body = response.json()
        assert body["code"] == "auth_error" and body["message"]

    def test_bearer_token_accepted(self, stack):
        app, clock, client, key = stack
        response = client.get("/v1/keys/me",
                              headers={"X-API-Key": "",
                                       "Authorization": f"Bearer {key}"})
        assert response.status_code == 200
        assert response.json()["name"] == "webuser"

    def test_unknown_route_envelope(self, stack):
        app, clock, client, key = stack
        response = client.get("/v1/nothing-here")
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"

    def test_method_not_allowed_envelope(self, stack):
        app, clock, client, key = stack
        response = client.delete("/healthz")
        assert response.status_code == 405
        assert response.json()["code"] == "method_not_allowed"

    def test_query_validation_envelope(self, stack):
        app, clock, client, key = stack
        response = client.get("/v1/papers", params={"limit": "soon"})
        assert response.status_code == 400
        body = response.json()
        assert body["code"] == "validation_failed"
        assert body["field_path"] == "limit"

    def test_root_index_without_ui(self, stack):
        app, clock, client, key = stack
        response = client.get("/")
        if response.headers["content-type"].startswith("application/json"):
            assert response.json()["api"] == "/v1"
        else:  # a built frontend is present in the workspace
            assert response.status_code == 200


class TestKeys:
    def test_create_and_inspect(self, stack):
        app, clock, client, key = stack
        created = client.post("/v1/keys", json={
            "name": "robot", "owner_kind": "ai_scientist"}).json()
        assert created["owner"] == "ai_scientist"
        me = client.get("/v1/keys/me",
                        headers={"X-API-Key": created["api_key"]})
        assert me.json()["name"] == "robot"

    def test_bad_owner_kind(self, stack):
        app, clock, client, key = stack
        response = client.post("/v1/keys", json={"name": "x",
                                                 "owner_kind": "cyborg"})
        assert response.status_code == 400
        assert response.json()["field_path"] == "owner_kind"

    def test_usage_counted_per_call(self, stack):
        app, clock, client, key = stack
        before = client.get("/v1/keys/me").json()["usage_count"]
        client.get("/v1/papers")
        after = client.get("/v1/keys/me").json()["usage_count"]
        assert after == before + 2  # the list call and the second me call


class TestUploads:
    def test_put_response_is_size_and_digest_only(self, stack):
        app, clock, client, key = stack
        created = client.post("/v1/uploads", json={}).json()
        payload = b"raw pdf bytes"
        response = client.put(f"/v1/uploads/{created['upload_id']}",
                              content=payload)
        assert response.json() == {
            "size": len(payload),
            "sha256": hashlib.sha256(payload).hexdigest()}

    def test_integrity_mismatch_is_422(self, stack):
        app, clock, client, key = stack
        created = client.post("/v1/uploads",
                              json={"sha256": "0" * 64}).json()
        client.put(f"/v1/uploads/{created['upload_id']}", content=b"data")
        response = client.post(
            f"/v1/uploads/{created['upload_id']}/complete", json={})
        assert response.status_code == 422
        assert response.json()["code"] == "integrity_error"

    def test_describe_states(self, stack):
        app, clock, client, key = stack
        created = client.post("/v1/uploads", json={}).json()
        assert client.get(
            f"/v1/uploads/{created['upload_id']}").json()["state"] == "open"
        client.put(f"/v1/uploads/{created['upload_id']}", content=b"x")
        assert client.get(
            f"/v1/uploads/{created['upload_id']}").json()["state"] == "received"

    def test_unknown_upload_404(self, stack):
        app, clock, client, key = stack
        assert client.get("/v1/uploads/up_missing").status_code == 404


class TestPaperRoutes:
    def test_submit_list_get_update(self, stack):
        app, clock, client, key = stack
        submitted, pdf = submit_via_http(client, "Gateway Paper")
        paper_id = submitted["paper_id"]

        listing = client.get("/v1/papers").json()
        assert listing["total"] == 1
        assert listing["items"][0]["paper_id"] == paper_id

        info = client.get(f"/v1/papers/{paper_id}",
                          params={"include_versions": True}).json()
        assert info["latest_version"] == 1
        assert info["versions"][0]["pdf_sha256"] == hashlib.sha256(
            pdf).hexdigest()

        patch = client.patch(f"/v1/papers/{paper_id}",
                             json={"abstract": "Sharper claim."})
        assert patch.json()["version"] == 2
        assert client.get(
            f"/v1/papers/{paper_id}").json()["abstract"] == "Sharper claim."

    def test_content_and_truncation(self, stack):
        app, clock, client, key = stack
        submitted, _ = submit_via_http(client, "Long One",
                                       body=["many words " * 100])
        content = client.get(f"/v1/papers/{submitted['paper_id']}/content",
                             params={"max_chars": 30}).json()
        assert content["truncated"] is True
        assert content["total_chars"] > 30

    def test_reviews_endpoint(self, stack):
        app, clock, client, key = stack
        submitted, _ = submit_via_http(client, "Reviewed One")
        reviews = client.get(
            f"/v1/papers/{submitted['paper_id']}/reviews").json()
        assert len(reviews["reviews"]) == 1
        review = reviews["reviews"][0]
        assert len(review["dimension_scores"]) == 7

    def test_pdf_url_download_without_auth(self, stack):
        app, clock, client, key = stack
        submitted, pdf = submit_via_http(client, "Downloadable")
        url = client.get(
            f"/v1/papers/{submitted['paper_id']}/pdf-url").json()["url"]
        path = url[url.index("/v1/pdfs/"):]
        response = client.get(path, headers={"X-API-Key": ""})
        assert response.status_code == 200
        assert response.headers["content-type"] == "application/pdf"
        assert response.content == pdf

    def test_tampered_download_token(self, stack):
        app, clock, client, key = stack
        response = client.get("/v1/pdfs/forged-token",
                              headers={"X-API-Key": ""})
        assert response.status_code == 400

    def test_related_and_search(self, stack):
        app, clock, client, key = stack
        first, _ = submit_via_http(client, "Sparse Retrieval Alpha",
                                   abstract="About sparse retrieval.")
        submit_via_http(client, "Sparse Retrieval Beta",
                        abstract="More sparse retrieval.")
        related = client.get(
            f"/v1/papers/{first['paper_id']}/related",
            params={"top_k": 5}).json()
        assert related["results"]
        assert first["paper_id"] not in [r["paper_id"]
                                         for r in related["results"]]
        search = client.get("/v1/search",
                            params={"query": "sparse retrieval"}).json()
        assert len(search["results"]) == 2

    def test_search_requires_query(self, stack):
        app, clock, client, key = stack
        response = client.get("/v1/search")
        assert response.status_code == 400
        assert response.json()["field_path"] == "query"


class TestComments:
    def test_thread_roundtrip(self, stack):
        app, clock, client, key = stack
        submitted, _ = submit_via_http(client, "Discussed")
        paper_id = submitted["paper_id"]
        root = client.post(f"/v1/papers/{paper_id}/comments",
                           json={"content": "First!"}).json()
        client.post(f"/v1/papers/{paper_id}/comments",
                    json={"content": "A reply.",
                          "parent_comment_id": root["comment_id"],
                          "ai_scientist_name": "referee-bot"})
        thread = client.get(f"/v1/papers/{paper_id}/comments").json()
        assert len(thread["comments"]) == 1
        reply = thread["comments"][0]["replies"][0]
        assert reply["author_display"] == "referee-bot"

    def test_empty_content_rejected(self, stack):
        app, clock, client, key = stack
        submitted, _ = submit_via_http(client, "Quiet")
        response = client.post(
            f"/v1/papers/{submitted['paper_id']}/comments",
            json={"content": ""})
        assert response.status_code == 400
        assert response.json()["field_path"] == "content"


class TestProfile:
    def test_crud_cycle(self, stack):
        app, clock, client, key = stack
        assert client.get("/v1/profile").status_code == 404
        put = client.put("/v1/profile", json={
            "interest_statements": ["graph retrieval", "ranking"]}).json()
        assert put["interest_statements"] == ["graph retrieval", "ranking"]
        got = client.get("/v1/profile").json()
        assert got["interest_statements"] == put["interest_statements"]
        assert "updated_at" in got
        assert client.delete("/v1/profile").json() == {"deleted": True}
        assert client.get("/v1/profile").status_code == 404


class TestConferences:
    def test_lifecycle(self, stack):
        app, clock, client, key = stack
        created = client.post("/v1/conferences", json={
            "theme": "sparse retrieval", "match_threshold": 0.2}).json()
        conference_id = created["conference_id"]
        submitted, _ = submit_via_http(client, "Sparse Retrieval Entry",
                                       abstract="Sparse retrieval work.")
        track = client.post(f"/v1/conferences/{conference_id}/submissions",
                            json={"paper_id": submitted["paper_id"]}).json()
        assert submitted["paper_id"] in track["track_submissions"]
        curated = client.post(
            f"/v1/conferences/{conference_id}/curate").json()
        assert submitted["paper_id"] in curated["curated"]
        listed = client.get("/v1/conferences").json()["conferences"]
        assert [c["conference_id"] for c in listed] == [conference_id]
        fetched = client.get(f"/v1/conferences/{conference_id}").json()
        assert fetched["theme"] == "sparse retrieval"

    def test_iso_datetime_parsing(self, stack):
        app, clock, client, key = stack
        created = client.post("/v1/conferences", json={
            "theme": "windows",
            "starts_at": "2026-03-01T12:00:00Z",
            "ends_at": "2026-04-01T12:00:00+00:00"}).json()
        assert created["starts_at"] == "2026-03-01T12:00:00+00:00"

    def test_bad_datetime_rejected(self, stack):
        app, clock, client, key = stack
        response = client.post("/v1/conferences", json={
            "theme": "x", "starts_at": "soon"})
        assert response.status_code == 400


class TestAnalyticsRoutes:
    def test_reports_exist(self, stack):
        app, clock, client, key = stack
        assert client.get("/v1/analytics/alignment").json()["n"] == 0
        assert client.get("/v1/analytics/iteration").json()[
            "papers_total"] == 0
        assert client.get("/v1/analytics/turnaround").json()["count"] == 0

    def test_csv_body_import(self, stack):
        app, clock, client, key = stack
        submitted, _ = submit_via_http(client, "Labelled")
        csv_text = f"paper_id,decision\n{submitted['paper_id']},accept\n"
        response = client.post("/v1/analytics/decisions", content=csv_text,
                               headers={"Content-Type": "text/csv"})
        assert response.json() == {"imported": 1}

    def test_json_wrapped_import(self, stack):
        app, clock, client, key = stack
        submitted, _ = submit_via_http(client, "Labelled Two")
        response = client.post("/v1/analytics/decisions", json={
            "csv": f"{submitted['paper_id']},reject\n"})
        assert response.json() == {"imported": 1}

    def test_bad_rows_are_400(self, stack):
        app, clock, client, key = stack
        response = client.post("/v1/analytics/decisions",
                               content="paper_missing,accept\n",
                               headers={"Content-Type": "text/csv"})
        assert response.status_code == 400


class TestMcpOverHttp:
    def test_tool_call(self, stack):
        app, clock, client, key = stack
        response = client.post("/mcp", json={
            "jsonrpc": "2.0", "id": 9, "method": "tools/list"})
        assert len(response.json()["result"]["tools"]) == 13

    def test_notification_is_202(self, stack):
        app, clock, client, key = stack
        response = client.post("/mcp", json={
            "jsonrpc": "2.0", "method": "notifications/initialized"})
        assert response.status_code == 202
        assert response.content == b""

    def test_parse_error(self, stack):
        app, clock, client, key = stack
        response = client.post("/mcp", content=b"{nope",
                               headers={"Content-Type": "application/json"})
        assert response.json()["error"]["code"] == -32700

    def test_requires_key(self, stack):
        app, clock, client, key = stack
        response = client.post("/mcp", json={"jsonrpc": "2.0", "id": 1,
                                             "method": "ping"},
                               headers={"X-API-Key": ""})
        assert response.status_code == 401

    def test_mcp_call_does_not_double_touch(self, stack):
        app, clock, client, key = stack
        client.post("/mcp", json={
            "jsonrpc": "2.0", "id": 1, "method": "tools/call",
            "params": {"name": "get_api_key_info", "arguments": {}}})
        info = client.get("/v1/keys/me").json()
        # one bump from the tool call, one from the REST call reading it
        assert info["usage_count"] == 2


class TestStaticKeyMode:
    def test_key_creation_disabled(self):
        from airaxiv.config import AppConfig, AuthConfig, StaticKey, WorkersConfig
        config = AppConfig(
            workers=WorkersConfig(inline=True),
            auth=AuthConfig(mode="static", static_keys=[
                StaticKey(key="fixed-key", name="Fixed",
                          owner_kind="human")]))
        app = make_app(config=config)
        with TestClient(create_gateway(app)) as client:
            denied = client.post("/v1/keys", json={"name": "nope"})
            assert denied.status_code == 403
            rejected = client.get("/v1/keys/me",
                                  headers={"X-API-Key": "surprise"})
            assert rejected.status_code == 401
            accepted = client.get("/v1/keys/me",
                                  headers={"X-API-Key": "fixed-key"})
            assert accepted.json()["name"] == "Fixed"
        app.close()
