"""Session service: issue order, rating persistence, media delivery."""

import pytest
from fastapi.testclient import TestClient

from stqp.service import create_app
from stqp.study import StimulusRecord, build_session, ingest_ratings


@pytest.fixture
def small_plan(tmp_path):
    media = tmp_path / "media"
    media.mkdir()
    stimuli = []
    for i in range(4):
        (media / f"test{i}.bin").write_bytes(bytes(range(10 + i)))
        stimuli.append(StimulusRecord(id=f"test{i}", media=f"test{i}.bin"))
    (media / "src.bin").write_bytes(b"reference-media")
    stimuli.append(StimulusRecord(id="src", media="src.bin", role="hidden_reference"))
    for name in ("good", "bad"):
        (media / f"{name}.bin").write_bytes(b"training-" + name.encode())
    training = (
        StimulusRecord(id="train-good", media="good.bin", role="training_good"),
        StimulusRecord(id="train-bad", media="bad.bin", role="training_bad"),
    )
    plan = build_session(stimuli, repeat_count=2, seed=42, training=training)
    return plan, media


@pytest.fixture
def client(small_plan, tmp_path):
    plan, media = small_plan
    app = create_app(plan, media, tmp_path / "ratings.csv")
    return TestClient(app)


def rate_current(client, observer):
    item = client.get(f"/api/session/next?observer={observer}").json()
    assert not item["done"]
    response = client.post("/api/rating", json={
        "observer": observer,
        "stimulus": item["stimulus_id"],
        "score": 3,
        "presentation_index": item["presentation_index"],
    })
    assert response.status_code == 200, response.text
    return item


class TestSessionFlow:
    def test_metadata(self, client, small_plan):
        plan, _ = small_plan
        meta = client.get("/api/session").json()
        assert meta["scale_labels"] == ["Bad", "Poor", "Fair", "Good", "Excellent"]
        assert meta["main_items"] == len(plan.items)
        assert meta["training_items"] == 2
        assert meta["policies"]["single_playback"] is True

    def test_training_issued_first(self, client):
        first = client.get("/api/session/next?observer=obs1").json()
        assert first["phase"] == "training"
        assert first["stimulus_id"] == "train-good"
        assert first["presentation_index"] == 0

    def test_next_is_idempotent_until_rated(self, client):
        a = client.get("/api/session/next?observer=obs1").json()
        b = client.get("/api/session/next?observer=obs1").json()
        assert a == b
        rate_current(client, "obs1")
        c = client.get("/api/session/next?observer=obs1").json()
        assert c["presentation_index"] == 1
        assert c["stimulus_id"] == "train-bad"

    def test_full_walkthrough_and_csv(self, client, small_plan, tmp_path):
        plan, _ = small_plan
        seen = []
        for _ in range(2 + len(plan.items)):
            seen.append(rate_current(client, "obs1"))
        done = client.get("/api/session/next?observer=obs1").json()
        assert done["done"] is True

        phases = [item["phase"] for item in seen]
        assert phases[:2] == ["training", "training"]
        assert all(p == "main" for p in phases[2:])

        ratings = ingest_ratings(tmp_path / "ratings.csv")
        assert len(ratings.ratings) == len(plan.items)  # training not persisted
        assert ratings.observers() == ["obs1"]
        rated_ids = [r.stimulus for r in ratings.ratings]
        assert rated_ids == [s.id for s in plan.items]

    def test_observers_independent(self, client):
        rate_current(client, "obs1")
        other = client.get("/api/session/next?observer=obs2").json()
        assert other["presentation_index"] == 0

    def test_missing_observer_param(self, client):
        assert client.get("/api/session/next").status_code == 400


class TestRatingValidation:
    def test_duplicate_rejected_csv_unchanged(self, client, tmp_path):
        item = rate_current(client, "obs1")
        csv_before = (tmp_path / "ratings.csv").read_bytes()
        response = client.post("/api/rating", json={
            "observer": "obs1", "stimulus": item["stimulus_id"],
            "score": 4, "presentation_index": item["presentation_index"],
        })
        assert response.status_code == 409
        assert (tmp_path / "ratings.csv").read_bytes() == csv_before

    def test_unissued_stimulus_409(self, client):
        response = client.post("/api/rating", json={
            "observer": "obs1", "stimulus": "test3",
            "score": 4, "presentation_index": 5,
        })
        assert response.status_code == 409

    def test_wrong_stimulus_at_current_index_409(self, client):
        client.get("/api/session/next?observer=obs1")
        response = client.post("/api/rating", json={
            "observer": "obs1", "stimulus": "not-the-issued-one",
            "score": 4, "presentation_index": 0,
        })
        assert response.status_code == 409

    @pytest.mark.parametrize("score", [0, 6, "three", None, 3.5])
    def test_invalid_score_400(self, client, score):
        client.get("/api/session/next?observer=obs1")
        response = client.post("/api/rating", json={
            "observer": "obs1", "stimulus": "train-good",
            "score": score, "presentation_index": 0,
        })
        assert response.status_code == 400

    def test_missing_fields_400(self, client):
        assert client.post("/api/rating", json={"observer": "x"}).status_code == 400


class TestMedia:
    def test_full_body(self, client):
        response = client.get("/media/src")
        assert response.status_code == 200
        assert response.content == b"reference-media"
        assert response.headers["accept-ranges"] == "bytes"

    def test_range_request(self, client):
        response = client.get("/media/src", headers={"Range": "bytes=2-5"})
        assert response.status_code == 206
        assert response.content == b"reference-media"[2:6]
        assert response.headers["content-range"] == f"bytes 2-5/{len(b'reference-media')}"

    def test_suffix_range(self, client):
        response = client.get("/media/src", headers={"Range": "bytes=-5"})
        assert response.status_code == 206
        assert response.content == b"media"

    def test_open_ended_range(self, client):
        response = client.get("/media/src", headers={"Range": "bytes=10-"})
        assert response.status_code == 206
        assert response.content == b"media"

    def test_invalid_range_416(self, client):
        response = client.get("/media/src", headers={"Range": "bytes=99-120"})
        assert response.status_code == 416

    def test_unknown_stimulus_404(self, client):
        assert client.get("/media/nope").status_code == 404


class TestUiMount:
    def test_static_ui_served_when_configured(self, small_plan, tmp_path):
        plan, media = small_plan
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>rating ui</body></html>")
        client = TestClient(create_app(plan, media, tmp_path / "r.csv", ui_dir=ui))
        response = client.get("/app/")
        assert response.status_code == 200
        assert "rating ui" in response.text
        assert client.get("/", follow_redirects=False).status_code in (302, 307)

    def test_no_ui_by_default(self, client):
        assert client.get("/app/").status_code == 404


class TestResume:
    def test_cursor_rebuilt_from_csv(self, small_plan, tmp_path):
        plan, media = small_plan
        csv_path = tmp_path / "ratings.csv"
        with TestClient(create_app(plan, media, csv_path)) as client:
            for _ in range(4):  # training pair + 2 main items
                rate_current(client, "obs1")
        with TestClient(create_app(plan, media, csv_path)) as client:
            item = client.get("/api/session/next?observer=obs1").json()
            # two main ratings persisted -> cursor resumes at main index 2
            assert item["presentation_index"] == 4
            assert item["stimulus_id"] == plan.items[2].id
