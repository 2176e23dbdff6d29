import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from scenefuse.images import decode_image_bytes, encode_png
from scenefuse.pipeline.runner import replay
from scenefuse.rng import RandomSource
from scenefuse.service import create_app

FAST_CONFIG = {
    "compose_steps": 4, "refine_inference_steps": 4, "refine_noise_steps": 2,
    "colorize_steps": 3, "seed": 5,
}


def make_object():
    img = np.full((64, 64, 3), 255, np.uint8)
    img[8:56, 8:56] = (200, 30, 30)
    return img


def make_background():
    img = np.zeros((128, 128, 3), np.uint8)
    img[:, :, 1] = 120
    return img


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "data", workers=2)
    with TestClient(app) as c:
        yield c


def wait_job(client, ticket_id, timeout=15.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        ticket = client.get(f"/jobs/{ticket_id}").json()
        if ticket["status"] in ("succeeded", "failed"):
            return ticket
        time.sleep(0.02)
    raise TimeoutError(f"job {ticket_id} did not finish")


def setup_session(client, config=FAST_CONFIG, with_background=True):
    sid = client.post("/sessions", json={"config": config}).json()["id"]
    client.post(f"/sessions/{sid}/assets?kind=object", content=encode_png(make_object()))
    if with_background:
        client.post(f"/sessions/{sid}/assets?kind=background",
                    content=encode_png(make_background()))
    client.put(f"/sessions/{sid}/prompt",
               json={"product_type": "bicycle", "color": "red", "place": "a street"})
    client.put(f"/sessions/{sid}/placement", json={"x": 30, "y": 40, "scale": 1.0})
    return sid


class TestAssets:
    def test_upload_fetch_byte_identical(self, client):
        sid = client.post("/sessions", json={}).json()["id"]
        payload = encode_png(make_object())
        ref = client.post(f"/sessions/{sid}/assets?kind=object", content=payload).json()["ref"]
        fetched = client.get(f"/sessions/{sid}/assets/{ref}").content
        assert fetched == payload

    def test_duplicate_upload_same_digest(self, client):
        sid = client.post("/sessions", json={}).json()["id"]
        payload = encode_png(make_object())
        r1 = client.post(f"/sessions/{sid}/assets?kind=object", content=payload).json()
        r2 = client.post(f"/sessions/{sid}/assets?kind=object", content=payload).json()
        assert r1["ref"] == r2["ref"]

    def test_corrupt_bytes_rejected(self, client):
        sid = client.post("/sessions", json={}).json()["id"]
        r = client.post(f"/sessions/{sid}/assets?kind=object", content=b"not an image")
        assert r.status_code == 400

    def test_bad_kind_rejected(self, client):
        sid = client.post("/sessions", json={}).json()["id"]
        r = client.post(f"/sessions/{sid}/assets?kind=texture",
                        content=encode_png(make_object()))
        assert r.status_code == 422

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/doesnotexist").status_code == 404


class TestPlacement:
    def test_identical_placement_identical_preview(self, client):
        sid = setup_session(client)
        r1 = client.put(f"/sessions/{sid}/placement",
                        json={"x": 30, "y": 40, "scale": 1.0}).json()
        r2 = client.put(f"/sessions/{sid}/placement",
                        json={"x": 30, "y": 40, "scale": 1.0}).json()
        assert r1["preview_ref"] == r2["preview_ref"]
        assert r1["mask_ref"] == r2["mask_ref"]

    def test_out_of_canvas_422_with_clamp(self, client):
        sid = setup_session(client)
        r = client.put(f"/sessions/{sid}/placement",
                       json={"x": 2000, "y": 40, "scale": 1.0})
        assert r.status_code == 422
        detail = r.json()["detail"]
        assert "clamped" in detail
        clamped = detail["clamped"]
        r2 = client.put(f"/sessions/{sid}/placement", json={
            "x": clamped["x"], "y": clamped["y"], "scale": clamped["scale"],
        })
        assert r2.status_code == 200

    def test_scale_round_trip_mask_area(self, client):
        sid = setup_session(client)

        def mask_area(scale):
            r = client.put(f"/sessions/{sid}/placement",
                           json={"x": 0, "y": 0, "scale": scale}).json()
            mask = decode_image_bytes(
                client.get(f"/sessions/{sid}/assets/{r['mask_ref']}").content
            )
            return (mask[:, :, 0] > 0).sum()

        base = mask_area(1.0)
        mask_area(2.0)
        mask_area(0.5)
        again = mask_area(1.0)
        assert again == pytest.approx(base, rel=0.05)

    def test_placement_echoed_unchanged(self, client):
        sid = setup_session(client)
        body = {"x": 12, "y": 34, "scale": 0.75}
        echoed = client.put(f"/sessions/{sid}/placement", json=body).json()["placement"]
        assert (echoed["x"], echoed["y"], echoed["scale"]) == (12, 34, 0.75)
        state = client.get(f"/sessions/{sid}").json()
        assert state["placement"] == echoed


class TestStages:
    def test_k5_compose_yields_five_refs(self, client):
        sid = setup_session(client)
        ticket = client.post(f"/sessions/{sid}/stages/compose?k=5").json()
        assert wait_job(client, ticket["id"])["status"] == "succeeded"
        refs = client.get(f"/sessions/{sid}/variants/compose").json()["refs"]
        assert len(refs) == 5
        assert len(set(refs)) == 5

    def test_select_pins_variant_digest(self, client):
        sid = setup_session(client)
        ticket = client.post(f"/sessions/{sid}/stages/compose?k=3").json()
        wait_job(client, ticket["id"])
        refs = client.get(f"/sessions/{sid}/variants/compose").json()["refs"]
        client.post(f"/sessions/{sid}/variants/compose/select", json={"index": 2})
        state = client.get(f"/sessions/{sid}").json()
        assert state["selections"]["compose"] == 2
        assert state["variants"]["compose"][2] == refs[2]

    def test_select_before_finish_409(self, client):
        sid = setup_session(client)
        r = client.post(f"/sessions/{sid}/variants/compose/select", json={"index": 0})
        assert r.status_code == 409

    def test_illegal_transition_409(self, client):
        sid = setup_session(client)
        r = client.post(f"/sessions/{sid}/stages/refine?k=1")
        assert r.status_code == 409

    def test_advance_blocked_until_selection_when_k_gt_1(self, client):
        sid = setup_session(client)
        ticket = client.post(f"/sessions/{sid}/stages/compose?k=2").json()
        wait_job(client, ticket["id"])
        r = client.post(f"/sessions/{sid}/stages/refine?k=1")
        assert r.status_code == 409
        client.post(f"/sessions/{sid}/variants/compose/select", json={"index": 0})
        r = client.post(f"/sessions/{sid}/stages/refine?k=1")
        assert r.status_code == 202

    def test_k1_auto_selects(self, client):
        sid = setup_session(client)
        ticket = client.post(f"/sessions/{sid}/stages/compose?k=1").json()
        wait_job(client, ticket["id"])
        state = client.get(f"/sessions/{sid}").json()
        assert state["stage"] == "composed"
        assert state["selections"]["compose"] == 0

    def test_k_bounds_enforced(self, client):
        sid = setup_session(client)
        assert client.post(f"/sessions/{sid}/stages/compose?k=0").status_code == 422
        assert client.post(f"/sessions/{sid}/stages/compose?k=9").status_code == 422

    def test_poll_idempotent_after_terminal(self, client):
        sid = setup_session(client)
        ticket = client.post(f"/sessions/{sid}/stages/compose?k=1").json()
        final = wait_job(client, ticket["id"])
        again = client.get(f"/jobs/{ticket['id']}").json()
        assert final == again


class TestResult:
    def run_to_done(self, client, sid, k_compose=2):
        ticket = client.post(f"/sessions/{sid}/stages/compose?k={k_compose}").json()
        assert wait_job(client, ticket["id"])["status"] == "succeeded"
        if k_compose > 1:
            client.post(f"/sessions/{sid}/variants/compose/select", json={"index": 1})
        ticket = client.post(f"/sessions/{sid}/stages/refine?k=1").json()
        assert wait_job(client, ticket["id"])["status"] == "succeeded"
        return client.get(f"/sessions/{sid}/result")

    def test_premature_result_409(self, client):
        sid = setup_session(client)
        assert client.get(f"/sessions/{sid}/result").status_code == 409

    def test_result_has_manifest_and_thumbnails(self, client):
        sid = setup_session(client)
        r = self.run_to_done(client, sid)
        assert r.status_code == 200
        body = r.json()
        assert body["manifest"]["outputs"]
        assert len(body["stage_thumbnails"]) == 2  # compose + refine
        fetched = client.get(f"/sessions/{sid}/assets/{body['image_ref']}")
        assert fetched.status_code == 200

    def test_result_manifest_replays_identically(self, client, tmp_path):
        sid = setup_session(client)
        r = self.run_to_done(client, sid)
        assert r.status_code == 200
        data_root = client.app.state.store.root
        manifest_path = data_root / sid / "result" / "manifest.json"
        report = replay(manifest_path)
        assert report.matched, report.summary()

    def test_manifest_lists_seed_and_selections(self, client):
        sid = setup_session(client)
        manifest = self.run_to_done(client, sid).json()["manifest"]
        assert manifest["config"]["seed"] == FAST_CONFIG["seed"]
        assert manifest["selections"] == {"compose": 1, "refine": 0}


class TestRunAll:
    def test_batch_bypass_reaches_done(self, client):
        sid = setup_session(client)
        ticket = client.post(f"/sessions/{sid}/run_all").json()
        assert wait_job(client, ticket["id"])["status"] == "succeeded"
        state = client.get(f"/sessions/{sid}").json()
        assert state["stage"] == "done"
        assert client.get(f"/sessions/{sid}/result").status_code == 200


class TestPersistence:
    def test_session_survives_restart(self, tmp_path):
        app1 = create_app(tmp_path / "data", workers=1)
        with TestClient(app1) as c1:
            sid = setup_session(c1)
            ticket = c1.post(f"/sessions/{sid}/stages/compose?k=2").json()
            wait_job(c1, ticket["id"])
        app2 = create_app(tmp_path / "data", workers=1)
        with TestClient(app2) as c2:
            state = c2.get(f"/sessions/{sid}").json()
            assert state["pending_stage"] == "compose"
            assert len(state["variants"]["compose"]) == 2
            # job ticket still answerable from disk
            assert c2.get(f"/jobs/{ticket['id']}").json()["status"] == "succeeded"
            # and the flow can continue
            c2.post(f"/sessions/{sid}/variants/compose/select", json={"index": 0})
            t2 = c2.post(f"/sessions/{sid}/stages/refine?k=1").json()
            assert wait_job(c2, t2["id"])["status"] == "succeeded"


class TestStateMachineSafety:
    STAGES = ("colorize", "compose", "refine")

    def test_random_call_sequences_never_corrupt(self, client):
        """Property: any call sequence either succeeds or fails with a clean
        4xx, and the session stage stays within the defined machine."""
        rng = RandomSource(2718)
        valid_stages = {"created", "placed", "colorized", "composed", "refined", "done"}
        sid = setup_session(client)
        for _ in range(60):
            roll = int(rng.integers(0, 6))
            if roll == 0:
                r = client.put(f"/sessions/{sid}/placement", json={
                    "x": int(rng.integers(-20, 140)), "y": int(rng.integers(-20, 140)),
                    "scale": float(rng.integers(1, 30)) / 10.0,
                })
                assert r.status_code in (200, 409, 422)
            elif roll in (1, 2):
                stage = self.STAGES[int(rng.integers(0, 3))]
                k = int(rng.integers(1, 4))
                r = client.post(f"/sessions/{sid}/stages/{stage}?k={k}")
                assert r.status_code in (202, 409, 422)
                if r.status_code == 202:
                    assert wait_job(client, r.json()["id"])["status"] in (
                        "succeeded", "failed")
            elif roll == 3:
                stage = self.STAGES[int(rng.integers(0, 3))]
                r = client.post(f"/sessions/{sid}/variants/{stage}/select",
                                json={"index": int(rng.integers(0, 5))})
                assert r.status_code in (200, 409, 422)
            elif roll == 4:
                r = client.get(f"/sessions/{sid}/result")
                assert r.status_code in (200, 409)
            else:
                state = client.get(f"/sessions/{sid}").json()
                assert state["stage"] in valid_stages
        state = client.get(f"/sessions/{sid}").json()
        assert state["stage"] in valid_stages
