import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from treebench import conllu, loop, refparser
from treebench.service import create_app

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def corpus():
    return conllu.parse_file(DATA / "ud_sample.conllu")


@pytest.fixture
def project_dir(tmp_path, corpus):
    model = refparser.train(conllu.Treebank(corpus.sentences[:40]), epochs=2, seed=1)
    model_dir = tmp_path / "base"
    refparser.save(model, model_dir)
    pool = conllu.Treebank(corpus.sentences[200:230])
    project = loop.Project.create(
        tmp_path / "proj", pool, model_dir,
        settings=loop.Settings(batch_size=10, finetune_epochs=1),
    )
    return project.dir


@pytest.fixture
def client(project_dir):
    return TestClient(create_app(project_dir))


def wait_job(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/api/jobs/{job_id}").json()
        if doc["state"] != "running":
            return doc
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


def run_next_batch(client) -> int:
    r = client.post("/api/batches/next")
    assert r.status_code == 202, r.text
    job = wait_job(client, r.json()["job"])
    assert job["state"] == "done", job
    return job["result"]["batch"]


def test_project_endpoint(client):
    doc = client.get("/api/project").json()
    assert doc["name"] == "proj"
    assert doc["remaining_pool"] == 30
    assert doc["batches"] == []
    assert doc["parser_backend"] == {"kind": "builtin"}


def test_labels_endpoint(client):
    labels = client.get("/api/labels").json()["labels"]
    assert "root" in labels and labels == sorted(labels)


def test_batch_lifecycle_via_api(client):
    index = run_next_batch(client)
    assert index == 0

    record = client.get("/api/batches/0").json()
    assert record["state"] == "PSEUDO_ANNOTATED"
    assert record["model_used"] == "models/iter000"
    assert len(record["sentence_ids"]) == 10

    sentences = client.get("/api/batches/0/sentences").json()
    assert len(sentences) == 10
    sid = sentences[0]["sent_id"]
    assert sentences[0]["editable"]
    assert sentences[0]["text_orig"]
    assert all(not t["changed"] for t in sentences[0]["tokens"])

    # PATCH a token, then read the sentence back: edit visible + audit entry.
    tok = sentences[0]["tokens"][0]
    new_head = 2 if tok["head"] != 2 else 3
    r = client.patch(f"/api/sentences/{sid}/tokens/1",
                     json={"head": new_head, "deprel": "obl"},
                     headers={"X-Annotator": "tester"})
    assert r.status_code == 200, r.text
    got = client.get(f"/api/sentences/{sid}").json()
    assert got["tokens"][0]["head"] == new_head
    assert got["tokens"][0]["deprel"] == "obl"
    assert got["tokens"][0]["changed"]

    audit = (Path(client.get("/api/project").json()["project_dir"]) / "batches/000/audit.log").read_text()
    assert '"annotator": "tester"' in audit

    # Undo the edit so the batch can be finalized as identical-to-pseudo.
    r = client.patch(f"/api/sentences/{sid}/tokens/1",
                     json={"head": tok["head"], "deprel": tok["deprel"]})
    assert r.status_code == 200

    r = client.post("/api/batches/0/finalize", json={"idempotency_key": "k1"})
    assert r.status_code == 200, r.text
    report = r.json()
    assert report["uas"] == 1.0
    assert report["edit_count"] == 0

    # Idempotent repeat, same key -> same report; no key -> conflict.
    again = client.post("/api/batches/0/finalize", json={"idempotency_key": "k1"})
    assert again.status_code == 200
    assert again.json() == report
    conflict = client.post("/api/batches/0/finalize")
    assert conflict.status_code == 409
    assert conflict.json()["error"]["code"] == "conflict"

    r = client.post("/api/batches/0/finetune", json={"idempotency_key": "ft1"})
    assert r.status_code == 202
    job = wait_job(client, r.json()["job"])
    assert job["state"] == "done"
    assert job["result"]["model"] == "models/iter001"

    # Idempotent finetune repeat with the same key.
    r = client.post("/api/batches/0/finetune", json={"idempotency_key": "ft1"})
    assert r.status_code == 202
    assert r.json()["model"] == "models/iter001"

    trend = client.get("/api/trend").json()["series"]
    assert len(trend) == 1 and trend[0]["batch"] == 0

    report_doc = client.get("/api/batches/0/report").json()
    assert report_doc["model_used"] == "models/iter000"
    csv_text = client.get("/api/batches/0/confusion.csv").text
    assert csv_text.startswith("gold\\system,")


def test_finalize_invalid_draft_409_with_violations(client):
    run_next_batch(client)
    sentences = client.get("/api/batches/0/sentences").json()
    sid = next(s["sent_id"] for s in sentences if len(s["tokens"]) >= 3)
    client.patch(f"/api/sentences/{sid}/tokens/1", json={"head": 2})
    client.patch(f"/api/sentences/{sid}/tokens/2", json={"head": 1})
    r = client.post("/api/batches/0/finalize")
    assert r.status_code == 409, r.text
    err = r.json()["error"]
    assert err["code"] == "validation_failed"
    assert any("cycle" in v for v in err["details"])
    # The cycle is also visible as a violation on the sentence payload.
    got = client.get(f"/api/sentences/{sid}").json()
    assert any("cycle" in v for v in got["violations"])


def test_patch_pool_sentence_is_404(client, corpus):
    # A sentence that exists in the pool but is in no batch yet.
    doc = client.get("/api/project").json()
    pool_path = Path(doc["project_dir"]) / "pool.conllu"
    sid = conllu.parse_file(pool_path, strict=False).sentences[0].sent_id
    r = client.patch(f"/api/sentences/{sid}/tokens/1", json={"head": 0})
    assert r.status_code == 404
    assert r.json()["error"]["code"] == "not_found"
    # But it is readable, flagged not editable.
    got = client.get(f"/api/sentences/{sid}")
    assert got.status_code == 200
    assert not got.json()["editable"]


def test_unknown_resources_are_404(client):
    assert client.get("/api/batches/7").status_code == 404
    assert client.get("/api/sentences/ghost").status_code == 404
    assert client.get("/api/jobs/job-99").status_code == 404
    assert client.get("/api/agreement/none").status_code == 404


def test_next_batch_conflict_while_in_progress(client):
    run_next_batch(client)
    r = client.post("/api/batches/next")
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "conflict"


def test_agreement_endpoint(client):
    base = Path(client.get("/api/project").json()["project_dir"])
    study = base / "agreement" / "pilot"
    study.mkdir(parents=True)
    s1 = conllu.Sentence(sent_id="g1", tokens=(
        conllu.Token(id=1, form="ev", head=2, deprel="nsubj"),
        conllu.Token(id=2, form="eski", head=0, deprel="root"),
    ))
    s2 = conllu.with_token(s1, 1, deprel="obl")
    conllu.write_file(conllu.Treebank((s1,)), study / "anna.conllu")
    conllu.write_file(conllu.Treebank((s2,)), study / "berk.conllu")
    doc = client.get("/api/agreement/pilot").json()
    assert doc["annotators"] == ["anna", "berk"]
    assert doc["attachment"]["uas_f1"] == 1.0
    assert len(doc["disagreements"]) == 1
    assert doc["disagreements"][0]["token_id"] == 1


def test_root_serves_placeholder_without_ui(client):
    r = client.get("/")
    assert r.status_code == 200
    assert "treebench" in r.text


def test_static_ui_mount(tmp_path, project_dir):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body id='app'>UI</body></html>")
    client = TestClient(create_app(project_dir, ui_dir=ui))
    r = client.get("/")
    assert r.status_code == 200
    assert "UI" in r.text
    assert client.get("/api/project").status_code == 200
