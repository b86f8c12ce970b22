//! The curation backend driven over HTTP.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use semantify_core::evaluation::{hit_and_miss_corpus, Mark};
use semantify_core::kgexport::parse_triples;
use semantify_core::scoring::FrequencyModel;
use semantify_core::{Corpus, SemanticStatement};

struct Server {
    child: Child,
    base: String,
    agent: ureq::Agent,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Server {
    fn start(corpus: &Path, dir: &Path) -> Server {
        let address_file = dir.join("address");
        let child = Command::new(env!("CARGO_BIN_EXE_semantify"))
            .args(["serve", "--corpus", corpus.to_str().unwrap(), "--bind", "127.0.0.1:0", "--address-file"])
            .arg(&address_file)
            .stdout(Stdio::null())
            .spawn()
            .unwrap();
        let deadline = Instant::now() + Duration::from_secs(30);
        let address = loop {
            if let Ok(a) = std::fs::read_to_string(&address_file) {
                if !a.is_empty() {
                    break a;
                }
            }
            assert!(Instant::now() < deadline, "server did not start");
            std::thread::sleep(Duration::from_millis(50));
        };
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Server {
            child,
            base: format!("http://{address}"),
            agent,
        }
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let mut resp = self.agent.get(&format!("{}{path}", self.base)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }

    fn text(&self, path: &str) -> (u16, String) {
        let mut resp = self.agent.get(&format!("{}{path}", self.base)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }

    fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let mut resp = self.agent.post(&format!("{}{path}", self.base)).send_json(body).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
    }
}

fn corpus_file(dir: &Path) -> (PathBuf, Corpus) {
    let corpus = common::random_corpus(31, 7, 14, 5);
    let path = dir.join("corpus.jsonl");
    corpus.save_jsonl(&path).unwrap();
    (path, corpus)
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (path, corpus) = corpus_file(dir.path());
    let server = Server::start(&path, dir.path());

    assert_eq!(server.get("/healthz").1["status"], "ok");
    let (status, assays) = server.get("/api/assays");
    assert_eq!(status, 200);
    assert_eq!(assays.as_array().unwrap().len(), corpus.len());

    assert_eq!(server.get("/api/assays/nope/next?session=s").0, 404);
    assert_eq!(server.get("/api/assays/A000/next").0, 400);
    assert_eq!(server.get("/api/assays/A000/next?session=").0, 400);
    assert_eq!(server.get("/api/assays/A000/triples?session=s&format=xml").0, 400);

    let (_, next) = server.get("/api/assays/A000/next?session=s");
    let id = next["suggestion"]["statement_id"].clone();
    let body = json!({"statement_id": id, "decision": "reject", "session": "s"});
    assert_eq!(server.post("/api/assays/A000/decision", body.clone()).0, 200);
    assert_eq!(server.post("/api/assays/A000/decision", body).0, 409);
    assert_eq!(server.post("/api/assays/A000/decision", json!({"statement_id": 99999, "decision": "approve", "session": "s"})).0, 422);
    assert_eq!(server.post("/api/assays/A000/decision", json!({"statement_id": id, "decision": "maybe", "session": "s"})).0, 400);
    // another session is unaffected
    assert_eq!(server.get("/api/assays/A000/next?session=t").1["suggestion"]["statement_id"], id);
}

#[test]
fn scripted_session_replays_the_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let (path, corpus) = corpus_file(dir.path());
    let server = Server::start(&path, dir.path());
    let model = FrequencyModel::train(&corpus).unwrap();
    for trace in hit_and_miss_corpus(&model, &corpus).unwrap() {
        let assay = corpus.get(&trace.assay_id).unwrap();
        let gold: BTreeSet<SemanticStatement> = corpus.statements_of(assay).cloned().collect();
        let route = format!("/api/assays/{}", trace.assay_id);
        let mut marks = Vec::new();
        let mut found = 0;
        while found < gold.len() {
            let (status, next) = server.get(&format!("{route}/next?session=script"));
            assert_eq!(status, 200);
            let s = &next["suggestion"];
            let statement = common::statement(s["predicate"].as_str().unwrap(), s["object"].as_str().unwrap());
            let approve = gold.contains(&statement);
            found += approve as usize;
            marks.push(if approve { Mark::Hit } else { Mark::Miss });
            let body = json!({
                "statement_id": s["statement_id"],
                "decision": if approve { "approve" } else { "reject" },
                "session": "script",
            });
            let (status, ack) = server.post(&format!("{route}/decision"), body);
            assert_eq!(status, 200);
            assert_eq!(ack["approvals"], found);
        }
        assert_eq!(marks, trace.marks, "assay {}", trace.assay_id);
        let (_, log) = server.get(&format!("{route}/log?session=script"));
        assert_eq!(log.as_array().unwrap().len(), trace.len());

        let (status, text) = server.text(&format!("{route}/triples?session=script&format=text"));
        assert_eq!(status, 200);
        let set = parse_triples(&text, "served").unwrap();
        assert_eq!(set.statements().unwrap(), gold);
        let (_, json_set) = server.get(&format!("{route}/triples?session=script"));
        assert_eq!(json_set["triples"].as_array().unwrap().len(), gold.len());
    }
}
