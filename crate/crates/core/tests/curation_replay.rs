mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use semantify_core::curation::{CurationStore, Verdict};
use semantify_core::evaluation::hit_and_miss_corpus;
use semantify_core::kgexport::{export_triples, Provenance};
use semantify_core::scoring::{FrequencyModel, LexicalModel, LexicalParams};
use semantify_core::{SamplingConfig, Scorer};

/// Approve-if-gold, reject otherwise, until every gold statement is found.
fn replay(store: &CurationStore, assay_id: &str, session: &str) -> Vec<Verdict> {
    let corpus = store.corpus();
    let assay = corpus.get(assay_id).unwrap();
    let gold: BTreeSet<_> = assay.annotation.ids().iter().copied().collect();
    let mut found = 0;
    let mut verdicts = Vec::new();
    while found < gold.len() {
        let next = store.next(assay_id, session).unwrap().unwrap();
        let verdict = if gold.contains(&next.statement_id) {
            found += 1;
            Verdict::Approve
        } else {
            Verdict::Reject
        };
        store.decide(assay_id, session, next.statement_id, verdict).unwrap();
        verdicts.push(verdict);
    }
    verdicts
}

#[test]
fn scripted_sessions_reproduce_the_simulation() {
    let corpus = Arc::new(common::random_corpus(21, 12, 15, 6));
    let lexical = LexicalModel::train(&corpus, &SamplingConfig::new(4, 1), &LexicalParams { epochs: 30, ..Default::default() }).unwrap();
    let models: Vec<Arc<dyn Scorer>> = vec![Arc::new(lexical), Arc::new(FrequencyModel::train(&corpus).unwrap())];
    for model in models {
        let traces = hit_and_miss_corpus(model.as_ref(), &corpus).unwrap();
        let store = CurationStore::new(corpus.clone(), model.clone());
        for trace in &traces {
            let verdicts = replay(&store, &trace.assay_id, "script");
            let marks: Vec<_> = verdicts.iter().map(|v| v.mark()).collect();
            assert_eq!(marks, trace.marks);
            let log = store.log(&trace.assay_id, "script").unwrap();
            assert_eq!(log.len(), trace.len());

            let assay = corpus.get(&trace.assay_id).unwrap();
            let gold = export_triples(&trace.assay_id, corpus.statements_of(assay), Provenance::Curated);
            assert_eq!(store.triples(&trace.assay_id, "script").unwrap(), gold);
        }
    }
}

#[test]
fn concurrent_sessions_are_isolated() {
    let corpus = Arc::new(common::random_corpus(4, 6, 10, 4));
    let store = Arc::new(CurationStore::new(corpus.clone(), Arc::new(FrequencyModel::train(&corpus).unwrap())));
    let ids: Vec<String> = corpus.assay_ids().map(str::to_string).collect();
    std::thread::scope(|scope| {
        for (i, id) in ids.iter().enumerate() {
            let store = store.clone();
            scope.spawn(move || replay(&store, id, &format!("s{i}")));
        }
    });
    for (i, id) in ids.iter().enumerate() {
        let approved = store.triples(id, &format!("s{i}")).unwrap().len();
        assert_eq!(approved, corpus.get(id).unwrap().annotation.len());
        assert!(store.triples(id, "nobody").unwrap().is_empty());
    }
}
