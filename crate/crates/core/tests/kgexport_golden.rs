mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use semantify_core::corpus::load_corpus;
use semantify_core::kgexport::{
    compare_assays, export_triples, load_triples, parse_triples, render_table, save_triples,
    triples_to_string, Provenance, TripleSet,
};
use semantify_core::{CorpusFormat, SemanticStatement};

use common::{fixture_path, statement};

fn aid346() -> TripleSet {
    let (corpus, _) = load_corpus(&fixture_path("aid346.jsonl"), &CorpusFormat::JsonLines).unwrap();
    let assay = corpus.get("346").unwrap();
    export_triples("346", corpus.statements_of(assay), Provenance::Gold)
}

#[test]
fn aid346_exports_the_four_table_statements() {
    let set = aid346();
    assert_eq!(set.len(), 4);
    assert!(set.triples.iter().all(|t| t.subject == "bioassay:346"));
    let got: BTreeSet<(String, String)> = set
        .triples
        .iter()
        .map(|t| (t.predicate.clone(), t.object.clone()))
        .collect();
    let want: BTreeSet<(String, String)> = [
        ("has assay format", "biochemical format"),
        ("has assay format", "protein format"),
        ("has assay format", "single protein format"),
        ("assay measurement type", "endpoint assay"),
    ]
    .iter()
    .map(|(p, o)| (p.to_string(), o.to_string()))
    .collect();
    assert_eq!(got, want);

    let golden = std::fs::read_to_string(fixture_path("aid346.triples")).unwrap();
    assert_eq!(triples_to_string(&set), golden);
    assert_eq!(parse_triples(&golden, "golden").unwrap(), set);
}

#[test]
fn file_round_trip() {
    let set = aid346();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("346.triples");
    save_triples(&set, &path).unwrap();
    assert_eq!(load_triples(&path).unwrap(), set);
}

#[test]
fn escapes_survive_a_round_trip() {
    let s = SemanticStatement::new("has note", "tab\there\\and more").unwrap();
    let set = export_triples("x\ty", [&s], Provenance::Predicted);
    let text = triples_to_string(&set);
    assert_eq!(text.lines().count(), 3);
    assert_eq!(parse_triples(&text, "t").unwrap(), set);
}

#[test]
fn malformed_files_are_rejected() {
    assert!(parse_triples("bioassay:1\tp\to\n", "t").is_err());
    assert!(parse_triples("#assay=1\n#provenance=gold\nbioassay:2\tp\to\n", "t").is_err());
    assert!(parse_triples("#assay=1\n#provenance=gold\nbioassay:1\tp\n", "t").is_err());
    assert!(parse_triples("#assay=1\n#provenance=guess\n", "t").is_err());
    assert!(parse_triples("#assay=1\n#provenance=gold\nbioassay:1\tp\to\\q\n", "t").is_err());
}

#[test]
fn comparison_shares_rows_and_keeps_multi_values() {
    let a = export_triples("1", [&statement("has assay format", "cell-based format")], Provenance::Gold);
    let b = aid346();
    let table = compare_assays(&[a, b]).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.cell("has assay format", "1").unwrap(), ["cell-based format"]);
    assert_eq!(
        table.cell("has assay format", "346").unwrap(),
        ["biochemical format", "protein format", "single protein format"]
    );
    assert!(table.cell("assay measurement type", "1").unwrap().is_empty());
    let text = render_table(&table);
    assert!(text.contains("biochemical format; protein format; single protein format"));
    assert_eq!(text.lines().count(), 3);
    assert!(compare_assays(&[aid346()]).is_err());
}

#[test]
fn disjoint_predicates_give_one_filled_cell_per_row() {
    let a = export_triples("1", [&statement("p1", "x"), &statement("p2", "y")], Provenance::Gold);
    let b = export_triples("2", [&statement("p3", "z")], Provenance::Gold);
    let table = compare_assays(&[a, b]).unwrap();
    assert_eq!(table.rows.len(), 3);
    for row in &table.rows {
        assert_eq!(row.cells.iter().filter(|c| !c.is_empty()).count(), 1);
    }
}

fn statements() -> impl Strategy<Value = Vec<SemanticStatement>> {
    proptest::collection::vec((0usize..4, 0usize..6), 0..15).prop_map(|v| {
        v.into_iter()
            .map(|(p, o)| statement(&format!("pred {p}"), &format!("obj {o}")))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn export_ignores_input_order(mut v in statements(), rot in 0usize..15) {
        let a = export_triples("7", &v, Provenance::Curated);
        if !v.is_empty() {
            let r = rot % v.len();
            v.rotate_left(r);
            v.reverse();
        }
        let b = export_triples("7", &v, Provenance::Curated);
        prop_assert_eq!(triples_to_string(&a), triples_to_string(&b));
        let distinct: BTreeSet<_> = v.iter().collect();
        prop_assert_eq!(a.len(), distinct.len());
        prop_assert_eq!(parse_triples(&triples_to_string(&a), "p").unwrap(), a);
    }

    #[test]
    fn comparison_matches_lookup_and_is_symmetric(x in statements(), y in statements(), z in statements()) {
        let sets = vec![
            export_triples("a", &x, Provenance::Gold),
            export_triples("b", &y, Provenance::Gold),
            export_triples("c", &z, Provenance::Gold),
        ];
        let table = compare_assays(&sets).unwrap();
        for row in &table.rows {
            for set in &sets {
                let want: Vec<String> = set
                    .triples
                    .iter()
                    .filter(|t| t.predicate == row.predicate)
                    .map(|t| t.object.clone())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                prop_assert_eq!(table.cell(&row.predicate, &set.assay_id).unwrap(), want.as_slice());
            }
        }
        let predicates: BTreeSet<&str> = sets.iter().flat_map(|s| s.triples.iter().map(|t| t.predicate.as_str())).collect();
        prop_assert_eq!(table.rows.len(), predicates.len());

        let reversed: Vec<TripleSet> = sets.iter().rev().cloned().collect();
        let other = compare_assays(&reversed).unwrap();
        for row in &table.rows {
            for id in ["a", "b", "c"] {
                prop_assert_eq!(table.cell(&row.predicate, id), other.cell(&row.predicate, id));
            }
        }
    }
}
