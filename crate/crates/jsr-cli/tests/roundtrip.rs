//! Property test for the canonical numeric encoding: any finite set document
//! survives a render/parse cycle with every entry reproduced bit for bit.

use jsr_cli::doc::{parse_set_document, Dec, MatrixDoc, SetDocument};
use proptest::prelude::*;

/// Finite doubles across the full exponent range, including negative zero,
/// subnormals, and values that print with every one of the 17 digits set.
fn entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => -1e3..1e3f64,
        2 => any::<f64>().prop_filter("finite", |x| x.is_finite()),
        1 => prop_oneof![
            Just(0.0),
            Just(-0.0),
            Just(f64::MIN_POSITIVE),
            Just(f64::MIN_POSITIVE / 8.0),
            Just(f64::MAX),
            Just(0.1 + 0.2),
            Just(1.0 / 3.0),
        ],
    ]
}

fn document() -> impl Strategy<Value = SetDocument> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(dim, members)| {
        let rows = prop::collection::vec(
            prop::collection::vec(entry(), dim),
            dim,
        );
        prop::collection::vec(rows, members).prop_map(move |all| SetDocument {
            schema_version: "1".into(),
            dim,
            matrices: all
                .into_iter()
                .enumerate()
                .map(|(i, rows)| MatrixDoc {
                    name: format!("A{}", i + 1),
                    rows: rows
                        .into_iter()
                        .map(|row| row.into_iter().map(Dec).collect())
                        .collect(),
                })
                .collect(),
            kozyakin: None,
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_entry_survives_a_render_parse_cycle(doc in document()) {
        let parsed = parse_set_document(&doc.pretty_json()).expect("rendered document parses");
        prop_assert_eq!(parsed.dim, doc.dim);
        prop_assert_eq!(parsed.matrices.len(), doc.matrices.len());
        for (original, reread) in doc.matrices.iter().zip(&parsed.matrices) {
            prop_assert_eq!(&original.name, &reread.name);
            for (row_a, row_b) in original.rows.iter().zip(&reread.rows) {
                for (a, b) in row_a.iter().zip(row_b) {
                    prop_assert_eq!(
                        a.get().to_bits(),
                        b.get().to_bits(),
                        "entry {} reread as {}",
                        a.get(),
                        b.get()
                    );
                }
            }
        }
        prop_assert_eq!(parsed.sha256(), doc.sha256());
    }

    #[test]
    fn the_canonical_body_is_stable_under_reparsing(doc in document()) {
        let parsed = parse_set_document(&doc.pretty_json()).expect("rendered document parses");
        prop_assert_eq!(parsed.canonical_json(), doc.canonical_json());
    }
}
