//! String distances and the distance-tilted distortion distributions.
//!
//!     cargo run --example string_distortion

use eblink::model::{Dataset, FieldKind, FieldSpec, Hyperparams, Schema};
use eblink::strdist::{
    distortion_pmf, edit_distance, jaro_winkler_distance, FieldTables, StringDistance,
};

fn main() {
    for (s, t) in [
        ("kitten", "sitting"),
        ("MARTHA", "MARHTA"),
        ("MUELLER", "MILLER"),
        ("ANNA", "ANNA"),
    ] {
        println!(
            "d_edit({s}, {t}) = {}   d_jw({s}, {t}) = {:.4}",
            edit_distance(s, t),
            jaro_winkler_distance(s, t)
        );
    }

    // A small vocabulary with repeated values: the empirical weights and the
    // distance kernel together shape each distortion distribution.
    let schema = Schema::new(
        vec![FieldSpec {
            name: "name".into(),
            kind: FieldKind::String,
            column: 1,
        }],
        0,
        None,
    )
    .unwrap();
    let rows: Vec<Vec<String>> = ["MARTHA", "MARTHA", "MARHTA", "MARK", "BERT"]
        .iter()
        .map(|w| vec!["1".to_string(), w.to_string()])
        .collect();
    let dataset = Dataset::intern(&rows, &schema).unwrap();
    let hp = Hyperparams {
        a: 1.0,
        b: 99.0,
        c: 1.0,
        n_pop: dataset.n_records(),
        distance: StringDistance::Edit,
    };
    let tables = FieldTables::build(&dataset, &hp).unwrap();

    println!("\ndistortion distributions (c = {}):", hp.c);
    for y in 0..dataset.vocab[0].len() {
        let pmf = distortion_pmf(&tables, &dataset, 0, y).unwrap();
        let rendered: Vec<String> = dataset.vocab[0]
            .iter()
            .zip(&pmf)
            .map(|(w, p)| format!("{w}: {p:.3}"))
            .collect();
        println!("  around {:8} -> {}", dataset.vocab[0][y], rendered.join(", "));
    }
}
