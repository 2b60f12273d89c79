//! From posterior samples of the linkage structure to a single transitive
//! point estimate, and why naive pairwise thresholding is not one.
//!
//!     cargo run --example linkage_estimate

use eblink::gibbs::SampleLog;
use eblink::linkage::{
    mpmms, pairwise_match_probs, record_mms_distribution, shared_mpmms_linkage,
};

fn main() {
    // Three records A, B, C; five posterior samples of the assignments.
    // A and B are often linked, B and C are often linked, A and C rarely.
    let log = SampleLog::from_lambda_snapshots(
        3,
        &[
            vec![0, 0, 1],
            vec![0, 0, 1],
            vec![1, 0, 0],
            vec![1, 0, 0],
            vec![0, 0, 0],
        ],
    );

    let probs = pairwise_match_probs(&log).unwrap();
    println!("pairwise match probabilities:");
    let mut pairs: Vec<_> = probs.iter().collect();
    pairs.sort_by_key(|(pair, _)| **pair);
    for ((a, b), p) in pairs {
        println!("  {}-{}: {p:.2}", ["A", "B", "C"][*a as usize], ["A", "B", "C"][*b as usize]);
    }
    println!(
        "thresholding at 1/2 links A-B and B-C but not A-C: not a partition.\n"
    );

    for record in 0..3 {
        let dist = record_mms_distribution(&log, record).unwrap();
        let rendered: Vec<String> = dist
            .iter()
            .map(|(set, p)| {
                let names: Vec<&str> = set.iter().map(|&r| ["A", "B", "C"][r as usize]).collect();
                format!("{{{}}}: {p:.2}", names.join(","))
            })
            .collect();
        let best: Vec<&str> = mpmms(&log, record)
            .unwrap()
            .iter()
            .map(|&r| ["A", "B", "C"][r as usize])
            .collect();
        println!(
            "record {}: MMS distribution {}; MPMMS {{{}}}",
            ["A", "B", "C"][record],
            rendered.join(", "),
            best.join(",")
        );
    }

    let estimate = shared_mpmms_linkage(&log).unwrap();
    println!("\nshared-MPMMS estimate (always a partition): {:?}", estimate.clusters());
}
