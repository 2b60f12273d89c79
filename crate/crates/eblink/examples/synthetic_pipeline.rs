//! End-to-end pipeline on synthetic data: generate a register with known
//! duplicates, sample the posterior, estimate the linkage structure, and
//! score it against the ground truth.
//!
//!     cargo run --release --example synthetic_pipeline

use eblink::eval::{confusion_counts, fdr, fnr, n_distinct_summary};
use eblink::gibbs::{run_sampler, SamplerConfig};
use eblink::linkage::{shared_mpmms_linkage, LinkagePartition};
use eblink::model::Hyperparams;
use eblink::strdist::{FieldTables, StringDistance};
use eblink::synth::{generate_synthetic, GenConfig};

fn main() {
    // 500 records, 50 of them perturbed duplicates of other records.
    let gen = GenConfig::person_register(500, 50, 1.0, 0.05, 42);
    let dataset = generate_synthetic(&gen).expect("generator settings are valid");
    println!(
        "dataset: {} records, {} string + {} categorical fields",
        dataset.n_records(),
        dataset.schema.p_s(),
        dataset.schema.p_c()
    );

    let hp = Hyperparams {
        a: 1.0,
        b: 99.0, // prior mean distortion probability 0.01
        c: 1.0,
        n_pop: dataset.n_records(),
        distance: StringDistance::Edit,
    };
    let tables = FieldTables::build(&dataset, &hp).expect("vocabulary under the cap");

    let config = SamplerConfig::new(20_000, 7);
    let log = run_sampler(&dataset, &tables, &hp, &config);

    let summary = n_distinct_summary(&log).unwrap();
    println!(
        "posterior number of distinct entities: mean {:.1}, sd {:.1} (truth: 450)",
        summary.mean, summary.sd
    );

    let estimate = shared_mpmms_linkage(&log).unwrap();
    let truth = LinkagePartition::from_labels(dataset.truth.as_ref().unwrap());
    let counts = confusion_counts(&estimate, &truth).unwrap();
    println!(
        "estimate: {} clusters; CL {} FN {} FP {}",
        estimate.clusters().len(),
        counts.correct_links,
        counts.false_negatives,
        counts.false_positives
    );
    println!("FNR {:.4}  FDR {:.4}", fnr(&counts), fdr(&counts));
}
