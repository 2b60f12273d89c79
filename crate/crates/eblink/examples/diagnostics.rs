//! Convergence diagnostics on a sampler run: the posterior of the number of
//! distinct entities, singles/doubles/triples traces, and Geweke scores.
//!
//!     cargo run --release --example diagnostics

use eblink::eval::{geweke_z, multiplicity_trace, n_distinct_summary};
use eblink::gibbs::{run_sampler, SamplerConfig};
use eblink::model::Hyperparams;
use eblink::strdist::{FieldTables, StringDistance};
use eblink::synth::{generate_synthetic, GenConfig};

fn main() {
    let gen = GenConfig::person_register(200, 20, 1.0, 0.05, 5);
    let dataset = generate_synthetic(&gen).unwrap();
    let hp = Hyperparams {
        a: 1.0,
        b: 99.0,
        c: 1.0,
        n_pop: dataset.n_records(),
        distance: StringDistance::Edit,
    };
    let tables = FieldTables::build(&dataset, &hp).unwrap();
    let mut config = SamplerConfig::new(30_000, 11);
    config.record_lambda = false; // diagnostics only
    let log = run_sampler(&dataset, &tables, &hp, &config);

    let summary = n_distinct_summary(&log).unwrap();
    println!(
        "distinct entities: mean {:.2}, sd {:.2} over {} sweeps (truth: 180)",
        summary.mean, summary.sd, summary.sweeps
    );
    println!("posterior histogram (top bins):");
    let mut bins = summary.histogram.clone();
    bins.sort_by_key(|&(_, count)| std::cmp::Reverse(count));
    for &(value, count) in bins.iter().take(5) {
        println!("  {value}: {count}");
    }

    for (name, m) in [("singles", 1), ("doubles", 2), ("triples", 3)] {
        let trace = multiplicity_trace(&log, m).unwrap();
        let series: Vec<f64> = trace.iter().map(|&v| v as f64).collect();
        let g = geweke_z(&series, 0.1, 0.5).unwrap();
        // |z| well above ~4 flags a drifting trace (e.g. a chain still
        // descending from its all-singleton start).
        println!(
            "{name}: last value {}, Geweke z = {:.2}{}",
            trace.last().unwrap(),
            g.z,
            if g.zero_variance { " (constant trace)" } else { "" }
        );
    }
}
