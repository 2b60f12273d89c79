//! Sensitivity of the posterior to the distortion prior: small values of b
//! allow moderate distortion probabilities and drag the inferred number of
//! distinct entities below the truth.
//!
//!     cargo run --release --example sensitivity_sweep

use eblink::eval::n_distinct_summary;
use eblink::gibbs::{run_sampler, SamplerConfig};
use eblink::model::Hyperparams;
use eblink::strdist::{FieldTables, StringDistance};
use eblink::synth::{generate_synthetic, GenConfig};

fn main() {
    let gen = GenConfig::person_register(300, 30, 1.0, 0.05, 17);
    let dataset = generate_synthetic(&gen).unwrap();
    println!("truth: 270 distinct entities\n");
    println!("{:>8} {:>8} | {:>10} {:>8}", "a", "b", "mean", "sd");

    // The prior mean a / (a + b) is 0.1 in the first row and 0.002 in the
    // rest; small b is what hurts.
    for (a, b) in [(1.0, 9.0), (0.02, 9.98), (0.2, 99.8), (1.0, 499.0)] {
        let hp = Hyperparams {
            a,
            b,
            c: 1.0,
            n_pop: dataset.n_records(),
            distance: StringDistance::Edit,
        };
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let mut config = SamplerConfig::new(25_000, 1);
        config.record_lambda = false;
        let log = run_sampler(&dataset, &tables, &hp, &config);
        let summary = n_distinct_summary(&log).unwrap();
        println!(
            "{a:>8} {b:>8} | {:>10.2} {:>8.2}",
            summary.mean, summary.sd
        );
    }
}
