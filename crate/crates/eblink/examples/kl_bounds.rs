//! Divergence identities and bounds for the distortion model's observation
//! distributions: the 2(1-beta) L1 identity, the Pinsker sandwich, the Fano
//! error bound, and the distance-MGF consistency checks.
//!
//!     cargo run --example kl_bounds

use eblink::klbounds::{
    categorical_reverse_pinsker_bound, fano_bound, kl_divergence, l1_distance, pinsker_check,
    reverse_pinsker_check, run_default_checks, CategoricalModelParams,
};

fn main() {
    let params = CategoricalModelParams {
        theta: vec![0.5, 0.3, 0.2],
        beta: 0.4,
        y: 0,
        y_prime: 2,
    };
    let p = params.pmf().unwrap();
    let q = params.pmf_prime().unwrap();
    println!("P = {p:?}");
    println!("Q = {q:?}");
    println!(
        "L1 distance {:.6} vs 2(1 - beta) = {:.6}",
        l1_distance(&p, &q).unwrap(),
        2.0 * (1.0 - params.beta)
    );
    let kl = kl_divergence(&p, &q).unwrap();
    let pinsker = pinsker_check(&p, &q).unwrap();
    let reverse = reverse_pinsker_check(&p, &q).unwrap();
    println!(
        "Pinsker sandwich: {:.6} <= KL = {kl:.6} <= {:.6}",
        pinsker.rhs, reverse.rhs
    );
    println!(
        "categorical-model upper bound: {:.6}",
        categorical_reverse_pinsker_bound(&params).unwrap()
    );
    println!(
        "Fano floor with gamma = ln 2 and r = 16: {:.3}",
        fano_bound(std::f64::consts::LN_2, 16).unwrap()
    );

    println!("\ndefault verification suite:");
    for report in run_default_checks(0, 10_000) {
        println!(
            "  {} {} [{} case(s)]: {}",
            if report.passed { "PASS" } else { "FAIL" },
            report.name,
            report.cases,
            report.detail
        );
    }
}
