//! Numerical verification of the divergence identities and bounds satisfied
//! by the distortion model's observation distributions.
//!
//! For categorical data, the observed value given a latent value `y` has pmf
//! `P(m) = I(y = m)(1 - beta) + theta_m * beta`. Two such distributions that
//! differ only in the latent value sit exactly `2(1 - beta)` apart in L1, and
//! their KL divergence is sandwiched between Pinsker's lower bound and a
//! reverse-Pinsker upper bound. The string-model analogue tilts the mixture
//! by the distance kernel.

use thiserror::Error;

use crate::model::{Dataset, FieldKind, FieldSpec, Hyperparams, Schema};
use crate::strdist::{FieldTables, StringDistance, TablesError};

#[derive(Debug, Error)]
pub enum KlError {
    #[error("theta must be a strictly positive probability vector: {detail}")]
    BadTheta { detail: String },
    #[error("beta = {beta} outside (0, 1)")]
    BadBeta { beta: f64 },
    #[error("latent value index {index} out of range for {size} categories")]
    BadIndex { index: usize, size: usize },
    #[error("vectors have different lengths ({p} vs {q})")]
    LengthMismatch { p: usize, q: usize },
    #[error("q has zero mass at index {index} where p does not")]
    SupportViolation { index: usize },
    #[error("q has a zero entry at index {index}; the reverse-Pinsker bound is infinite")]
    ZeroEntry { index: usize },
    #[error("Fano bound requires r >= 2, got {r}")]
    BadFano { r: u64 },
}

/// Parameters of a pair of categorical observation distributions sharing the
/// category weights `theta` and distortion probability `beta` but centered at
/// latent values `y` and `y_prime`.
#[derive(Debug, Clone)]
pub struct CategoricalModelParams {
    pub theta: Vec<f64>,
    pub beta: f64,
    pub y: usize,
    pub y_prime: usize,
}

impl CategoricalModelParams {
    pub fn validate(&self) -> Result<(), KlError> {
        check_theta(&self.theta)?;
        check_beta(self.beta)?;
        for &idx in [self.y, self.y_prime].iter() {
            if idx >= self.theta.len() {
                return Err(KlError::BadIndex {
                    index: idx,
                    size: self.theta.len(),
                });
            }
        }
        Ok(())
    }

    /// Observation pmf centered at `y`.
    pub fn pmf(&self) -> Result<Vec<f64>, KlError> {
        self.validate()?;
        Ok(categorical_pmf_unchecked(&self.theta, self.beta, self.y))
    }

    /// Observation pmf centered at `y_prime`.
    pub fn pmf_prime(&self) -> Result<Vec<f64>, KlError> {
        self.validate()?;
        Ok(categorical_pmf_unchecked(
            &self.theta,
            self.beta,
            self.y_prime,
        ))
    }
}

fn check_theta(theta: &[f64]) -> Result<(), KlError> {
    if theta.is_empty() {
        return Err(KlError::BadTheta {
            detail: "empty vector".to_string(),
        });
    }
    if let Some(bad) = theta.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(KlError::BadTheta {
            detail: format!("entry {bad} is not strictly positive"),
        });
    }
    let total: f64 = theta.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(KlError::BadTheta {
            detail: format!("entries sum to {total}"),
        });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), KlError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(KlError::BadBeta { beta });
    }
    Ok(())
}

fn categorical_pmf_unchecked(theta: &[f64], beta: f64, y: usize) -> Vec<f64> {
    let mut p: Vec<f64> = theta.iter().map(|t| t * beta).collect();
    p[y] += 1.0 - beta;
    p
}

/// `P(m) = I(y = m)(1 - beta) + theta_m * beta`.
pub fn categorical_pmf(theta: &[f64], beta: f64, y: usize) -> Result<Vec<f64>, KlError> {
    check_theta(theta)?;
    check_beta(beta)?;
    if y >= theta.len() {
        return Err(KlError::BadIndex {
            index: y,
            size: theta.len(),
        });
    }
    Ok(categorical_pmf_unchecked(theta, beta, y))
}

/// String-model observation pmf over a field's vocabulary, centered at
/// vocabulary entry `y`: `P(m)` is proportional to
/// `I(y = m)(1 - beta) + alpha(m) * beta * exp(-c * d(m, y))`, normalized.
pub fn eb_string_pmf(
    tables: &FieldTables,
    dataset: &Dataset,
    field: usize,
    y: usize,
    beta: f64,
) -> Result<Vec<f64>, KlError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(KlError::BadBeta { beta });
    }
    let ft = tables
        .try_field(field)
        .map_err(|_| KlError::BadIndex { index: field, size: tables.n_fields() })?;
    let st = tables
        .string_tables(field, dataset)
        .map_err(|_| KlError::BadIndex { index: field, size: tables.n_fields() })?;
    if y >= ft.alpha.probs.len() {
        return Err(KlError::BadIndex {
            index: y,
            size: ft.alpha.probs.len(),
        });
    }
    let mut p: Vec<f64> = (0..ft.alpha.probs.len())
        .map(|m| ft.alpha.probs[m] * beta * st.kernel(m, y))
        .collect();
    p[y] += 1.0 - beta;
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Total-variation-style L1 distance between two vectors of equal length.
pub fn l1_distance(p: &[f64], q: &[f64]) -> Result<f64, KlError> {
    if p.len() != q.len() {
        return Err(KlError::LengthMismatch {
            p: p.len(),
            q: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// KL divergence with natural logarithms; `0 ln 0 = 0`. Errors when q has no
/// mass somewhere p does.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, KlError> {
    if p.len() != q.len() {
        return Err(KlError::LengthMismatch {
            p: p.len(),
            q: q.len(),
        });
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(KlError::SupportViolation { index: i });
        }
        kl += pi * (pi / qi).ln();
    }
    Ok(kl)
}

/// Both sides of a bound, and whether it held.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Pinsker's inequality: `KL(p || q) >= ||p - q||_1^2 / 4`.
pub fn pinsker_check(p: &[f64], q: &[f64]) -> Result<BoundCheck, KlError> {
    let lhs = kl_divergence(p, q)?;
    let l1 = l1_distance(p, q)?;
    let rhs = l1 * l1 / 4.0;
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

/// Reverse Pinsker bound: `KL(p || q) <= ||p - q||_1 * ln(1 / min_m q_m)`.
pub fn reverse_pinsker_check(p: &[f64], q: &[f64]) -> Result<BoundCheck, KlError> {
    if let Some(idx) = q.iter().position(|&v| v <= 0.0) {
        return Err(KlError::ZeroEntry { index: idx });
    }
    let lhs = kl_divergence(p, q)?;
    let min_q = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let rhs = l1_distance(p, q)? * (1.0 / min_q).ln();
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

/// The categorical-model specialization of the reverse-Pinsker bound for
/// `y != y_prime`: `2 (1 - beta) ln(1 / (min_m theta_m * beta))`.
pub fn categorical_reverse_pinsker_bound(params: &CategoricalModelParams) -> Result<f64, KlError> {
    params.validate()?;
    let min_theta = params.theta.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(2.0 * (1.0 - params.beta) * (1.0 / (min_theta * params.beta)).ln())
}

/// Fano lower bound on the error probability, `1 - (gamma + ln 2) / ln r`,
/// clamped below at zero for reporting.
pub fn fano_bound(gamma: f64, r: u64) -> Result<f64, KlError> {
    if r < 2 {
        return Err(KlError::BadFano { r });
    }
    Ok((1.0 - (gamma + std::f64::consts::LN_2) / (r as f64).ln()).max(0.0))
}

/// Moment generating function of the distance to `m_prime` under the
/// empirical distribution, evaluated at `-c`:
/// `sum_m alpha(m) exp(-c d(m, m_prime))`. Equals `1 / h(m_prime)`.
pub fn distance_mgf(
    tables: &FieldTables,
    dataset: &Dataset,
    field: usize,
    m_prime: usize,
) -> Result<f64, TablesError> {
    let ft = tables.try_field(field)?;
    let st = tables.string_tables(field, dataset)?;
    Ok((0..ft.alpha.probs.len())
        .map(|m| ft.alpha.probs[m] * st.kernel(m, m_prime))
        .sum())
}

/// One entry of the bound-verification report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: u64,
    pub passed: bool,
    /// Slack against the bound at the binding case: nonnegative means the
    /// check held everywhere.
    pub worst_margin: f64,
    pub detail: String,
}

fn random_params<R: rand::Rng>(rng: &mut R) -> CategoricalModelParams {
    let m = rng.gen_range(2..=8);
    let mut theta: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().ln() + 1e-6).collect();
    let total: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|t| *t /= total);
    let beta = rng.gen_range(0.01..0.99);
    let y = rng.gen_range(0..m);
    let y_prime = (y + rng.gen_range(1..m)) % m;
    CategoricalModelParams {
        theta,
        beta,
        y,
        y_prime,
    }
}

fn builtin_string_instance() -> (Dataset, Hyperparams, FieldTables) {
    let words = [
        "martha", "marhta", "mark", "maria", "bert", "berta", "martha", "mark",
    ];
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
    let rows: Vec<Vec<String>> = words
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
    (dataset, hp, tables)
}

/// Run the default bound-verification suite: the L1 identity, the Pinsker
/// sandwich, the Fano arithmetic, the distortion-limit behaviour, and the
/// MGF/normalizer consistency checks.
pub fn run_default_checks(seed: u64, cases: u64) -> Vec<CheckReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    let mut worst_identity = 0.0f64;
    let mut worst_pinsker = f64::INFINITY;
    let mut worst_reverse = f64::INFINITY;
    let mut worst_special = f64::INFINITY;
    for _ in 0..cases {
        let params = random_params(&mut rng);
        let p = params.pmf().unwrap();
        let q = params.pmf_prime().unwrap();
        let l1 = l1_distance(&p, &q).unwrap();
        worst_identity = worst_identity.max((l1 - 2.0 * (1.0 - params.beta)).abs());
        let pinsker = pinsker_check(&p, &q).unwrap();
        worst_pinsker = worst_pinsker.min(pinsker.lhs - pinsker.rhs);
        let reverse = reverse_pinsker_check(&p, &q).unwrap();
        worst_reverse = worst_reverse.min(reverse.rhs - reverse.lhs);
        let special = categorical_reverse_pinsker_bound(&params).unwrap();
        worst_special = worst_special.min(special - pinsker.lhs);
    }
    reports.push(CheckReport {
        name: "l1-identity".into(),
        cases,
        passed: worst_identity <= 1e-12,
        worst_margin: 1e-12 - worst_identity,
        detail: format!(
            "max |‖P−Q‖₁ − 2(1−β)| = {worst_identity:.3e} over random categorical pairs"
        ),
    });
    reports.push(CheckReport {
        name: "pinsker".into(),
        cases,
        passed: worst_pinsker >= 0.0,
        worst_margin: worst_pinsker,
        detail: "KL ≥ ‖P−Q‖₁²/4 on every pair".into(),
    });
    reports.push(CheckReport {
        name: "reverse-pinsker".into(),
        cases,
        passed: worst_reverse >= 0.0,
        worst_margin: worst_reverse,
        detail: "KL ≤ ‖P−Q‖₁ ln(1/min Q) on every pair".into(),
    });
    reports.push(CheckReport {
        name: "categorical-reverse-pinsker".into(),
        cases,
        passed: worst_special >= 0.0,
        worst_margin: worst_special,
        detail: "KL ≤ 2(1−β) ln(1/(min θ · β)) on every pair".into(),
    });

    // Random simplex pairs outside the categorical model.
    let mut worst_sandwich = f64::INFINITY;
    for _ in 0..cases {
        let m = rng.gen_range(2..=10);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().ln() + 1e-9).collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            v
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let pinsker = pinsker_check(&p, &q).unwrap();
        let reverse = reverse_pinsker_check(&p, &q).unwrap();
        worst_sandwich = worst_sandwich
            .min(pinsker.lhs - pinsker.rhs)
            .min(reverse.rhs - reverse.lhs);
    }
    reports.push(CheckReport {
        name: "simplex-sandwich".into(),
        cases,
        passed: worst_sandwich >= 0.0,
        worst_margin: worst_sandwich,
        detail: "Pinsker and reverse Pinsker on random simplex pairs".into(),
    });

    let fano_cases = [
        (0.0, 2, 0.0),
        (std::f64::consts::LN_2, 16, 0.5),
        (100.0, 4, 0.0),
    ];
    let worst_fano = fano_cases
        .iter()
        .map(|&(g, r, expect)| (fano_bound(g, r).unwrap() - expect).abs())
        .fold(0.0, f64::max);
    reports.push(CheckReport {
        name: "fano".into(),
        cases: fano_cases.len() as u64,
        passed: worst_fano <= 1e-15,
        worst_margin: 1e-15 - worst_fano,
        detail: "fixed-case arithmetic including the clamp at zero".into(),
    });

    // Limit behaviour in the distortion probability.
    let theta = vec![0.25; 4];
    let heavy = CategoricalModelParams {
        theta: theta.clone(),
        beta: 1.0 - 1e-6,
        y: 0,
        y_prime: 1,
    };
    let upper_at_full_distortion = categorical_reverse_pinsker_bound(&heavy).unwrap();
    let light = CategoricalModelParams {
        theta,
        beta: 1e-6,
        y: 0,
        y_prime: 1,
    };
    let p = light.pmf().unwrap();
    let q = light.pmf_prime().unwrap();
    let lower_at_no_distortion = {
        let l1 = l1_distance(&p, &q).unwrap();
        l1 * l1 / 4.0
    };
    let limits_ok = upper_at_full_distortion < 1e-4 && (lower_at_no_distortion - 1.0).abs() < 3e-6;
    reports.push(CheckReport {
        name: "beta-limits".into(),
        cases: 2,
        passed: limits_ok,
        worst_margin: (1e-4 - upper_at_full_distortion)
            .min(3e-6 - (lower_at_no_distortion - 1.0).abs()),
        detail: format!(
            "upper bound {upper_at_full_distortion:.3e} as β→1; Pinsker floor {lower_at_no_distortion:.8} as β→0"
        ),
    });

    // Cross-checks against the string tables.
    let (dataset, hp, tables) = builtin_string_instance();
    let st_vocab = dataset.vocab[0].len();
    let mut worst_mgf = 0.0f64;
    for w in 0..st_vocab {
        let mgf = distance_mgf(&tables, &dataset, 0, w).unwrap();
        let h = tables.string_tables(0, &dataset).unwrap().h[w];
        worst_mgf = worst_mgf.max((mgf * h - 1.0).abs());
    }
    reports.push(CheckReport {
        name: "mgf-normalizer".into(),
        cases: st_vocab as u64,
        passed: worst_mgf <= 1e-12,
        worst_margin: 1e-12 - worst_mgf,
        detail: "distanceMGF(w) · h(w) = 1 across the vocabulary".into(),
    });

    // Growth of the recovery lower-bound factor (1 - e^{-c d(t,t')}) * MGF
    // as the steepness increases from (near) zero.
    let t = 0usize;
    let t_prime = dataset.vocab[0]
        .iter()
        .position(|w| w != &dataset.vocab[0][t])
        .unwrap();
    let grid = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0];
    let factor_at = |c: f64| -> f64 {
        let hp_c = Hyperparams { c, ..hp };
        let tables_c = FieldTables::build(&dataset, &hp_c).unwrap();
        let st = tables_c.string_tables(0, &dataset).unwrap();
        let mgf = distance_mgf(&tables_c, &dataset, 0, t).unwrap();
        (1.0 - (-c * st.dist(t, t_prime)).exp()) * mgf
    };
    let first = factor_at(grid[0]);
    let last = factor_at(grid[grid.len() - 1]);
    reports.push(CheckReport {
        name: "mgf-growth".into(),
        cases: grid.len() as u64,
        passed: last > first && first >= 0.0,
        worst_margin: last - first,
        detail: format!(
            "recovery factor grows with steepness: {first:.4} at c={} to {last:.4} at c={}",
            grid[0],
            grid[grid.len() - 1]
        ),
    });

    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strdist::distortion_pmf;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn categorical_pmf_cases() {
        let theta = vec![0.5, 0.5];
        // Full distortion: the pmf is theta itself.
        let p = categorical_pmf(&theta, 1.0 - 1e-15, 0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
        // No distortion: point mass at y.
        let p = categorical_pmf(&theta, 1e-15, 1).unwrap();
        assert!(p[1] > 1.0 - 1e-14 && p[0] < 1e-14);
        // Half distortion.
        let p = categorical_pmf(&theta, 0.5, 0).unwrap();
        assert_eq!(p, vec![0.75, 0.25]);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn categorical_pmf_validation() {
        assert!(categorical_pmf(&[0.5, 0.6], 0.5, 0).is_err());
        assert!(categorical_pmf(&[1.0, 0.0], 0.5, 0).is_err());
        assert!(categorical_pmf(&[0.5, 0.5], 1.5, 0).is_err());
        assert!(categorical_pmf(&[0.5, 0.5], 0.5, 2).is_err());
    }

    #[test]
    fn eb_string_pmf_reductions() {
        let (dataset, hp, tables) = builtin_string_instance();
        let vocab = dataset.vocab[0].len();
        // beta = 0: point mass at the latent value.
        for y in 0..vocab {
            let p = eb_string_pmf(&tables, &dataset, 0, y, 0.0).unwrap();
            assert_eq!(p[y], 1.0);
            assert!(p.iter().enumerate().all(|(m, &v)| m == y || v == 0.0));
        }
        // beta = 1: exactly the distortion distribution.
        for y in 0..vocab {
            let p = eb_string_pmf(&tables, &dataset, 0, y, 1.0).unwrap();
            let f = distortion_pmf(&tables, &dataset, 0, y).unwrap();
            for (a, b) in p.iter().zip(&f) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let _ = hp;
    }

    #[test]
    fn eb_string_pmf_two_value_case() {
        // S = {a, b}, d = 1, c = 1, alpha uniform, beta = 1/2, y = a:
        // weights (0.5 + 0.25, 0.25 e^{-1}), then normalized.
        let schema = Schema::new(
            vec![FieldSpec {
                name: "w".into(),
                kind: FieldKind::String,
                column: 1,
            }],
            0,
            None,
        )
        .unwrap();
        let rows = vec![
            vec!["1".to_string(), "a".to_string()],
            vec!["1".to_string(), "b".to_string()],
        ];
        let dataset = Dataset::intern(&rows, &schema).unwrap();
        let hp = Hyperparams {
            a: 1.0,
            b: 99.0,
            c: 1.0,
            n_pop: 2,
            distance: StringDistance::Edit,
        };
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let p = eb_string_pmf(&tables, &dataset, 0, 0, 0.5).unwrap();
        let w0 = 0.75;
        let w1 = 0.25 * (-1.0f64).exp();
        assert!((p[0] - w0 / (w0 + w1)).abs() < 1e-12);
        assert!((p[1] - w1 / (w0 + w1)).abs() < 1e-12);
    }

    #[test]
    fn l1_and_kl_basics() {
        let p = vec![0.75, 0.25];
        let q = vec![0.25, 0.75];
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((l1_distance(&p, &q).unwrap() - 1.0).abs() < 1e-15);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!((kl - 0.5 * 3.0f64.ln()).abs() < 1e-12);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert!(l1_distance(&[0.5], &[0.5, 0.0]).is_err());
    }

    #[test]
    fn pinsker_hand_case() {
        let p = vec![0.75, 0.25];
        let q = vec![0.25, 0.75];
        let check = pinsker_check(&p, &q).unwrap();
        assert!(check.holds);
        assert!((check.rhs - 0.25).abs() < 1e-15);
        let rp = reverse_pinsker_check(&p, &q).unwrap();
        assert!(rp.holds);
        assert!((rp.rhs - 4.0f64.ln()).abs() < 1e-12);
        let eq = pinsker_check(&p, &p).unwrap();
        assert!(eq.holds && eq.lhs == 0.0 && eq.rhs == 0.0);
    }

    #[test]
    fn reverse_pinsker_rejects_zero_entries() {
        assert!(matches!(
            reverse_pinsker_check(&[0.5, 0.5], &[1.0, 0.0]),
            Err(KlError::ZeroEntry { index: 1 })
        ));
        // Degenerate equal case: 0 <= 0.
        let eq = reverse_pinsker_check(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!(eq.holds && eq.lhs == 0.0 && eq.rhs == 0.0);
    }

    #[test]
    fn mgf_two_value_hand_case() {
        // S = {a, b}, d = 1, c = 1, alpha uniform: 0.5 + 0.5 e^{-1}.
        let schema = Schema::new(
            vec![FieldSpec {
                name: "w".into(),
                kind: FieldKind::String,
                column: 1,
            }],
            0,
            None,
        )
        .unwrap();
        let rows = vec![
            vec!["1".to_string(), "a".to_string()],
            vec!["1".to_string(), "b".to_string()],
        ];
        let dataset = Dataset::intern(&rows, &schema).unwrap();
        let hp = Hyperparams {
            a: 1.0,
            b: 99.0,
            c: 1.0,
            n_pop: 2,
            distance: StringDistance::Edit,
        };
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let mgf = distance_mgf(&tables, &dataset, 0, 0).unwrap();
        assert!((mgf - (0.5 + 0.5 * (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn fano_cases() {
        assert_eq!(fano_bound(0.0, 2).unwrap(), 0.0);
        assert!((fano_bound(std::f64::consts::LN_2, 16).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fano_bound(1e9, 4).unwrap(), 0.0);
        assert!(fano_bound(0.0, 1).is_err());
    }

    /// With dyadic theta and beta the identity is exact in floating point:
    /// every product and sum below fits in the 53-bit significand.
    #[test]
    fn l1_identity_exact_on_dyadic_parameters() {
        const GRID: u64 = 1 << 20;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10_000 {
            let m = rng.gen_range(2..=6);
            // Distinct dyadic cut points make theta dyadic and sum exactly 1.
            let mut cuts: Vec<u64> = Vec::new();
            while cuts.len() < m - 1 {
                let c = rng.gen_range(1..GRID);
                if !cuts.contains(&c) {
                    cuts.push(c);
                }
            }
            cuts.sort_unstable();
            let mut theta = Vec::with_capacity(m);
            let mut prev = 0u64;
            for &c in &cuts {
                theta.push((c - prev) as f64 / GRID as f64);
                prev = c;
            }
            theta.push((GRID - prev) as f64 / GRID as f64);
            let beta = rng.gen_range(1..GRID) as f64 / GRID as f64;
            let y = rng.gen_range(0..m);
            let y_prime = (y + rng.gen_range(1..m)) % m;
            let params = CategoricalModelParams {
                theta,
                beta,
                y,
                y_prime,
            };
            let p = params.pmf().unwrap();
            let q = params.pmf_prime().unwrap();
            let l1 = l1_distance(&p, &q).unwrap();
            assert_eq!(l1, 2.0 * (1.0 - beta), "identity not exact at {params:?}");
        }
    }

    #[test]
    fn bound_sweep_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let params = random_params(&mut rng);
            let p = params.pmf().unwrap();
            let q = params.pmf_prime().unwrap();
            let l1 = l1_distance(&p, &q).unwrap();
            assert!((l1 - 2.0 * (1.0 - params.beta)).abs() < 1e-12);
            assert!(pinsker_check(&p, &q).unwrap().holds);
            assert!(reverse_pinsker_check(&p, &q).unwrap().holds);
            let special = categorical_reverse_pinsker_bound(&params).unwrap();
            assert!(kl_divergence(&p, &q).unwrap() <= special);
        }
    }

    #[test]
    fn mgf_matches_normalizer_inverse() {
        let (dataset, _, tables) = builtin_string_instance();
        let st = tables.string_tables(0, &dataset).unwrap();
        for w in 0..dataset.vocab[0].len() {
            let mgf = distance_mgf(&tables, &dataset, 0, w).unwrap();
            assert!((mgf * st.h[w] - 1.0).abs() < 1e-12);
            assert!(mgf > 0.0 && mgf <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn mgf_zero_steepness_is_one() {
        let (dataset, hp, _) = builtin_string_instance();
        let hp0 = Hyperparams { c: 0.0, ..hp };
        let tables = FieldTables::build(&dataset, &hp0).unwrap();
        for w in 0..dataset.vocab[0].len() {
            let mgf = distance_mgf(&tables, &dataset, 0, w).unwrap();
            assert!((mgf - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mgf_rejects_categorical_field() {
        let schema = Schema::new(
            vec![FieldSpec {
                name: "y".into(),
                kind: FieldKind::Categorical,
                column: 1,
            }],
            0,
            None,
        )
        .unwrap();
        let rows = vec![vec!["1".to_string(), "1990".to_string()]];
        let dataset = Dataset::intern(&rows, &schema).unwrap();
        let hp = Hyperparams {
            a: 1.0,
            b: 99.0,
            c: 1.0,
            n_pop: 1,
            distance: StringDistance::Edit,
        };
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        assert!(distance_mgf(&tables, &dataset, 0, 0).is_err());
    }

    #[test]
    fn default_checks_all_pass() {
        let reports = run_default_checks(7, 500);
        for report in &reports {
            assert!(report.passed, "check {} failed: {}", report.name, report.detail);
        }
    }
}
