//! Brute-force posterior enumeration for tiny instances.
//!
//! Walks every (lambda, Y, z) configuration, integrating the distortion
//! probabilities out of the Beta kernel analytically (Beta-Binomial
//! marginalization), and exposes exact marginals and full conditionals. This
//! is the independent oracle the sampler is checked against; it evaluates the
//! joint product form directly and shares nothing with the sampler's
//! conditional shortcut formulas.

use thiserror::Error;

use crate::model::{Dataset, Hyperparams, LatentState};
use crate::strdist::FieldTables;

/// Cap on actually-enumerated configurations.
pub const CONFIG_CAP: u64 = 10_000_000;
/// Cap on the (lambda, Y) outer loop, so the refusal itself stays cheap.
const PAIR_CAP: u128 = 30_000_000;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error(
        "enumeration refused: {pairs} (lambda, Y) combinations exceed the scan cap of {cap}"
    )]
    TooManyPairs { pairs: u128, cap: u128 },
    #[error(
        "enumeration refused: {count} feasible configurations exceed the cap of {cap}"
    )]
    TooManyConfigs { count: u64, cap: u64 },
    #[error("lambda marginal table would need {size} entries")]
    MarginalTooLarge { size: u128 },
}

/// Exact posterior over all feasible (lambda, Y, z) configurations of a tiny
/// instance, with beta integrated out analytically.
pub struct ExactPosterior<'a> {
    dataset: &'a Dataset,
    tables: &'a FieldTables,
    hp: &'a Hyperparams,
    /// ln of Beta(Z + a, n_i - Z + b) / Beta(a, b), per list, indexed by Z.
    ln_bb: Vec<Vec<f64>>,
    feasible: u64,
}

fn ln_rising(x: f64, m: usize) -> f64 {
    (0..m).map(|t| (x + t as f64).ln()).sum()
}

impl<'a> ExactPosterior<'a> {
    pub fn new(
        dataset: &'a Dataset,
        tables: &'a FieldTables,
        hp: &'a Hyperparams,
    ) -> Result<ExactPosterior<'a>, ExactError> {
        let n = dataset.n_records();
        let p = dataset.n_fields();
        let mut pairs: u128 = 1;
        for _ in 0..n {
            pairs = pairs.saturating_mul(hp.n_pop as u128);
        }
        for f in 0..p {
            for _ in 0..hp.n_pop {
                pairs = pairs.saturating_mul(dataset.vocab[f].len() as u128);
            }
        }
        if pairs > PAIR_CAP {
            return Err(ExactError::TooManyPairs {
                pairs,
                cap: PAIR_CAP,
            });
        }
        let ln_bb = dataset
            .list_sizes
            .iter()
            .map(|&ni| {
                (0..=ni)
                    .map(|z| {
                        ln_rising(hp.a, z) + ln_rising(hp.b, ni - z)
                            - ln_rising(hp.a + hp.b, ni)
                    })
                    .collect()
            })
            .collect();
        let mut oracle = ExactPosterior {
            dataset,
            tables,
            hp,
            ln_bb,
            feasible: 0,
        };
        let mut feasible: u64 = 0;
        oracle.for_each_pair(|lambda, y| {
            let mut agree = 0u32;
            for (r, &lam) in lambda.iter().enumerate() {
                for f in 0..p {
                    if oracle.dataset.value(r, f) == y[lam as usize * p + f] {
                        agree += 1;
                    }
                }
            }
            feasible = feasible.saturating_add(1u64 << agree);
        });
        if feasible > CONFIG_CAP {
            return Err(ExactError::TooManyConfigs {
                count: feasible,
                cap: CONFIG_CAP,
            });
        }
        oracle.feasible = feasible;
        Ok(oracle)
    }

    /// Number of configurations with nonzero posterior mass.
    pub fn config_count(&self) -> u64 {
        self.feasible
    }

    /// Visit every (lambda, Y) combination via mixed-radix odometers.
    fn for_each_pair(&self, mut visit: impl FnMut(&[u32], &[u32])) {
        let n = self.dataset.n_records();
        let p = self.dataset.n_fields();
        let n_pop = self.hp.n_pop;
        let y_radix: Vec<usize> = (0..n_pop * p)
            .map(|pos| self.dataset.vocab[pos % p].len())
            .collect();
        let mut lambda = vec![0u32; n];
        loop {
            let mut y = vec![0u32; n_pop * p];
            loop {
                visit(&lambda, &y);
                // Increment the Y odometer.
                let mut pos = 0;
                loop {
                    if pos == y.len() {
                        break;
                    }
                    y[pos] += 1;
                    if (y[pos] as usize) < y_radix[pos] {
                        break;
                    }
                    y[pos] = 0;
                    pos += 1;
                }
                if pos == y.len() {
                    break;
                }
            }
            let mut pos = 0;
            loop {
                if pos == lambda.len() {
                    break;
                }
                lambda[pos] += 1;
                if (lambda[pos] as usize) < n_pop {
                    break;
                }
                lambda[pos] = 0;
                pos += 1;
            }
            if pos == lambda.len() {
                break;
            }
        }
    }

    /// ln of the z = 1 factor for one record cell: alpha(x), times the
    /// distance kernel and normalizer for string fields.
    fn cell_z1_logw(&self, record: usize, field: usize, y_val: u32) -> f64 {
        let ft = self.tables.field(field);
        let x = self.dataset.value(record, field) as usize;
        let mut lw = ft.log_alpha[x];
        if field < self.dataset.schema.p_s() {
            let st = ft.string.as_ref().unwrap();
            lw += st.log_h[y_val as usize] - self.hp.c * st.dist(x, y_val as usize);
        }
        lw
    }

    fn prior_logw(&self, y: &[u32]) -> f64 {
        let p = self.dataset.n_fields();
        y.iter()
            .enumerate()
            .map(|(pos, &v)| self.tables.field(pos % p).log_alpha[v as usize])
            .sum()
    }

    /// ln of the data factor of a configuration: everything in the joint
    /// posterior except the beta kernel. Negative infinity iff some z = 0
    /// cell disagrees with its latent value.
    pub fn log_data_factor(&self, lambda: &[u32], y: &[u32], z: &[u8]) -> f64 {
        let n = self.dataset.n_records();
        let p = self.dataset.n_fields();
        let mut lw = self.prior_logw(y);
        let _ = n;
        for (r, &lam) in lambda.iter().enumerate() {
            for f in 0..p {
                let yv = y[lam as usize * p + f];
                if z[r * p + f] == 0 {
                    if self.dataset.value(r, f) != yv {
                        return f64::NEG_INFINITY;
                    }
                } else {
                    lw += self.cell_z1_logw(r, f, yv);
                }
            }
        }
        lw
    }

    /// ln of the beta-integrated weight of a configuration.
    pub fn log_integrated_weight(&self, lambda: &[u32], y: &[u32], z: &[u8]) -> f64 {
        let p = self.dataset.n_fields();
        let mut lw = self.log_data_factor(lambda, y, z);
        if lw == f64::NEG_INFINITY {
            return lw;
        }
        for i in 0..self.dataset.n_lists() {
            for f in 0..p {
                let zs: usize = (0..self.dataset.n_records())
                    .filter(|&r| self.dataset.list_of[r] as usize == i)
                    .map(|r| z[r * p + f] as usize)
                    .sum();
                lw += self.ln_bb[i][zs];
            }
        }
        lw
    }

    /// Visit every feasible configuration with its beta-integrated weight
    /// (unnormalized, linear scale).
    pub fn for_each_feasible(&self, mut visit: impl FnMut(&[u32], &[u32], &[u8], f64)) {
        let n = self.dataset.n_records();
        let p = self.dataset.n_fields();
        let k = self.dataset.n_lists();
        let mut z = vec![0u8; n * p];
        let mut z_base = vec![0usize; k * p];
        let mut free: Vec<(usize, usize, f64)> = Vec::new(); // (cell, list*p+f, logw)
        self.for_each_pair(|lambda, y| {
            free.clear();
            z_base.iter_mut().for_each(|v| *v = 0);
            let mut forced_lw = self.prior_logw(y);
            for (r, &lam) in lambda.iter().enumerate() {
                let list = self.dataset.list_of[r] as usize;
                for f in 0..p {
                    let cell = r * p + f;
                    let yv = y[lam as usize * p + f];
                    let lw1 = self.cell_z1_logw(r, f, yv);
                    if self.dataset.value(r, f) != yv {
                        z[cell] = 1;
                        z_base[list * p + f] += 1;
                        forced_lw += lw1;
                    } else {
                        z[cell] = 0;
                        free.push((cell, list * p + f, lw1));
                    }
                }
            }
            let masks = 1u64 << free.len();
            let mut z_counts = z_base.clone();
            for mask in 0..masks {
                let mut lw = forced_lw;
                z_counts.copy_from_slice(&z_base);
                for (b, &(cell, group, lw1)) in free.iter().enumerate() {
                    let on = (mask >> b) & 1 == 1;
                    z[cell] = u8::from(on);
                    if on {
                        lw += lw1;
                        z_counts[group] += 1;
                    }
                }
                for i in 0..k {
                    for f in 0..p {
                        lw += self.ln_bb[i][z_counts[i * p + f]];
                    }
                }
                visit(lambda, y, &z, lw.exp());
            }
            // Leave z clean for the next pair.
            for &(cell, _, _) in &free {
                z[cell] = 0;
            }
        });
    }

    /// Exact marginal posterior of the assignment vector, indexed by
    /// [`lambda_code`]. Probabilities sum to one.
    pub fn lambda_marginal(&self) -> Result<Vec<f64>, ExactError> {
        let n = self.dataset.n_records();
        let size = (self.hp.n_pop as u128).checked_pow(n as u32);
        let size = match size {
            Some(s) if s <= 1 << 24 => s as usize,
            other => {
                return Err(ExactError::MarginalTooLarge {
                    size: other.unwrap_or(u128::MAX),
                })
            }
        };
        let mut marginal = vec![0.0; size];
        self.for_each_feasible(|lambda, _, _, w| {
            marginal[lambda_code(lambda, self.hp.n_pop)] += w;
        });
        let total: f64 = marginal.iter().sum();
        marginal.iter_mut().for_each(|m| *m /= total);
        Ok(marginal)
    }

    /// Conditional of one record's assignment given everything else, derived
    /// by evaluating the joint along the lambda axis.
    pub fn lambda_conditional(&self, state: &LatentState, record: usize) -> Vec<f64> {
        let mut lambda = state.lambda.clone();
        let logw: Vec<f64> = (0..self.hp.n_pop)
            .map(|v| {
                lambda[record] = v as u32;
                self.log_data_factor(&lambda, &state.y, &state.z)
            })
            .collect();
        normalize_logs(&logw)
    }

    /// Conditional of one latent field value given everything else.
    pub fn y_conditional(&self, state: &LatentState, latent: usize, field: usize) -> Vec<f64> {
        let p = self.dataset.n_fields();
        let mut y = state.y.clone();
        let logw: Vec<f64> = (0..self.dataset.vocab[field].len())
            .map(|w| {
                y[latent * p + field] = w as u32;
                self.log_data_factor(&state.lambda, &y, &state.z)
            })
            .collect();
        normalize_logs(&logw)
    }

    /// Conditional probability that one distortion flag is set, given
    /// everything else including the state's current beta.
    pub fn z_conditional(&self, state: &LatentState, record: usize, field: usize) -> f64 {
        let p = self.dataset.n_fields();
        let list = self.dataset.list_of[record] as usize;
        let beta = state.beta_val(list, field);
        let mut z = state.z.clone();
        z[record * p + field] = 0;
        let lw0 = self.log_data_factor(&state.lambda, &state.y, &z);
        z[record * p + field] = 1;
        let lw1 = self.log_data_factor(&state.lambda, &state.y, &z);
        if lw0 == f64::NEG_INFINITY {
            return 1.0;
        }
        let w0 = lw0.exp() * (1.0 - beta);
        let w1 = lw1.exp() * beta;
        w1 / (w0 + w1)
    }
}

/// Mixed-radix code of an assignment vector (record 0 most significant).
pub fn lambda_code(lambda: &[u32], n_pop: usize) -> usize {
    lambda
        .iter()
        .fold(0usize, |acc, &v| acc * n_pop + v as usize)
}

fn normalize_logs(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; logw.len()];
    }
    let mut probs: Vec<f64> = logw.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}
