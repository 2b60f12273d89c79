//! The four-block Gibbs sampler over (beta, z, Y, lambda).
//!
//! A sweep redraws, in order: the per-list per-field distortion probabilities
//! from their Beta full conditionals, the distortion flags, the latent field
//! values, and the record-to-latent assignments. Every coordinate draw uses
//! its own RNG sub-stream keyed by (sweep, block, coordinate), so a run is a
//! pure function of the master seed.
//!
//! [`exact`] holds the brute-force enumeration oracle for tiny instances.

pub mod exact;

use rand::Rng;
use rand_distr::Distribution;

use crate::model::{Dataset, Hyperparams, LatentState};
use crate::rng::{Block, SeedKey};
use crate::strdist::FieldTables;

/// Run-length knobs. `thin` controls how often lambda snapshots are kept
/// (scalar diagnostics are recorded every sweep); the default keeps them all.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    pub sweeps: u64,
    pub seed: u64,
    pub thin: u64,
    pub record_lambda: bool,
}

impl SamplerConfig {
    pub fn new(sweeps: u64, seed: u64) -> SamplerConfig {
        SamplerConfig {
            sweeps,
            seed,
            thin: 1,
            record_lambda: true,
        }
    }
}

/// Flat store of lambda snapshots, one row of `stride` latent indices per
/// recorded sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSnapshots {
    pub stride: usize,
    pub data: Vec<u32>,
}

impl LambdaSnapshots {
    pub fn count(&self) -> usize {
        self.data.len().checked_div(self.stride).unwrap_or(0)
    }

    #[inline]
    pub fn snapshot(&self, i: usize) -> &[u32] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks_exact(self.stride)
    }
}

/// Everything recorded over a run: per-sweep scalar diagnostics, optional
/// lambda snapshots, and the settings needed to reproduce the run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLog {
    pub n_records: u32,
    pub n_pop: u32,
    pub n_lists: u32,
    pub n_fields: u32,
    pub sweeps: u64,
    pub thin: u64,
    pub seed: u64,
    pub hyperparams: Option<Hyperparams>,
    pub lambda: Option<LambdaSnapshots>,
    /// Number of latent entities with at least one attached record, per sweep.
    pub n_distinct: Vec<u32>,
    /// Latents with exactly one, two, three attached records, per sweep.
    pub multiplicity: Vec<[u32; 3]>,
    /// Row-major `n_lists x n_fields` distortion probabilities, per sweep.
    pub beta_trace: Option<Vec<f64>>,
}

impl SampleLog {
    /// Wrap a list of assignment vectors as a log, recomputing diagnostics.
    /// Meant for estimator tests and small experiments.
    pub fn from_lambda_snapshots(n_records: usize, snapshots: &[Vec<u32>]) -> SampleLog {
        let n_pop = snapshots
            .iter()
            .flat_map(|s| s.iter())
            .max()
            .map_or(1, |&m| m as usize + 1);
        let mut data = Vec::with_capacity(snapshots.len() * n_records);
        let mut n_distinct = Vec::with_capacity(snapshots.len());
        let mut multiplicity = Vec::with_capacity(snapshots.len());
        let mut counts = vec![0u32; n_pop];
        for snap in snapshots {
            assert_eq!(snap.len(), n_records, "snapshot length mismatch");
            data.extend_from_slice(snap);
            counts.iter_mut().for_each(|c| *c = 0);
            for &lam in snap {
                counts[lam as usize] += 1;
            }
            let mut stats = [0u32; 3];
            let mut distinct = 0u32;
            for &c in &counts {
                if c > 0 {
                    distinct += 1;
                    if c <= 3 {
                        stats[c as usize - 1] += 1;
                    }
                }
            }
            n_distinct.push(distinct);
            multiplicity.push(stats);
        }
        SampleLog {
            n_records: n_records as u32,
            n_pop: n_pop as u32,
            n_lists: 1,
            n_fields: 0,
            sweeps: snapshots.len() as u64,
            thin: 1,
            seed: 0,
            hyperparams: None,
            lambda: Some(LambdaSnapshots {
                stride: n_records,
                data,
            }),
            n_distinct,
            multiplicity,
            beta_trace: None,
        }
    }
}

/// Draw an index proportional to `exp(logw)` over `(index, logw)` pairs.
/// Log weights are shifted by their maximum before exponentiation.
fn draw_log_weights<R: Rng>(cands: &[u32], logw: &[f64], rng: &mut R) -> u32 {
    debug_assert_eq!(cands.len(), logw.len());
    debug_assert!(!cands.is_empty());
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "all candidate weights vanished");
    let mut total = 0.0;
    for lw in logw {
        total += (lw - max).exp();
    }
    let threshold = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, lw) in logw.iter().enumerate() {
        acc += (lw - max).exp();
        if acc > threshold {
            return cands[i];
        }
    }
    // Rounding can leave the threshold marginally above the final sum.
    cands[cands.len() - 1]
}

/// Inverse-CDF draw; `cdf` must be nondecreasing with final entry 1.0.
fn draw_cdf<R: Rng>(cdf: &[f64], rng: &mut R) -> u32 {
    let u = rng.gen::<f64>();
    cdf.partition_point(|&c| c <= u) as u32
}

enum YDraw {
    /// Some attached record has z = 0; the latent value is forced.
    Pinned(u32),
    /// No attached records constrain the value (empty R, or a categorical
    /// field where every attached record is distorted): draw from the prior.
    Prior,
    /// String field with all attached records distorted: distance-weighted.
    Weighted,
}

/// The Gibbs sampler. Holds read-only views of the data plus the scratch
/// indexes (records per latent, latents per field value) that the Y and
/// lambda blocks rebuild each sweep.
pub struct Sampler<'a> {
    dataset: &'a Dataset,
    tables: &'a FieldTables,
    hp: &'a Hyperparams,
    /// Records attached to each latent.
    attach: Vec<Vec<u32>>,
    /// Per field, per vocabulary value: latents currently carrying it.
    value_latents: Vec<Vec<Vec<u32>>>,
    logw_buf: Vec<f64>,
    cand_buf: Vec<u32>,
    count_buf: Vec<u32>,
    touched_buf: Vec<u32>,
}

impl<'a> Sampler<'a> {
    pub fn new(dataset: &'a Dataset, tables: &'a FieldTables, hp: &'a Hyperparams) -> Sampler<'a> {
        let n = dataset.n_records();
        let p = dataset.n_fields();
        assert!(hp.n_pop >= 1, "n_pop must be positive");
        assert!(
            n + hp.n_pop * p < 1 << 28 && n * p < 1 << 28,
            "instance too large for coordinate-keyed RNG streams"
        );
        Sampler {
            dataset,
            tables,
            hp,
            attach: vec![Vec::new(); hp.n_pop],
            value_latents: (0..p)
                .map(|f| vec![Vec::new(); dataset.vocab[f].len()])
                .collect(),
            logw_buf: Vec::new(),
            cand_buf: Vec::new(),
            count_buf: vec![0; hp.n_pop],
            touched_buf: Vec::new(),
        }
    }

    /// Deterministic initial state: with `n_pop >= N` every record starts as
    /// its own entity, otherwise assignments are uniform. Latent values copy
    /// an attached record (lowest index) or draw from the empirical prior;
    /// flags are set to the disagreement indicator; beta starts at its prior
    /// mean.
    pub fn init_state(&self, seed: u64) -> LatentState {
        let key = SeedKey::new(seed);
        let n = self.dataset.n_records();
        let p = self.dataset.n_fields();
        let n_pop = self.hp.n_pop;

        let lambda: Vec<u32> = if n_pop >= n {
            (0..n as u32).collect()
        } else {
            (0..n)
                .map(|r| {
                    let mut rng = key.stream(0, Block::Init, r as u64);
                    rng.gen_range(0..n_pop as u32)
                })
                .collect()
        };

        let mut owner: Vec<Option<u32>> = vec![None; n_pop];
        for (r, &lam) in lambda.iter().enumerate().rev() {
            owner[lam as usize] = Some(r as u32);
        }
        let mut y = vec![0u32; n_pop * p];
        for j in 0..n_pop {
            match owner[j] {
                Some(r) => {
                    for f in 0..p {
                        y[j * p + f] = self.dataset.value(r as usize, f);
                    }
                }
                None => {
                    for f in 0..p {
                        let mut rng = key.stream(0, Block::Init, (n + j * p + f) as u64);
                        y[j * p + f] = draw_cdf(&self.tables.field(f).alpha_cdf, &mut rng);
                    }
                }
            }
        }

        let mut z = Vec::with_capacity(n * p);
        for (r, &lam) in lambda.iter().enumerate() {
            for f in 0..p {
                z.push(u8::from(self.dataset.value(r, f) != y[lam as usize * p + f]));
            }
        }

        let beta = vec![self.hp.a / (self.hp.a + self.hp.b); self.dataset.n_lists() * p];

        LatentState {
            n_pop,
            n_fields: p,
            n_lists: self.dataset.n_lists(),
            lambda,
            y,
            z,
            beta,
        }
    }

    /// Beta full-conditional parameters for one list and field:
    /// `(Z + a, n_i - Z + b)` with `Z` the distortion-flag count.
    pub fn beta_posterior_params(&self, state: &LatentState, list: usize, field: usize) -> (f64, f64) {
        let z = state.z_count(self.dataset, list, field) as f64;
        let ni = self.dataset.list_sizes[list] as f64;
        (z + self.hp.a, ni - z + self.hp.b)
    }

    /// Redraw every distortion probability from Beta(Z + a, n_i - Z + b).
    pub fn sample_beta_block(&self, state: &mut LatentState, key: &SeedKey, sweep: u64) {
        let p = self.dataset.n_fields();
        let k = self.dataset.n_lists();
        let mut z_sums = vec![0u32; k * p];
        for r in 0..self.dataset.n_records() {
            let list = self.dataset.list_of[r] as usize;
            for f in 0..p {
                z_sums[list * p + f] += state.z_val(r, f) as u32;
            }
        }
        for i in 0..k {
            for f in 0..p {
                let zs = z_sums[i * p + f] as f64;
                let ni = self.dataset.list_sizes[i] as f64;
                let dist = rand_distr::Beta::new(zs + self.hp.a, ni - zs + self.hp.b)
                    .expect("positive Beta shapes");
                let mut rng = key.stream(sweep, Block::Beta, (i * p + f) as u64);
                // Extreme shapes can round to exactly 0 or 1; keep the state
                // inside the open interval so log densities stay finite.
                let draw: f64 = dist.sample(&mut rng);
                state.beta[i * p + f] = draw.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16);
            }
        }
    }

    /// P(z = 1 | everything else) for one record and field, at the state's
    /// current beta. Disagreement forces the flag to one.
    pub fn z_distortion_prob(&self, state: &LatentState, record: usize, field: usize) -> f64 {
        self.z_distortion_prob_with_beta(
            state,
            record,
            field,
            state.beta_val(self.dataset.list_of[record] as usize, field),
        )
    }

    /// Same conditional evaluated at an arbitrary beta value.
    pub fn z_distortion_prob_with_beta(
        &self,
        state: &LatentState,
        record: usize,
        field: usize,
        beta: f64,
    ) -> f64 {
        let x = self.dataset.value(record, field);
        let yv = state.y_val(state.lambda[record] as usize, field);
        if x != yv {
            return 1.0;
        }
        let q = beta * self.tables.field(field).z_agree_weight[x as usize];
        q / (q + (1.0 - beta))
    }

    /// Redraw every distortion flag; disagreement forces z = 1.
    pub fn sample_z_block(&self, state: &mut LatentState, key: &SeedKey, sweep: u64) {
        let p = self.dataset.n_fields();
        for r in 0..self.dataset.n_records() {
            let lam = state.lambda[r] as usize;
            let list = self.dataset.list_of[r] as usize;
            for f in 0..p {
                if self.dataset.value(r, f) != state.y_val(lam, f) {
                    state.z[r * p + f] = 1;
                    continue;
                }
                let p1 =
                    self.z_distortion_prob_with_beta(state, r, f, state.beta_val(list, f));
                let mut rng = key.stream(sweep, Block::Distortion, (r * p + f) as u64);
                state.z[r * p + f] = u8::from(rng.gen::<f64>() < p1);
            }
        }
    }

    fn rebuild_attach(&mut self, state: &LatentState) {
        for bucket in &mut self.attach {
            bucket.clear();
        }
        for (r, &lam) in state.lambda.iter().enumerate() {
            self.attach[lam as usize].push(r as u32);
        }
    }

    fn rebuild_value_latents(&mut self, state: &LatentState) {
        let p = self.dataset.n_fields();
        for field in &mut self.value_latents {
            for bucket in field.iter_mut() {
                bucket.clear();
            }
        }
        for j in 0..state.n_pop {
            for f in 0..p {
                self.value_latents[f][state.y_val(j, f) as usize].push(j as u32);
            }
        }
    }

    fn y_draw_kind(&self, state: &LatentState, latent: usize, field: usize) -> YDraw {
        let attached = &self.attach[latent];
        if attached.is_empty() {
            return YDraw::Prior;
        }
        for &r in attached {
            if state.z_val(r as usize, field) == 0 {
                return YDraw::Pinned(self.dataset.value(r as usize, field));
            }
        }
        if field < self.dataset.schema.p_s() {
            YDraw::Weighted
        } else {
            YDraw::Prior
        }
    }

    /// Log weights of the latent-value conditional over the field vocabulary,
    /// for the weighted (all attached records distorted) string case.
    fn y_log_weights(&self, state: &LatentState, latent: usize, field: usize, out: &mut Vec<f64>) {
        let ft = self.tables.field(field);
        let st = ft.string.as_ref().expect("weighted draw on string field");
        out.clear();
        out.extend_from_slice(&ft.log_alpha);
        for &r in &self.attach[latent] {
            debug_assert_eq!(state.z_val(r as usize, field), 1);
            let x = self.dataset.value(r as usize, field) as usize;
            for (w, lw) in out.iter_mut().enumerate() {
                *lw += st.log_h[w] - self.hp.c * st.dist(x, w);
            }
        }
    }

    /// Full conditional of one latent field value, as a probability vector
    /// over the field's vocabulary. Rebuilds the attachment index.
    pub fn y_conditional(&mut self, state: &LatentState, latent: usize, field: usize) -> Vec<f64> {
        self.rebuild_attach(state);
        let vocab = self.dataset.vocab[field].len();
        match self.y_draw_kind(state, latent, field) {
            YDraw::Pinned(v) => {
                let mut probs = vec![0.0; vocab];
                probs[v as usize] = 1.0;
                probs
            }
            YDraw::Prior => self.tables.field(field).alpha.probs.clone(),
            YDraw::Weighted => {
                let mut logw = Vec::new();
                self.y_log_weights(state, latent, field, &mut logw);
                let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut probs: Vec<f64> = logw.iter().map(|lw| (lw - max).exp()).collect();
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                probs
            }
        }
    }

    /// Redraw every latent field value from its full conditional.
    pub fn sample_y_block(&mut self, state: &mut LatentState, key: &SeedKey, sweep: u64) {
        self.rebuild_attach(state);
        let p = self.dataset.n_fields();
        let mut logw = std::mem::take(&mut self.logw_buf);
        for j in 0..state.n_pop {
            for f in 0..p {
                match self.y_draw_kind(state, j, f) {
                    YDraw::Pinned(v) => state.y[j * p + f] = v,
                    YDraw::Prior => {
                        let mut rng = key.stream(sweep, Block::Latent, (j * p + f) as u64);
                        state.y[j * p + f] = draw_cdf(&self.tables.field(f).alpha_cdf, &mut rng);
                    }
                    YDraw::Weighted => {
                        self.y_log_weights(state, j, f, &mut logw);
                        let mut rng = key.stream(sweep, Block::Latent, (j * p + f) as u64);
                        let cands: Vec<u32> = (0..logw.len() as u32).collect();
                        state.y[j * p + f] = draw_log_weights(&cands, &logw, &mut rng);
                    }
                }
            }
        }
        self.logw_buf = logw;
    }

    /// Candidate latents with positive assignment weight for one record, and
    /// their log weights. Candidates are found through the per-field value
    /// index: any undistorted field restricts the support to latents sharing
    /// the record's value there.
    fn lambda_weights(
        &self,
        state: &LatentState,
        record: usize,
        cands: &mut Vec<u32>,
        logw: &mut Vec<f64>,
    ) {
        cands.clear();
        logw.clear();
        let p = self.dataset.n_fields();
        let ps = self.dataset.schema.p_s();

        // Choose the most restrictive undistorted field as the candidate pool.
        let mut pool: Option<&[u32]> = None;
        for f in 0..p {
            if state.z_val(record, f) == 0 {
                let bucket = &self.value_latents[f][self.dataset.value(record, f) as usize];
                if pool.is_none_or(|cur| bucket.len() < cur.len()) {
                    pool = Some(bucket);
                }
            }
        }

        let weight = |v: usize| -> f64 {
            let mut lw = 0.0;
            for f in 0..ps {
                if state.z_val(record, f) == 1 {
                    let st = self.tables.field(f).string.as_ref().unwrap();
                    let x = self.dataset.value(record, f) as usize;
                    let yv = state.y_val(v, f) as usize;
                    lw += st.log_h[yv] - self.hp.c * st.dist(x, yv);
                }
            }
            lw
        };
        let supported = |v: usize| -> bool {
            (0..p).all(|f| {
                state.z_val(record, f) == 1
                    || state.y_val(v, f) == self.dataset.value(record, f)
            })
        };

        match pool {
            None => {
                // Every field distorted: all latents are candidates.
                for v in 0..state.n_pop {
                    cands.push(v as u32);
                    logw.push(weight(v));
                }
            }
            Some(bucket) => {
                for &v in bucket {
                    if supported(v as usize) {
                        cands.push(v);
                        logw.push(weight(v as usize));
                    }
                }
            }
        }
        debug_assert!(
            !cands.is_empty(),
            "record {record} has no supported latent; state violates the support constraint"
        );
    }

    /// Full conditional of one record's assignment over all latents.
    /// Rebuilds the value index.
    pub fn lambda_conditional(&mut self, state: &LatentState, record: usize) -> Vec<f64> {
        self.rebuild_value_latents(state);
        let mut cands = Vec::new();
        let mut logw = Vec::new();
        self.lambda_weights(state, record, &mut cands, &mut logw);
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = vec![0.0; state.n_pop];
        let mut total = 0.0;
        for (v, lw) in cands.iter().zip(&logw) {
            let w = (lw - max).exp();
            probs[*v as usize] = w;
            total += w;
        }
        probs.iter_mut().for_each(|p| *p /= total);
        probs
    }

    /// Redraw every record assignment from its full conditional.
    pub fn sample_lambda_block(&mut self, state: &mut LatentState, key: &SeedKey, sweep: u64) {
        self.rebuild_value_latents(state);
        let mut cands = std::mem::take(&mut self.cand_buf);
        let mut logw = std::mem::take(&mut self.logw_buf);
        for r in 0..self.dataset.n_records() {
            self.lambda_weights(state, r, &mut cands, &mut logw);
            state.lambda[r] = if cands.len() == 1 {
                cands[0]
            } else {
                let mut rng = key.stream(sweep, Block::Assignment, r as u64);
                draw_log_weights(&cands, &logw, &mut rng)
            };
        }
        self.cand_buf = cands;
        self.logw_buf = logw;
    }

    /// One full sweep: beta, z, Y, lambda.
    pub fn sweep(&mut self, state: &mut LatentState, key: &SeedKey, sweep: u64) {
        self.sample_beta_block(state, key, sweep);
        self.sample_z_block(state, key, sweep);
        self.sample_y_block(state, key, sweep);
        self.sample_lambda_block(state, key, sweep);
    }

    /// Run the configured number of sweeps from the deterministic initial
    /// state, recording diagnostics every sweep and lambda snapshots every
    /// `thin` sweeps. No burn-in is removed.
    pub fn run(&mut self, config: &SamplerConfig) -> SampleLog {
        assert!(config.sweeps >= 1, "sweeps must be at least 1");
        assert!(config.thin >= 1, "thin must be at least 1");
        let key = SeedKey::new(config.seed);
        let n = self.dataset.n_records();
        let p = self.dataset.n_fields();
        let k = self.dataset.n_lists();
        let mut state = self.init_state(config.seed);
        debug_assert!(crate::model::validate_state(&state, self.dataset, self.hp).is_ok());

        let snapshots = if config.record_lambda {
            (config.sweeps / config.thin) as usize
        } else {
            0
        };
        let mut lambda_data: Vec<u32> = Vec::with_capacity(snapshots * n);
        let mut n_distinct = Vec::with_capacity(config.sweeps as usize);
        let mut multiplicity = Vec::with_capacity(config.sweeps as usize);
        let mut beta_trace = Vec::with_capacity(config.sweeps as usize * k * p);

        for sweep in 1..=config.sweeps {
            self.sweep(&mut state, &key, sweep);

            let counts = &mut self.count_buf;
            let touched = &mut self.touched_buf;
            for &lam in &state.lambda {
                if counts[lam as usize] == 0 {
                    touched.push(lam);
                }
                counts[lam as usize] += 1;
            }
            let mut stats = [0u32; 3];
            for &t in touched.iter() {
                let c = counts[t as usize];
                if c <= 3 {
                    stats[c as usize - 1] += 1;
                }
            }
            n_distinct.push(touched.len() as u32);
            multiplicity.push(stats);
            for &t in touched.iter() {
                counts[t as usize] = 0;
            }
            touched.clear();

            beta_trace.extend_from_slice(&state.beta);
            if config.record_lambda && sweep % config.thin == 0 {
                lambda_data.extend_from_slice(&state.lambda);
            }
        }
        debug_assert!(crate::model::validate_state(&state, self.dataset, self.hp).is_ok());

        SampleLog {
            n_records: n as u32,
            n_pop: self.hp.n_pop as u32,
            n_lists: k as u32,
            n_fields: p as u32,
            sweeps: config.sweeps,
            thin: config.thin,
            seed: config.seed,
            hyperparams: Some(*self.hp),
            lambda: if config.record_lambda {
                Some(LambdaSnapshots {
                    stride: n,
                    data: lambda_data,
                })
            } else {
                None
            },
            n_distinct,
            multiplicity,
            beta_trace: Some(beta_trace),
        }
    }
}

/// Convenience wrapper: build the sampler and run it.
pub fn run_sampler(
    dataset: &Dataset,
    tables: &FieldTables,
    hp: &Hyperparams,
    config: &SamplerConfig,
) -> SampleLog {
    Sampler::new(dataset, tables, hp).run(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::toy_dataset;
    use crate::model::{validate_state, FieldKind};

    fn setup(
        columns: &[&[&str]],
        kinds: &[FieldKind],
        c: f64,
        n: usize,
    ) -> (Dataset, Hyperparams, FieldTables) {
        let (dataset, hp) = toy_dataset(columns, kinds, c, 1.0, n);
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        (dataset, hp, tables)
    }

    #[test]
    fn init_all_singletons_when_npop_covers() {
        let (dataset, hp, tables) = setup(
            &[&["ann", "bob", "cara"]],
            &[FieldKind::String],
            1.0,
            3,
        );
        let sampler = Sampler::new(&dataset, &tables, &hp);
        let state = sampler.init_state(5);
        assert_eq!(state.lambda, vec![0, 1, 2]);
        assert!(state.z.iter().all(|&z| z == 0));
        assert!(validate_state(&state, &dataset, &hp).is_ok());
        let distinct: std::collections::HashSet<u32> = state.lambda.iter().copied().collect();
        assert_eq!(distinct.len(), 3);
        // Prior-mean initialization of beta.
        assert!((state.beta[0] - 1.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn init_pigeonholes_when_npop_small() {
        let (dataset, mut hp) = toy_dataset(
            &[&["a", "b", "c", "d", "e"]],
            &[FieldKind::Categorical],
            1.0,
            1.0,
            5,
        );
        hp.n_pop = 2;
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let sampler = Sampler::new(&dataset, &tables, &hp);
        let state = sampler.init_state(5);
        assert!(state.lambda.iter().all(|&l| l < 2));
        assert!(validate_state(&state, &dataset, &hp).is_ok());
        // Five records in two slots: some latent carries at least two.
        let mut counts = [0; 2];
        for &l in &state.lambda {
            counts[l as usize] += 1;
        }
        assert!(counts.iter().any(|&c| c >= 2));
    }

    #[test]
    fn init_deterministic_per_seed() {
        let (dataset, mut hp) = toy_dataset(
            &[&["a", "b", "c", "d"]],
            &[FieldKind::Categorical],
            1.0,
            1.0,
            4,
        );
        hp.n_pop = 2;
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let sampler = Sampler::new(&dataset, &tables, &hp);
        assert_eq!(sampler.init_state(7), sampler.init_state(7));
        assert_ne!(sampler.init_state(7), sampler.init_state(8));
    }

    #[test]
    fn beta_posterior_params_arithmetic() {
        // 100 records, one categorical field, 5 distortion flags set:
        // Beta(5 + 1, 95 + 99).
        let values: Vec<String> = (0..100).map(|_| "v".to_string()).collect();
        let refs: Vec<&str> = values.iter().map(|s| s.as_str()).collect();
        let (dataset, mut hp) = toy_dataset(&[&refs], &[FieldKind::Categorical], 1.0, 1.0, 100);
        hp.b = 99.0;
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(1);
        for r in 0..5 {
            state.z[r] = 1;
        }
        assert_eq!(sampler.beta_posterior_params(&state, 0, 0), (6.0, 194.0));
        state.z.iter_mut().for_each(|z| *z = 0);
        assert_eq!(sampler.beta_posterior_params(&state, 0, 0), (1.0, 199.0));
    }

    #[test]
    fn beta_draws_match_posterior_mean() {
        let values: Vec<String> = (0..100).map(|_| "v".to_string()).collect();
        let refs: Vec<&str> = values.iter().map(|s| s.as_str()).collect();
        let (dataset, mut hp) = toy_dataset(&[&refs], &[FieldKind::Categorical], 1.0, 1.0, 100);
        hp.b = 99.0;
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(1);
        for r in 0..5 {
            state.z[r] = 1;
        }
        let key = SeedKey::new(42);
        let draws = 100_000u64;
        let mut total = 0.0;
        for sweep in 1..=draws {
            sampler.sample_beta_block(&mut state, &key, sweep);
            total += state.beta[0];
        }
        let mean = total / draws as f64;
        // Beta(6, 194): mean 0.03, sd 0.012032; three standard errors.
        let se = 0.012032 / (draws as f64).sqrt();
        assert!(
            (mean - 0.03).abs() < 3.0 * se,
            "mean {mean} vs 0.03 +- {}",
            3.0 * se
        );
    }

    #[test]
    fn z_prob_one_when_disagreeing() {
        let (dataset, hp, tables) = setup(&[&["ann", "bob"]], &[FieldKind::String], 1.0, 2);
        let sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(3);
        // Attach record 1 ("bob") to latent 0 ("ann"): disagreement.
        state.lambda[1] = 0;
        state.z[1] = 1;
        assert!(validate_state(&state, &dataset, &hp).is_ok());
        assert_eq!(sampler.z_distortion_prob(&state, 1, 0), 1.0);
    }

    #[test]
    fn z_prob_categorical_agree_formula() {
        // alpha(x) = 1/2, beta = 0.1: P(z=1) = 0.05 / 0.95.
        let (dataset, hp, tables) = setup(&[&["x", "y"]], &[FieldKind::Categorical], 1.0, 2);
        let sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(3);
        state.beta[0] = 0.1;
        let p = sampler.z_distortion_prob(&state, 0, 0);
        assert!((p - 0.05 / 0.95).abs() < 1e-15);
        // Vanishing distortion probability drives the flag probability to 0.
        state.beta[0] = 1e-12;
        assert!(sampler.z_distortion_prob(&state, 0, 0) < 1e-11);
    }

    #[test]
    fn y_conditional_prior_when_unattached() {
        let (dataset, hp, tables) = setup(
            &[&["ann", "bob", "ann"]],
            &[FieldKind::String],
            1.0,
            3,
        );
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(9);
        state.lambda = vec![0, 0, 0];
        for r in 0..3 {
            for f in 0..1 {
                state.z[r + f] = u8::from(dataset.value(r, 0) != state.y_val(0, 0));
            }
        }
        let probs = sampler.y_conditional(&state, 2, 0);
        for (p, a) in probs.iter().zip(&tables.field(0).alpha.probs) {
            assert!((p - a).abs() < 1e-15);
        }
    }

    #[test]
    fn y_conditional_pinned_by_undistorted_record() {
        let (dataset, hp, tables) = setup(&[&["ann", "bob"]], &[FieldKind::String], 1.0, 2);
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let state = sampler.init_state(2); // all singletons, z = 0
        let probs = sampler.y_conditional(&state, 1, 0);
        assert_eq!(probs[dataset.value(1, 0) as usize], 1.0);
        assert_eq!(probs.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn y_conditional_categorical_all_distorted_is_prior() {
        let (dataset, hp, tables) = setup(
            &[&["x", "y", "x"]],
            &[FieldKind::Categorical],
            1.0,
            3,
        );
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(4);
        // Two records attached to latent 0, both distorted.
        state.lambda = vec![0, 0, 2];
        state.z[0] = 1;
        state.z[1] = 1;
        state.z[2] = 0;
        assert!(validate_state(&state, &dataset, &hp).is_ok());
        let probs = sampler.y_conditional(&state, 0, 0);
        for (p, a) in probs.iter().zip(&tables.field(0).alpha.probs) {
            assert!((p - a).abs() < 1e-15);
        }
    }

    #[test]
    fn lambda_conditional_uniform_when_all_categorical_distorted() {
        let (dataset, hp, tables) = setup(&[&["x", "y"]], &[FieldKind::Categorical], 1.0, 2);
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(5);
        state.z = vec![1, 1];
        let probs = sampler.lambda_conditional(&state, 0);
        for p in probs {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn lambda_conditional_support_restricted_by_undistorted_field() {
        let (dataset, hp, tables) = setup(
            &[&["ann", "bob", "ann"]],
            &[FieldKind::String],
            1.0,
            3,
        );
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let state = sampler.init_state(6); // y = [ann, bob, ann], z = 0
        let probs = sampler.lambda_conditional(&state, 0);
        // Record 0 ("ann", undistorted) can only sit on latents whose value
        // is "ann": latents 0 and 2.
        assert!(probs[0] > 0.0 && probs[2] > 0.0);
        assert_eq!(probs[1], 0.0);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_conditional_distance_odds_ratio() {
        // Vocabulary {ab, ba, aa}: by symmetry h(ab) = h(ba), so two latent
        // candidates at those values give odds exp(-c (d(x,ab) - d(x,ba))).
        let c = 0.7;
        let (dataset, hp, tables) = setup(
            &[&["ab", "ba", "aa"]],
            &[FieldKind::String],
            c,
            3,
        );
        let st = tables.string_tables(0, &dataset).unwrap();
        assert!((st.h[0] - st.h[1]).abs() < 1e-12, "h symmetry broken");
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let mut state = sampler.init_state(8);
        state.z[0] = 1; // record 0 ("ab") distorted: every latent supported
        let probs = sampler.lambda_conditional(&state, 0);
        // d(ab, ab) = 0 vs d(ab, ba) = 2.
        let ratio = probs[0] / probs[1];
        assert!((ratio - (2.0 * c).exp()).abs() < 1e-9, "ratio {ratio}");
    }

    #[test]
    fn run_is_deterministic_and_consistent() {
        let (dataset, mut hp) = toy_dataset(
            &[
                &["ann", "bob", "anna", "bob", "cara"],
                &["1", "2", "1", "2", "3"],
            ],
            &[FieldKind::String, FieldKind::Categorical],
            1.0,
            1.0,
            5,
        );
        hp.b = 9.0; // lively distortion so the chain actually moves
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let config = SamplerConfig::new(200, 77);
        let log1 = run_sampler(&dataset, &tables, &hp, &config);
        let log2 = run_sampler(&dataset, &tables, &hp, &config);
        assert_eq!(log1, log2);
        let other = SamplerConfig::new(200, 78);
        assert_ne!(run_sampler(&dataset, &tables, &hp, &other), log1);

        // Per-sweep diagnostics invariants.
        assert_eq!(log1.n_distinct.len(), 200);
        let snaps = log1.lambda.as_ref().unwrap();
        assert_eq!(snaps.count(), 200);
        for (sweep, snap) in snaps.iter().enumerate() {
            let mut counts = std::collections::HashMap::new();
            for &lam in snap {
                *counts.entry(lam).or_insert(0u32) += 1;
            }
            assert_eq!(log1.n_distinct[sweep], counts.len() as u32);
            assert!(counts.len() as u32 <= 5);
            let weighted: u32 = log1.multiplicity[sweep]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as u32 + 1) * c)
                .sum::<u32>()
                + counts.values().filter(|&&c| c > 3).copied().sum::<u32>();
            assert_eq!(weighted, 5, "sum of m * count_m misses N at {sweep}");
        }
    }

    #[test]
    fn thinning_and_no_lambda() {
        let (dataset, hp, tables) = setup(
            &[&["ann", "bob", "ann"]],
            &[FieldKind::String],
            1.0,
            3,
        );
        let mut config = SamplerConfig::new(10, 1);
        config.thin = 3;
        let log = run_sampler(&dataset, &tables, &hp, &config);
        assert_eq!(log.lambda.as_ref().unwrap().count(), 3); // sweeps 3, 6, 9
        assert_eq!(log.n_distinct.len(), 10);
        config.record_lambda = false;
        let log = run_sampler(&dataset, &tables, &hp, &config);
        assert!(log.lambda.is_none());
    }

    #[test]
    fn states_stay_valid_across_sweeps() {
        let (dataset, mut hp) = toy_dataset(
            &[&["ann", "bob", "anna", "cara"], &["1", "1", "2", "2"]],
            &[FieldKind::String, FieldKind::Categorical],
            1.0,
            1.0,
            4,
        );
        hp.b = 4.0;
        hp.n_pop = 3;
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let mut sampler = Sampler::new(&dataset, &tables, &hp);
        let key = SeedKey::new(3);
        let mut state = sampler.init_state(3);
        for sweep in 1..=300 {
            sampler.sweep(&mut state, &key, sweep);
            assert!(validate_state(&state, &dataset, &hp).is_ok(), "sweep {sweep}");
            let lp =
                crate::model::log_joint_posterior(&state, &dataset, &tables, &hp).unwrap();
            assert!(lp.is_finite(), "reachable state has non-finite density");
        }
    }

    #[test]
    fn from_lambda_snapshots_diagnostics() {
        let log = SampleLog::from_lambda_snapshots(4, &[vec![0, 0, 1, 2], vec![3, 3, 3, 3]]);
        assert_eq!(log.n_distinct, vec![3, 1]);
        assert_eq!(log.multiplicity[0], [2, 1, 0]);
        assert_eq!(log.multiplicity[1], [0, 0, 0]);
    }
}
