//! Pair-level error metrics, naive matching baselines, posterior summaries,
//! and convergence diagnostics.

use std::collections::HashMap;

use thiserror::Error;

use crate::gibbs::SampleLog;
use crate::linkage::LinkagePartition;
use crate::model::Dataset;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("partitions cover different record sets ({estimate} vs {truth} records)")]
    MismatchedRecords { estimate: usize, truth: usize },
    #[error("series of length {len} too short (need at least {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("window fractions must be positive and sum to at most 1")]
    BadFractions,
    #[error("multiplicity must be at least 1")]
    BadMultiplicity,
    #[error("multiplicities above 3 require lambda snapshots in the log")]
    NeedSnapshots,
    #[error("need at least {min} sweeps, log has {len}")]
    NotEnoughSweeps { len: usize, min: usize },
}

/// Classification of all unordered record pairs against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "cl")]
    pub correct_links: u64,
    #[serde(rename = "fn")]
    pub false_negatives: u64,
    #[serde(rename = "fp")]
    pub false_positives: u64,
    #[serde(rename = "cnl")]
    pub correct_non_links: u64,
}

impl ConfusionCounts {
    pub fn total_pairs(&self) -> u64 {
        self.correct_links + self.false_negatives + self.false_positives + self.correct_non_links
    }
}

/// Count correct links, false negatives, false positives, and correct
/// non-links over all unordered record pairs.
pub fn confusion_counts(
    estimate: &LinkagePartition,
    truth: &LinkagePartition,
) -> Result<ConfusionCounts, EvalError> {
    if estimate.n_records() != truth.n_records() {
        return Err(EvalError::MismatchedRecords {
            estimate: estimate.n_records(),
            truth: truth.n_records(),
        });
    }
    let n = estimate.n_records() as u64;
    let est_labels = estimate.labels();
    let truth_labels = truth.labels();
    // Pairs linked in both = sum over (truth cluster, estimate cluster)
    // intersections of C(size, 2).
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    for r in 0..n as usize {
        *joint.entry((truth_labels[r], est_labels[r])).or_insert(0) += 1;
    }
    let choose2 = |m: u64| m * m.saturating_sub(1) / 2;
    let correct_links: u64 = joint.values().map(|&m| choose2(m)).sum();
    let truth_pairs = truth.linked_pairs();
    let est_pairs = estimate.linked_pairs();
    let total = choose2(n);
    let false_negatives = truth_pairs - correct_links;
    let false_positives = est_pairs - correct_links;
    Ok(ConfusionCounts {
        correct_links,
        false_negatives,
        false_positives,
        correct_non_links: total - correct_links - false_negatives - false_positives,
    })
}

/// False negative rate FN / (CL + FN); zero when there are no true links.
pub fn fnr(c: &ConfusionCounts) -> f64 {
    let denom = c.correct_links + c.false_negatives;
    if denom == 0 {
        0.0
    } else {
        c.false_negatives as f64 / denom as f64
    }
}

/// False discovery rate FP / (CL + FP); zero, by convention, when there are
/// no estimated links.
pub fn fdr(c: &ConfusionCounts) -> f64 {
    let denom = c.correct_links + c.false_positives;
    if denom == 0 {
        0.0
    } else {
        c.false_positives as f64 / denom as f64
    }
}

/// Link records iff they are identical on every field. Equality is already
/// transitive, so grouping by the full record is the closure.
pub fn exact_match_baseline(dataset: &Dataset) -> LinkagePartition {
    let p = dataset.n_fields();
    let mut groups: HashMap<&[u32], u32> = HashMap::new();
    let mut labels = Vec::with_capacity(dataset.n_records());
    for r in 0..dataset.n_records() {
        let key = &dataset.records[r * p..(r + 1) * p];
        let next = groups.len() as u32;
        labels.push(*groups.entry(key).or_insert(next));
    }
    LinkagePartition::from_labels(&labels)
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// Link records that disagree on at most one field, then take the transitive
/// closure (the relation itself is not transitive). Quadratic in N.
pub fn near_twin_baseline(dataset: &Dataset) -> LinkagePartition {
    let n = dataset.n_records();
    let p = dataset.n_fields();
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            let mut diffs = 0;
            for f in 0..p {
                if dataset.value(a, f) != dataset.value(b, f) {
                    diffs += 1;
                    if diffs > 1 {
                        break;
                    }
                }
            }
            if diffs <= 1 {
                uf.union(a as u32, b as u32);
            }
        }
    }
    let labels: Vec<u32> = (0..n as u32).map(|r| uf.find(r)).collect();
    LinkagePartition::from_labels(&labels)
}

/// Mean, sample standard deviation, and an integer-binned histogram of the
/// per-sweep count of distinct attached latents.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NDistinctSummary {
    pub mean: f64,
    pub sd: f64,
    pub sweeps: usize,
    /// (value, count) pairs, ascending by value.
    pub histogram: Vec<(u32, u64)>,
}

pub fn n_distinct_summary(log: &SampleLog) -> Result<NDistinctSummary, EvalError> {
    let series = &log.n_distinct;
    if series.len() < 2 {
        return Err(EvalError::NotEnoughSweeps {
            len: series.len(),
            min: 2,
        });
    }
    let n = series.len() as f64;
    let mean = series.iter().map(|&v| v as f64).sum::<f64>() / n;
    let ss = series
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .sum::<f64>();
    let sd = (ss / (n - 1.0)).sqrt();
    let mut hist: HashMap<u32, u64> = HashMap::new();
    for &v in series {
        *hist.entry(v).or_insert(0) += 1;
    }
    let mut histogram: Vec<(u32, u64)> = hist.into_iter().collect();
    histogram.sort_unstable();
    Ok(NDistinctSummary {
        mean,
        sd,
        sweeps: series.len(),
        histogram,
    })
}

/// Per-sweep count of latents with exactly `m` attached records. Counts for
/// m in 1..=3 are recorded during the run; larger m is derived from lambda
/// snapshots (one entry per recorded snapshot).
pub fn multiplicity_trace(log: &SampleLog, m: usize) -> Result<Vec<u32>, EvalError> {
    if m == 0 {
        return Err(EvalError::BadMultiplicity);
    }
    if m <= 3 {
        return Ok(log.multiplicity.iter().map(|row| row[m - 1]).collect());
    }
    let snaps = log.lambda.as_ref().ok_or(EvalError::NeedSnapshots)?;
    let mut counts: HashMap<u32, u32> = HashMap::new();
    Ok(snaps
        .iter()
        .map(|snap| {
            counts.clear();
            for &lam in snap {
                *counts.entry(lam).or_insert(0) += 1;
            }
            counts.values().filter(|&&c| c as usize == m).count() as u32
        })
        .collect())
}

/// Geweke convergence score for one scalar trace.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GewekeResult {
    pub z: f64,
    /// Both windows were constant; z is reported as 0.
    pub zero_variance: bool,
}

/// Compare the mean of the first `frac_a` of the series against the mean of
/// the last `frac_b`, with squared standard errors estimated by
/// non-overlapping batch means (20 batches, fewer on short windows).
pub fn geweke_z(series: &[f64], frac_a: f64, frac_b: f64) -> Result<GewekeResult, EvalError> {
    if series.len() < 100 {
        return Err(EvalError::SeriesTooShort {
            len: series.len(),
            min: 100,
        });
    }
    if !(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0) {
        return Err(EvalError::BadFractions);
    }
    let n = series.len();
    let n_a = ((n as f64 * frac_a) as usize).max(1);
    let n_b = ((n as f64 * frac_b) as usize).max(1);
    let window_a = &series[..n_a];
    let window_b = &series[n - n_b..];
    let (mean_a, se2_a) = batch_mean_se2(window_a);
    let (mean_b, se2_b) = batch_mean_se2(window_b);
    let denom = (se2_a + se2_b).sqrt();
    if denom == 0.0 {
        return Ok(GewekeResult {
            z: 0.0,
            zero_variance: true,
        });
    }
    Ok(GewekeResult {
        z: (mean_a - mean_b) / denom,
        zero_variance: false,
    })
}

/// Window mean and squared standard error of that mean, from up to 20
/// non-overlapping batches (trailing remainder dropped).
fn batch_mean_se2(window: &[f64]) -> (f64, f64) {
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let batches = window.len().min(20);
    let size = window.len() / batches;
    let used = batches * size;
    let batch_means: Vec<f64> = (0..batches)
        .map(|b| window[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bm_mean = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - bm_mean).powi(2))
        .sum::<f64>()
        / (batches as f64 - 1.0);
    let _ = used;
    (mean, var / batches as f64)
}
