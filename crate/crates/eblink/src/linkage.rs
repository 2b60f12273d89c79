//! Posterior summaries of the linkage structure and the transitive point
//! estimate.
//!
//! A record's maximal matching set (MMS) in one posterior sample is the set
//! of records sharing its latent entity, itself included. The most probable
//! MMS (MPMMS) is the set most frequently observed as that record's MMS
//! across samples, and a set is a shared MPMMS when it is the MPMMS of every
//! record it contains. Linking exactly the shared MPMMSes is transitive by
//! construction, unlike naive thresholding of pairwise match probabilities.

use std::collections::HashMap;

use thiserror::Error;

use crate::gibbs::SampleLog;

#[derive(Debug, Error)]
pub enum LinkageError {
    #[error("sample log carries no lambda snapshots")]
    NoSnapshots,
    #[error("record {record} out of range (log covers {n_records} records)")]
    RecordOutOfRange { record: usize, n_records: usize },
    #[error("not a partition: {detail}")]
    NotAPartition { detail: String },
}

/// A partition of all records into disjoint clusters; transitivity holds by
/// construction. Canonical form: members ascending, clusters ordered by
/// smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkagePartition {
    n_records: usize,
    clusters: Vec<Vec<u32>>,
}

impl LinkagePartition {
    pub fn new(n_records: usize, mut clusters: Vec<Vec<u32>>) -> Result<Self, LinkageError> {
        let mut seen = vec![false; n_records];
        for cluster in &mut clusters {
            cluster.sort_unstable();
            for &r in cluster.iter() {
                if r as usize >= n_records {
                    return Err(LinkageError::NotAPartition {
                        detail: format!("record {r} outside 0..{n_records}"),
                    });
                }
                if seen[r as usize] {
                    return Err(LinkageError::NotAPartition {
                        detail: format!("record {r} appears in two clusters"),
                    });
                }
                seen[r as usize] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(LinkageError::NotAPartition {
                detail: format!("record {missing} not covered"),
            });
        }
        clusters.sort_by_key(|c| c[0]);
        Ok(LinkagePartition {
            n_records,
            clusters,
        })
    }

    /// Group records by an arbitrary label vector.
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
        for (r, &label) in labels.iter().enumerate() {
            groups.entry(label).or_default().push(r as u32);
        }
        let mut clusters: Vec<Vec<u32>> = groups.into_values().collect();
        clusters.sort_by_key(|c| c[0]);
        LinkagePartition {
            n_records: labels.len(),
            clusters,
        }
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn clusters(&self) -> &[Vec<u32>] {
        &self.clusters
    }

    /// Cluster index of every record.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels = vec![0u32; self.n_records];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &r in cluster {
                labels[r as usize] = c as u32;
            }
        }
        labels
    }

    /// Number of linked (intra-cluster) unordered pairs.
    pub fn linked_pairs(&self) -> u64 {
        self.clusters
            .iter()
            .map(|c| (c.len() as u64) * (c.len() as u64 - 1) / 2)
            .sum()
    }
}

fn snapshots(log: &SampleLog) -> Result<&crate::gibbs::LambdaSnapshots, LinkageError> {
    let snaps = log.lambda.as_ref().ok_or(LinkageError::NoSnapshots)?;
    if snaps.count() == 0 {
        return Err(LinkageError::NoSnapshots);
    }
    Ok(snaps)
}

/// Posterior co-assignment probability of every record pair that is linked
/// in at least one snapshot. Keys are `(low, high)` record indices.
pub fn pairwise_match_probs(log: &SampleLog) -> Result<HashMap<(u32, u32), f64>, LinkageError> {
    let snaps = snapshots(log)?;
    let total = snaps.count() as f64;
    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut buckets: HashMap<u32, Vec<u32>> = HashMap::new();
    for snap in snaps.iter() {
        buckets.clear();
        for (r, &lam) in snap.iter().enumerate() {
            buckets.entry(lam).or_default().push(r as u32);
        }
        for members in buckets.values() {
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    *counts.entry((members[i], members[j])).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(pair, c)| (pair, c as f64 / total))
        .collect())
}

/// Per-record tallies of which MMS the record had in each snapshot, with the
/// sets interned once across all records.
struct MmsTally {
    sets: Vec<Vec<u32>>,
    per_record: Vec<HashMap<u32, u32>>,
    n_snapshots: u64,
}

impl MmsTally {
    fn build(log: &SampleLog) -> Result<MmsTally, LinkageError> {
        let snaps = snapshots(log)?;
        let n = log.n_records as usize;
        let mut sets: Vec<Vec<u32>> = Vec::new();
        let mut set_index: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut per_record: Vec<HashMap<u32, u32>> = vec![HashMap::new(); n];
        let mut buckets: HashMap<u32, Vec<u32>> = HashMap::new();
        for snap in snaps.iter() {
            buckets.clear();
            for (r, &lam) in snap.iter().enumerate() {
                buckets.entry(lam).or_default().push(r as u32);
            }
            for members in buckets.values() {
                // Members are ascending because records were visited in order.
                let id = match set_index.get(members.as_slice()) {
                    Some(&id) => id,
                    None => {
                        let id = sets.len() as u32;
                        sets.push(members.clone());
                        set_index.insert(members.clone(), id);
                        id
                    }
                };
                for &r in members {
                    *per_record[r as usize].entry(id).or_insert(0) += 1;
                }
            }
        }
        Ok(MmsTally {
            sets,
            per_record,
            n_snapshots: snaps.count() as u64,
        })
    }

    /// Most probable MMS of a record; ties break toward the smaller set,
    /// then the lexicographically smallest member list.
    fn mpmms_id(&self, record: usize) -> u32 {
        let mut best: Option<(u64, &Vec<u32>, u32)> = None;
        let mut ids: Vec<u32> = self.per_record[record].keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let count = self.per_record[record][&id] as u64;
            let set = &self.sets[id as usize];
            let better = match &best {
                None => true,
                Some((bc, bs, _)) => {
                    count > *bc
                        || (count == *bc
                            && (set.len() < bs.len() || (set.len() == bs.len() && set < *bs)))
                }
            };
            if better {
                best = Some((count, set, id));
            }
        }
        best.expect("record appears in every snapshot").2
    }
}

/// Empirical distribution of a record's maximal matching set across
/// snapshots, as (set, probability) pairs sorted by descending probability
/// (ties by the MPMMS ordering: smaller set first, then lexicographic).
pub fn record_mms_distribution(
    log: &SampleLog,
    record: usize,
) -> Result<Vec<(Vec<u32>, f64)>, LinkageError> {
    if record >= log.n_records as usize {
        return Err(LinkageError::RecordOutOfRange {
            record,
            n_records: log.n_records as usize,
        });
    }
    let tally = MmsTally::build(log)?;
    let mut entries: Vec<(Vec<u32>, f64)> = tally.per_record[record]
        .iter()
        .map(|(&id, &count)| {
            (
                tally.sets[id as usize].clone(),
                count as f64 / tally.n_snapshots as f64,
            )
        })
        .collect();
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.len().cmp(&b.0.len()))
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(entries)
}

/// The most probable maximal matching set of one record.
pub fn mpmms(log: &SampleLog, record: usize) -> Result<Vec<u32>, LinkageError> {
    if record >= log.n_records as usize {
        return Err(LinkageError::RecordOutOfRange {
            record,
            n_records: log.n_records as usize,
        });
    }
    let tally = MmsTally::build(log)?;
    Ok(tally.sets[tally.mpmms_id(record) as usize].clone())
}

/// The shared-MPMMS point estimate: a set becomes a cluster exactly when it
/// is the MPMMS of every record it contains; everything else is a singleton.
pub fn shared_mpmms_linkage(log: &SampleLog) -> Result<LinkagePartition, LinkageError> {
    let tally = MmsTally::build(log)?;
    let n = log.n_records as usize;
    let choice: Vec<u32> = (0..n).map(|r| tally.mpmms_id(r)).collect();
    let mut clusters: Vec<Vec<u32>> = Vec::new();
    let mut claimed = vec![false; n];
    for (r, &id) in choice.iter().enumerate() {
        let set = &tally.sets[id as usize];
        if set[0] as usize != r {
            continue; // visit each candidate set once, from its least member
        }
        if set.iter().all(|&q| choice[q as usize] == id) {
            for &q in set {
                assert!(
                    !claimed[q as usize],
                    "record {q} belongs to two shared MPMMSes"
                );
                claimed[q as usize] = true;
            }
            clusters.push(set.clone());
        }
    }
    for (r, &taken) in claimed.iter().enumerate() {
        if !taken {
            clusters.push(vec![r as u32]);
        }
    }
    LinkagePartition::new(n, clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Snapshots {A,B}{C}, {A,B}{C}, {A}{B,C} from the three-record example.
    fn abc_log() -> SampleLog {
        SampleLog::from_lambda_snapshots(
            3,
            &[vec![0, 0, 1], vec![0, 0, 1], vec![0, 1, 1]],
        )
    }

    #[test]
    fn pairwise_probs_counted() {
        let probs = pairwise_match_probs(&abc_log()).unwrap();
        assert!((probs[&(0, 1)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((probs[&(1, 2)] - 1.0 / 3.0).abs() < 1e-12);
        assert!(!probs.contains_key(&(0, 2)), "zero-probability pair emitted");
        // No self pairs.
        assert!(probs.keys().all(|&(a, b)| a < b));
    }

    #[test]
    fn pairwise_probs_single_snapshot_degenerate() {
        let log = SampleLog::from_lambda_snapshots(3, &[vec![0, 0, 1]]);
        let probs = pairwise_match_probs(&log).unwrap();
        assert_eq!(probs.len(), 1);
        assert_eq!(probs[&(0, 1)], 1.0);
    }

    #[test]
    fn empty_log_errors() {
        let mut log = SampleLog::from_lambda_snapshots(2, &[vec![0, 1]]);
        log.lambda = None;
        assert!(matches!(
            pairwise_match_probs(&log),
            Err(LinkageError::NoSnapshots)
        ));
        assert!(matches!(mpmms(&log, 0), Err(LinkageError::NoSnapshots)));
    }

    #[test]
    fn mms_distribution_counts() {
        let dist = record_mms_distribution(&abc_log(), 0).unwrap();
        assert_eq!(dist.len(), 2);
        assert_eq!(dist[0].0, vec![0, 1]);
        assert!((dist[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(dist[1].0, vec![0]);
        assert!((dist[1].1 - 1.0 / 3.0).abs() < 1e-12);
        let total: f64 = dist.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mms_distribution_isolated_record() {
        let log = SampleLog::from_lambda_snapshots(2, &[vec![0, 1], vec![0, 2]]);
        let dist = record_mms_distribution(&log, 0).unwrap();
        assert_eq!(dist, vec![(vec![0], 1.0)]);
    }

    #[test]
    fn mpmms_examples() {
        let log = abc_log();
        assert_eq!(mpmms(&log, 0).unwrap(), vec![0, 1]);
        // C: {C} at 2/3 beats {B,C} at 1/3.
        assert_eq!(mpmms(&log, 2).unwrap(), vec![2]);
    }

    #[test]
    fn mpmms_tie_breaks_to_smaller_set() {
        // 50/50 tie between {A} and {A,B}: the smaller set wins.
        let log = SampleLog::from_lambda_snapshots(2, &[vec![0, 0], vec![0, 1]]);
        assert_eq!(mpmms(&log, 0).unwrap(), vec![0]);
    }

    #[test]
    fn shared_mpmms_abc_example() {
        let estimate = shared_mpmms_linkage(&abc_log()).unwrap();
        assert_eq!(estimate.clusters(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn shared_mpmms_identical_snapshots() {
        let log =
            SampleLog::from_lambda_snapshots(4, &[vec![0, 0, 1, 2], vec![0, 0, 1, 2]]);
        let estimate = shared_mpmms_linkage(&log).unwrap();
        assert_eq!(estimate.clusters(), &[vec![0, 1], vec![2], vec![3]]);
    }

    /// Hand-built log where MPMMS(A) = {A,B}, MPMMS(B) = {B,C},
    /// MPMMS(C) = {C,D}, and D is most often alone: no shared MPMMS exists
    /// among them, so the estimate leaves every record unlinked.
    #[test]
    fn shared_mpmms_conflicting_chains_fall_back_to_singletons() {
        let n = 11;
        let clusters_per_snapshot: Vec<Vec<Vec<u32>>> = vec![
            vec![vec![0, 1], vec![2, 4]],
            vec![vec![0, 1], vec![2, 5]],
            vec![vec![1, 2], vec![0, 4]],
            vec![vec![1, 2], vec![0, 5]],
            vec![vec![1, 2], vec![0, 6]],
            vec![vec![2, 3], vec![1, 4]],
            vec![vec![2, 3], vec![1, 5], vec![0, 7]],
            vec![vec![2, 3], vec![1, 7], vec![0, 8]],
            vec![vec![2, 3], vec![0, 9], vec![1, 10]],
        ];
        let snapshots: Vec<Vec<u32>> = clusters_per_snapshot
            .iter()
            .map(|clusters| {
                let mut lam: Vec<u32> = (0..n as u32).map(|r| r + 100).collect();
                for (c, members) in clusters.iter().enumerate() {
                    for &m in members {
                        lam[m as usize] = c as u32;
                    }
                }
                lam
            })
            .collect();
        let log = SampleLog::from_lambda_snapshots(n, &snapshots);
        assert_eq!(mpmms(&log, 0).unwrap(), vec![0, 1]);
        assert_eq!(mpmms(&log, 1).unwrap(), vec![1, 2]);
        assert_eq!(mpmms(&log, 2).unwrap(), vec![2, 3]);
        assert_eq!(mpmms(&log, 3).unwrap(), vec![3]);
        let estimate = shared_mpmms_linkage(&log).unwrap();
        for cluster in estimate.clusters() {
            assert_eq!(cluster.len(), 1, "expected all singletons: {estimate:?}");
        }
    }

    /// Thresholding pairwise probabilities at 1/2 can break transitivity;
    /// the shared-MPMMS estimate cannot.
    #[test]
    fn thresholding_breaks_transitivity_shared_mpmms_does_not() {
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
        let p_ab = probs[&(0, 1)];
        let p_bc = probs[&(1, 2)];
        let p_ac = probs[&(0, 2)];
        assert!(p_ab > 0.5 && p_bc > 0.5 && p_ac < 0.5);
        // Threshold graph links A-B and B-C but not A-C: not transitive.
        let estimate = shared_mpmms_linkage(&log).unwrap();
        let labels = estimate.labels();
        // Transitivity is structural: the estimate is a partition, so if A~B
        // and B~C then A~C. Check it is also a sane answer here.
        for cluster in estimate.clusters() {
            assert!(!cluster.is_empty());
        }
        assert_eq!(labels.len(), 3);
    }

    #[test]
    fn partition_validation() {
        assert!(LinkagePartition::new(3, vec![vec![0, 1], vec![2]]).is_ok());
        assert!(LinkagePartition::new(3, vec![vec![0, 1]]).is_err());
        assert!(LinkagePartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(LinkagePartition::new(2, vec![vec![0, 5]]).is_err());
    }

    #[test]
    fn partition_from_labels_roundtrip() {
        let part = LinkagePartition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(part.clusters(), &[vec![0, 1], vec![2, 4], vec![3]]);
        let labels = part.labels();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[4]);
        assert_ne!(labels[0], labels[3]);
        assert_eq!(part.linked_pairs(), 2);
    }

    /// Random snapshot logs always produce valid partitions.
    #[test]
    fn shared_mpmms_always_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let n = rng.gen_range(1..=12);
            let n_snaps = rng.gen_range(1..=50);
            let n_pop = rng.gen_range(1..=n + 3);
            let snapshots: Vec<Vec<u32>> = (0..n_snaps)
                .map(|_| (0..n).map(|_| rng.gen_range(0..n_pop) as u32).collect())
                .collect();
            let log = SampleLog::from_lambda_snapshots(n, &snapshots);
            let estimate = shared_mpmms_linkage(&log).unwrap();
            assert_eq!(estimate.n_records(), n);
            let mut covered = vec![false; n];
            for cluster in estimate.clusters() {
                for &r in cluster {
                    assert!(!covered[r as usize]);
                    covered[r as usize] = true;
                }
            }
            assert!(covered.into_iter().all(|c| c));
        }
    }
}
