//! String distances and the per-field lookup tables used by the sampler.
//!
//! Latent field values live on the finite vocabulary observed in the data, so
//! every pairwise distance, the tilted kernel `exp(-c * d)`, and the
//! distortion-distribution normalizers can be computed once up front and
//! reused by every sweep.

use thiserror::Error;

use crate::model::{Dataset, EmpiricalDist, FieldKind, Hyperparams};

/// Default cap on string-field vocabulary size. Each string field stores two
/// dense `|S| x |S|` matrices, so a 20k vocabulary already means 8e8 entries.
pub const DEFAULT_VOCAB_CAP: usize = 20_000;

/// Which string metric feeds the distortion kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StringDistance {
    /// Unit-cost Levenshtein distance (insert/delete/substitute).
    Edit,
    /// One minus Jaro-Winkler similarity; lives in [0, 1].
    JaroWinkler,
}

impl StringDistance {
    pub fn eval(&self, s: &str, t: &str) -> f64 {
        match self {
            StringDistance::Edit => edit_distance(s, t) as f64,
            StringDistance::JaroWinkler => jaro_winkler_distance(s, t),
        }
    }
}

impl std::fmt::Display for StringDistance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StringDistance::Edit => write!(f, "edit"),
            StringDistance::JaroWinkler => write!(f, "jw"),
        }
    }
}

impl std::str::FromStr for StringDistance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edit" => Ok(StringDistance::Edit),
            "jw" | "jaro-winkler" | "jarowinkler" => Ok(StringDistance::JaroWinkler),
            other => Err(format!("unknown distance '{other}' (expected edit|jw)")),
        }
    }
}

/// Levenshtein distance with unit insert/delete/substitute costs.
pub fn edit_distance(s: &str, t: &str) -> usize {
    let s: Vec<char> = s.chars().collect();
    let t: Vec<char> = t.chars().collect();
    if s.is_empty() {
        return t.len();
    }
    if t.is_empty() {
        return s.len();
    }
    // Two-row DP over the shorter string.
    let (a, b) = if s.len() <= t.len() { (&s, &t) } else { (&t, &s) };
    let mut prev: Vec<usize> = (0..=a.len()).collect();
    let mut cur = vec![0usize; a.len() + 1];
    for (i, bc) in b.iter().enumerate() {
        cur[0] = i + 1;
        for (j, ac) in a.iter().enumerate() {
            let sub = prev[j] + usize::from(ac != bc);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[a.len()]
}

/// One minus the Jaro-Winkler similarity, with the standard prefix scale 0.1,
/// maximum prefix length 4, and the 0.7 boost threshold. Zero iff the strings
/// are equal.
pub fn jaro_winkler_distance(s: &str, t: &str) -> f64 {
    1.0 - jaro_winkler_similarity(s, t)
}

fn jaro_similarity(s: &[char], t: &[char]) -> f64 {
    if s.is_empty() && t.is_empty() {
        return 1.0;
    }
    if s.is_empty() || t.is_empty() {
        return 0.0;
    }
    let window = (s.len().max(t.len()) / 2).saturating_sub(1);
    let mut s_matched = vec![false; s.len()];
    let mut t_matched = vec![false; t.len()];
    let mut matches = 0usize;
    for (i, sc) in s.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(t.len());
        for j in lo..hi {
            if !t_matched[j] && t[j] == *sc {
                s_matched[i] = true;
                t_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let mut transpositions = 0usize;
    let mut j = 0usize;
    for (i, m) in s_matched.iter().enumerate() {
        if !m {
            continue;
        }
        while !t_matched[j] {
            j += 1;
        }
        if s[i] != t[j] {
            transpositions += 1;
        }
        j += 1;
    }
    let m = matches as f64;
    (m / s.len() as f64 + m / t.len() as f64 + (m - (transpositions / 2) as f64) / m) / 3.0
}

fn jaro_winkler_similarity(s: &str, t: &str) -> f64 {
    let s: Vec<char> = s.chars().collect();
    let t: Vec<char> = t.chars().collect();
    let jaro = jaro_similarity(&s, &t);
    if jaro <= 0.7 {
        return jaro;
    }
    let prefix = s
        .iter()
        .zip(t.iter())
        .take(4)
        .take_while(|(a, b)| a == b)
        .count();
    jaro + prefix as f64 * 0.1 * (1.0 - jaro)
}

/// Errors raised while building or querying [`FieldTables`].
#[derive(Debug, Error)]
pub enum TablesError {
    #[error(
        "string field '{field}' has {size} distinct values, above the cap of {cap}; \
         the dense distance matrix would hold {entries} entries"
    )]
    VocabTooLarge {
        field: String,
        size: usize,
        cap: usize,
        entries: u64,
    },
    #[error("field index {field} out of range (dataset has {n_fields} fields)")]
    FieldOutOfRange { field: usize, n_fields: usize },
    #[error("field '{field}' is categorical; distortion kernels apply to string fields only")]
    NotStringField { field: String },
}

/// Precomputed per-string-field tables.
#[derive(Debug, Clone)]
pub struct StringTables {
    n: usize,
    /// Pairwise distances d(w, w'), row-major, symmetric with zero diagonal.
    dist: Vec<f64>,
    /// exp(-c * d(w, w')), row-major; diagonal exactly 1.
    kernel: Vec<f64>,
    /// h(w0) = 1 / sum_w alpha(w) * exp(-c * d(w, w0)).
    pub h: Vec<f64>,
    pub log_h: Vec<f64>,
}

impl StringTables {
    #[inline]
    pub fn dist(&self, w: usize, w0: usize) -> f64 {
        self.dist[w * self.n + w0]
    }

    #[inline]
    pub fn kernel(&self, w: usize, w0: usize) -> f64 {
        self.kernel[w * self.n + w0]
    }
}

/// Per-field tables shared read-only by every sweep.
#[derive(Debug, Clone)]
pub struct FieldTable {
    pub alpha: EmpiricalDist,
    pub log_alpha: Vec<f64>,
    /// Cumulative alpha with the final entry pinned to 1.0, for prior draws.
    pub alpha_cdf: Vec<f64>,
    /// `Some` for string fields only.
    pub string: Option<StringTables>,
    /// Weight of the z=1 branch when the record agrees with its latent:
    /// alpha(x) * h(x) for string fields, alpha(x) for categorical ones.
    pub z_agree_weight: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FieldTables {
    fields: Vec<FieldTable>,
    pub steepness: f64,
    pub distance: StringDistance,
}

impl FieldTables {
    /// Build all tables with the default vocabulary cap.
    pub fn build(dataset: &Dataset, hp: &Hyperparams) -> Result<FieldTables, TablesError> {
        Self::build_with_cap(dataset, hp, DEFAULT_VOCAB_CAP)
    }

    pub fn build_with_cap(
        dataset: &Dataset,
        hp: &Hyperparams,
        vocab_cap: usize,
    ) -> Result<FieldTables, TablesError> {
        let mut fields = Vec::with_capacity(dataset.n_fields());
        for f in 0..dataset.n_fields() {
            let spec = &dataset.schema.fields[f];
            let vocab = &dataset.vocab[f];
            let alpha = EmpiricalDist::build(dataset, f);
            let log_alpha: Vec<f64> = alpha.probs.iter().map(|p| p.ln()).collect();
            let mut alpha_cdf = Vec::with_capacity(vocab.len());
            let mut acc = 0.0;
            for p in &alpha.probs {
                acc += p;
                alpha_cdf.push(acc);
            }
            if let Some(last) = alpha_cdf.last_mut() {
                *last = 1.0;
            }
            let string = match spec.kind {
                FieldKind::Categorical => None,
                FieldKind::String => {
                    let n = vocab.len();
                    if n > vocab_cap {
                        return Err(TablesError::VocabTooLarge {
                            field: spec.name.clone(),
                            size: n,
                            cap: vocab_cap,
                            entries: (n as u64) * (n as u64),
                        });
                    }
                    let mut dist = vec![0.0; n * n];
                    for w in 0..n {
                        for w0 in (w + 1)..n {
                            let d = hp.distance.eval(&vocab[w], &vocab[w0]);
                            dist[w * n + w0] = d;
                            dist[w0 * n + w] = d;
                        }
                    }
                    let kernel: Vec<f64> = dist.iter().map(|d| (-hp.c * d).exp()).collect();
                    let mut h = vec![0.0; n];
                    for w0 in 0..n {
                        let mut sum = 0.0;
                        for w in 0..n {
                            sum += alpha.probs[w] * kernel[w * n + w0];
                        }
                        h[w0] = 1.0 / sum;
                    }
                    let log_h = h.iter().map(|v| v.ln()).collect();
                    Some(StringTables {
                        n,
                        dist,
                        kernel,
                        h,
                        log_h,
                    })
                }
            };
            let z_agree_weight = match &string {
                Some(st) => alpha
                    .probs
                    .iter()
                    .zip(&st.h)
                    .map(|(a, h)| a * h)
                    .collect(),
                None => alpha.probs.clone(),
            };
            fields.push(FieldTable {
                alpha,
                log_alpha,
                alpha_cdf,
                string,
                z_agree_weight,
            });
        }
        Ok(FieldTables {
            fields,
            steepness: hp.c,
            distance: hp.distance,
        })
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    #[inline]
    pub fn field(&self, f: usize) -> &FieldTable {
        &self.fields[f]
    }

    pub fn try_field(&self, f: usize) -> Result<&FieldTable, TablesError> {
        self.fields.get(f).ok_or(TablesError::FieldOutOfRange {
            field: f,
            n_fields: self.fields.len(),
        })
    }

    /// String tables for field `f`, or an error naming the field if it is
    /// categorical.
    pub fn string_tables(&self, f: usize, dataset: &Dataset) -> Result<&StringTables, TablesError> {
        self.try_field(f)?
            .string
            .as_ref()
            .ok_or_else(|| TablesError::NotStringField {
                field: dataset.schema.fields[f].name.clone(),
            })
    }
}

/// The string-field distortion distribution centered at vocabulary entry `y`:
/// `P(w) = alpha(w) * exp(-c * d(w, y)) * h(y)`.
pub fn distortion_pmf(
    tables: &FieldTables,
    dataset: &Dataset,
    field: usize,
    y: usize,
) -> Result<Vec<f64>, TablesError> {
    let ft = tables.try_field(field)?;
    let st = tables.string_tables(field, dataset)?;
    let h = st.h[y];
    Ok((0..ft.alpha.probs.len())
        .map(|w| ft.alpha.probs[w] * st.kernel(w, y) * h)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::toy_dataset;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("gibbs", "gibbs"), 0);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("flaw", "lawn"), 2);
    }

    #[test]
    fn edit_distance_symmetric_and_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alphabet: Vec<char> = "abcd".chars().collect();
        let word = |rng: &mut ChaCha8Rng| -> String {
            let len = rng.gen_range(0..8);
            (0..len).map(|_| alphabet[rng.gen_range(0..4)]).collect()
        };
        for _ in 0..500 {
            let (a, b, c) = (word(&mut rng), word(&mut rng), word(&mut rng));
            let ab = edit_distance(&a, &b);
            let ba = edit_distance(&b, &a);
            assert_eq!(ab, ba);
            let bc = edit_distance(&b, &c);
            let ac = edit_distance(&a, &c);
            assert!(ac <= ab + bc, "triangle violated for {a:?} {b:?} {c:?}");
        }
    }

    #[test]
    fn jaro_winkler_basics() {
        assert_eq!(jaro_winkler_distance("martha", "martha"), 0.0);
        assert_eq!(jaro_winkler_distance("abc", "xyz"), 1.0);
        // Hand evaluation: jaro = (1 + 1 + 5/6)/3 = 17/18, prefix 3,
        // jw = 17/18 + 0.3 * (1/18), distance = 0.7/18.
        let d = jaro_winkler_distance("MARTHA", "MARHTA");
        assert!((d - 0.7 / 18.0).abs() < 1e-12, "got {d}");
        assert_eq!(jaro_winkler_distance("", ""), 0.0);
        assert_eq!(jaro_winkler_distance("", "a"), 1.0);
    }

    #[test]
    fn jaro_winkler_range_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alphabet: Vec<char> = "abcz".chars().collect();
        for _ in 0..500 {
            let len_a = rng.gen_range(0..7);
            let len_b = rng.gen_range(0..7);
            let a: String = (0..len_a).map(|_| alphabet[rng.gen_range(0..4)]).collect();
            let b: String = (0..len_b).map(|_| alphabet[rng.gen_range(0..4)]).collect();
            let d = jaro_winkler_distance(&a, &b);
            assert!((0.0..=1.0).contains(&d));
            if a == b {
                assert_eq!(d, 0.0);
            } else {
                assert!(d > 0.0, "distance 0 for unequal {a:?} {b:?}");
            }
        }
    }

    /// Two-value vocabulary with d = 1 and uniform alpha: h has a closed form.
    #[test]
    fn normalizer_two_value_closed_form() {
        let (dataset, hp) = toy_dataset(&[&["a", "b"]], &[FieldKind::String], 1.0, 1.0, 2);
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let st = tables.string_tables(0, &dataset).unwrap();
        let expect = 1.0 / (0.5 + 0.5 * (-1.0f64).exp());
        assert!((st.h[0] - expect).abs() < 1e-12);
        assert!((st.h[1] - expect).abs() < 1e-12);
        // dist symmetric, zero diagonal; kernel diagonal exactly 1.
        assert_eq!(st.dist(0, 0), 0.0);
        assert_eq!(st.dist(0, 1), st.dist(1, 0));
        assert_eq!(st.kernel(0, 0), 1.0);
        assert!(st.kernel(0, 1) > 0.0 && st.kernel(0, 1) <= 1.0);
    }

    #[test]
    fn normalizer_at_least_one() {
        let (dataset, hp) = toy_dataset(
            &[&["ann", "bob", "cara", "dan", "ann"]],
            &[FieldKind::String],
            0.7,
            1.0,
            5,
        );
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let st = tables.string_tables(0, &dataset).unwrap();
        for &h in &st.h {
            assert!(h >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn normalizer_large_steepness_limit() {
        // c = 50 makes every off-diagonal kernel term negligible, so
        // h(w) -> 1 / alpha(w).
        let (dataset, hp) = toy_dataset(
            &[&["ann", "bob", "cara", "ann"]],
            &[FieldKind::String],
            50.0,
            1.0,
            4,
        );
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let ft = tables.field(0);
        let st = tables.string_tables(0, &dataset).unwrap();
        for w in 0..3 {
            let expect = 1.0 / ft.alpha.probs[w];
            assert!((st.h[w] - expect).abs() / expect < 1e-9);
        }
    }

    #[test]
    fn normalizer_inverts_weighted_kernel_sum() {
        let (dataset, hp) = toy_dataset(
            &[&["ann", "bob", "cara", "dania", "ann", "bob"]],
            &[FieldKind::String],
            1.3,
            1.0,
            6,
        );
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let ft = tables.field(0);
        let st = tables.string_tables(0, &dataset).unwrap();
        for w0 in 0..ft.alpha.probs.len() {
            let sum: f64 = (0..ft.alpha.probs.len())
                .map(|w| ft.alpha.probs[w] * st.kernel(w, w0))
                .sum();
            assert!((st.h[w0] * sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vocab_cap_refused() {
        let (dataset, hp) = toy_dataset(
            &[&["ann", "bob", "cara"]],
            &[FieldKind::String],
            1.0,
            1.0,
            3,
        );
        let err = FieldTables::build_with_cap(&dataset, &hp, 2).unwrap_err();
        assert!(matches!(err, TablesError::VocabTooLarge { size: 3, .. }));
        let msg = err.to_string();
        assert!(msg.contains("cap"), "unhelpful message: {msg}");
    }

    #[test]
    fn distortion_pmf_zero_steepness_is_alpha() {
        let (dataset, hp) = toy_dataset(
            &[&["ann", "bob", "ann", "cara"]],
            &[FieldKind::String],
            0.0,
            1.0,
            4,
        );
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let pmf = distortion_pmf(&tables, &dataset, 0, 1).unwrap();
        for (p, a) in pmf.iter().zip(&tables.field(0).alpha.probs) {
            assert!((p - a).abs() < 1e-12);
        }
    }

    #[test]
    fn distortion_pmf_two_value_case() {
        // S = {a, b}, d = 1, c = 1, alpha uniform, centered at a:
        // P(a) = 1/(1 + e^{-1}), P(b) = e^{-1}/(1 + e^{-1}).
        let (dataset, hp) = toy_dataset(&[&["a", "b"]], &[FieldKind::String], 1.0, 1.0, 2);
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        let pmf = distortion_pmf(&tables, &dataset, 0, 0).unwrap();
        let e = (-1.0f64).exp();
        assert!((pmf[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((pmf[1] - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn distortion_pmf_normalizes_and_center_is_modal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let n_vals = rng.gen_range(2..6);
            let words: Vec<String> = (0..n_vals)
                .map(|i| {
                    let len = rng.gen_range(1..6);
                    let mut w: String =
                        (0..len).map(|_| (b'a' + rng.gen_range(0..5)) as char).collect();
                    w.push_str(&i.to_string()); // force distinctness
                    w
                })
                .collect();
            let refs: Vec<&str> = words.iter().map(|s| s.as_str()).collect();
            let c = rng.gen_range(0.1..3.0);
            let (dataset, hp) = toy_dataset(&[&refs], &[FieldKind::String], c, 1.0, n_vals);
            let tables = FieldTables::build(&dataset, &hp).unwrap();
            for y in 0..n_vals {
                let pmf = distortion_pmf(&tables, &dataset, 0, y).unwrap();
                let total: f64 = pmf.iter().sum();
                assert!((total - 1.0).abs() < 1e-10, "trial {trial}: sum {total}");
                // alpha is uniform here (all words distinct), so the center wins.
                let argmax = pmf
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                assert_eq!(argmax, y);
            }
        }
    }

    #[test]
    fn distortion_pmf_steepness_monotonicity() {
        // Increasing c strictly decreases P(w != y) / P(y) for fixed alpha.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let words = ["anna", "bert", "carla", "dora"];
            let c_low = rng.gen_range(0.05..1.0);
            let c_high = c_low + rng.gen_range(0.1..2.0);
            let (dataset, hp_low) = toy_dataset(&[&words], &[FieldKind::String], c_low, 1.0, 4);
            let (_, hp_high) = toy_dataset(&[&words], &[FieldKind::String], c_high, 1.0, 4);
            let t_low = FieldTables::build(&dataset, &hp_low).unwrap();
            let t_high = FieldTables::build(&dataset, &hp_high).unwrap();
            for y in 0..4 {
                let p_low = distortion_pmf(&t_low, &dataset, 0, y).unwrap();
                let p_high = distortion_pmf(&t_high, &dataset, 0, y).unwrap();
                for w in 0..4 {
                    if w == y {
                        continue;
                    }
                    let r_low = p_low[w] / p_low[y];
                    let r_high = p_high[w] / p_high[y];
                    assert!(r_high < r_low, "ratio not decreasing in c");
                }
            }
        }
    }

    #[test]
    fn distortion_pmf_rejects_categorical() {
        let (dataset, hp) = toy_dataset(&[&["1", "2"]], &[FieldKind::Categorical], 1.0, 1.0, 2);
        let tables = FieldTables::build(&dataset, &hp).unwrap();
        assert!(distortion_pmf(&tables, &dataset, 0, 0).is_err());
    }
}
