//! Core domain types: schemas, interned datasets, empirical distributions,
//! hyperparameters, the latent linkage state, and the unnormalized log joint
//! posterior that anchors every other module's tests.
//!
//! Records are noisy observations of unobserved latent entities. Each record
//! is assigned to a latent entity (`lambda`), each latent entity carries true
//! field values (`y`), and per-record per-field distortion flags (`z`) say
//! whether the observed value was drawn from a distortion distribution
//! instead of copied from the latent entity.

use std::collections::HashMap;

use thiserror::Error;

use crate::strdist::{FieldTables, StringDistance};

/// Whether a field is modelled with the distance-tilted string distortion
/// distribution or resampled from the empirical distribution outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    String,
    Categorical,
}

/// One modelled column of the input table.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    /// Index of the column in the source table this field was read from.
    pub column: usize,
}

/// Validated column layout. Fields are stored string-valued first, then
/// categorical, each group ordered by source column; the rest of the crate
/// relies on that ordering.
#[derive(Debug, Clone)]
pub struct Schema {
    pub fields: Vec<FieldSpec>,
    pub list_id_column: usize,
    pub truth_id_column: Option<usize>,
    n_string: usize,
}

impl Schema {
    pub fn new(
        mut fields: Vec<FieldSpec>,
        list_id_column: usize,
        truth_id_column: Option<usize>,
    ) -> Result<Schema, IngestError> {
        if fields.is_empty() {
            return Err(IngestError::NoFields);
        }
        let mut seen = HashMap::new();
        for f in &fields {
            if let Some(prev) = seen.insert(f.name.clone(), f.column) {
                return Err(IngestError::DuplicateField {
                    name: f.name.clone(),
                    columns: (prev, f.column),
                });
            }
        }
        fields.sort_by_key(|f| (matches!(f.kind, FieldKind::Categorical), f.column));
        let n_string = fields
            .iter()
            .filter(|f| matches!(f.kind, FieldKind::String))
            .count();
        Ok(Schema {
            fields,
            list_id_column,
            truth_id_column,
            n_string,
        })
    }

    /// Number of string-valued fields (they occupy indices `0..p_s`).
    pub fn p_s(&self) -> usize {
        self.n_string
    }

    pub fn p_c(&self) -> usize {
        self.fields.len() - self.n_string
    }

    pub fn p(&self) -> usize {
        self.fields.len()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input table is empty")]
    EmptyTable,
    #[error("no fields declared in the schema")]
    NoFields,
    #[error("field '{name}' declared twice (columns {} and {})", columns.0, columns.1)]
    DuplicateField { name: String, columns: (usize, usize) },
    #[error("data row {row}: missing value for column {column} ('{name}')")]
    MissingValue {
        row: usize,
        column: usize,
        name: String,
    },
    #[error("data row {row}: empty value for column {column} ('{name}')")]
    EmptyValue {
        row: usize,
        column: usize,
        name: String,
    },
}

/// Interned records. Every field value is an index into that field's
/// vocabulary, which holds the distinct values observed anywhere in the data
/// in first-occurrence order. Records are grouped by list.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: Schema,
    /// Records per list, in first-occurrence order of the list ids.
    pub list_sizes: Vec<usize>,
    /// List index of each record.
    pub list_of: Vec<u32>,
    /// Vocabulary indices, row-major `n_records x p`.
    pub records: Vec<u32>,
    /// Per-field value sets, first-occurrence order.
    pub vocab: Vec<Vec<String>>,
    /// Ground-truth entity ids, when the input declares them.
    pub truth: Option<Vec<u32>>,
    /// Original 1-based data-row number of each record.
    pub source_rows: Vec<usize>,
    /// Original list-id labels, per list.
    pub list_labels: Vec<String>,
}

impl Dataset {
    /// Intern a raw text table. Rows are whole source rows (all columns);
    /// the schema says which columns are fields, list ids, and truth ids.
    pub fn intern(rows: &[Vec<String>], schema: &Schema) -> Result<Dataset, IngestError> {
        if rows.is_empty() {
            return Err(IngestError::EmptyTable);
        }
        let p = schema.p();
        let cell = |row_idx: usize, col: usize, name: &str| -> Result<&str, IngestError> {
            let row = &rows[row_idx];
            let v = row.get(col).ok_or_else(|| IngestError::MissingValue {
                row: row_idx + 1,
                column: col,
                name: name.to_string(),
            })?;
            if v.is_empty() {
                return Err(IngestError::EmptyValue {
                    row: row_idx + 1,
                    column: col,
                    name: name.to_string(),
                });
            }
            Ok(v)
        };

        // Group rows by list id, first-occurrence order, stable within lists.
        let mut list_labels: Vec<String> = Vec::new();
        let mut list_index: HashMap<String, usize> = HashMap::new();
        let mut grouped: Vec<Vec<usize>> = Vec::new();
        for row_idx in 0..rows.len() {
            let label = cell(row_idx, schema.list_id_column, "list id")?.to_string();
            let li = *list_index.entry(label.clone()).or_insert_with(|| {
                list_labels.push(label);
                grouped.push(Vec::new());
                grouped.len() - 1
            });
            grouped[li].push(row_idx);
        }

        let order: Vec<usize> = grouped.iter().flatten().copied().collect();
        let n = order.len();

        let mut vocab: Vec<Vec<String>> = vec![Vec::new(); p];
        let mut vocab_index: Vec<HashMap<String, u32>> = vec![HashMap::new(); p];
        let mut records = Vec::with_capacity(n * p);
        let mut truth_labels: Vec<u32> = Vec::new();
        let mut truth_index: HashMap<String, u32> = HashMap::new();
        let mut list_of = Vec::with_capacity(n);
        let mut source_rows = Vec::with_capacity(n);

        for (li, members) in grouped.iter().enumerate() {
            for &row_idx in members {
                for (f, spec) in schema.fields.iter().enumerate() {
                    let v = cell(row_idx, spec.column, &spec.name)?;
                    let idx = match vocab_index[f].get(v) {
                        Some(&i) => i,
                        None => {
                            let i = vocab[f].len() as u32;
                            vocab[f].push(v.to_string());
                            vocab_index[f].insert(v.to_string(), i);
                            i
                        }
                    };
                    records.push(idx);
                }
                if let Some(tc) = schema.truth_id_column {
                    let v = cell(row_idx, tc, "truth id")?;
                    let id = match truth_index.get(v) {
                        Some(&i) => i,
                        None => {
                            let i = truth_index.len() as u32;
                            truth_index.insert(v.to_string(), i);
                            i
                        }
                    };
                    truth_labels.push(id);
                }
                list_of.push(li as u32);
                source_rows.push(row_idx + 1);
            }
        }

        Ok(Dataset {
            schema: schema.clone(),
            list_sizes: grouped.iter().map(Vec::len).collect(),
            list_of,
            records,
            vocab,
            truth: if schema.truth_id_column.is_some() {
                Some(truth_labels)
            } else {
                None
            },
            source_rows,
            list_labels,
        })
    }

    pub fn n_records(&self) -> usize {
        self.list_of.len()
    }

    pub fn n_lists(&self) -> usize {
        self.list_sizes.len()
    }

    pub fn n_fields(&self) -> usize {
        self.schema.p()
    }

    /// Vocabulary index of record `r` in field `f`.
    #[inline]
    pub fn value(&self, r: usize, f: usize) -> u32 {
        self.records[r * self.schema.p() + f]
    }

    pub fn value_str(&self, r: usize, f: usize) -> &str {
        &self.vocab[f][self.value(r, f) as usize]
    }
}

/// Per-field empirical frequencies over all records in all lists combined,
/// duplicates included.
#[derive(Debug, Clone)]
pub struct EmpiricalDist {
    pub probs: Vec<f64>,
}

impl EmpiricalDist {
    pub fn build(dataset: &Dataset, field: usize) -> EmpiricalDist {
        let n = dataset.n_records();
        let mut counts = vec![0usize; dataset.vocab[field].len()];
        for r in 0..n {
            counts[dataset.value(r, field) as usize] += 1;
        }
        EmpiricalDist {
            probs: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        }
    }
}

/// Known model constants: the Beta(a, b) prior on distortion probabilities,
/// the kernel steepness c, the latent population size, and the string metric.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyperparams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n_pop: usize,
    pub distance: StringDistance,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all_positive = self.a > 0.0 && self.b > 0.0 && self.c > 0.0;
        if !all_positive {
            return Err(ModelError::BadHyperparams {
                detail: format!("a, b, c must be strictly positive (a={}, b={}, c={})", self.a, self.b, self.c),
            });
        }
        if self.n_pop == 0 {
            return Err(ModelError::BadHyperparams {
                detail: "n_pop must be a positive integer".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameters: {detail}")]
    BadHyperparams { detail: String },
    #[error("state does not match dataset: {detail}")]
    DimensionMismatch { detail: String },
}

/// One Gibbs state: record-to-latent assignments, latent field values,
/// distortion flags, and per-list per-field distortion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub n_pop: usize,
    pub n_fields: usize,
    pub n_lists: usize,
    /// Latent index per record, in `0..n_pop`.
    pub lambda: Vec<u32>,
    /// Latent field values, row-major `n_pop x p`.
    pub y: Vec<u32>,
    /// Distortion flags, row-major `n_records x p`.
    pub z: Vec<u8>,
    /// Distortion probabilities, row-major `n_lists x p`.
    pub beta: Vec<f64>,
}

impl LatentState {
    #[inline]
    pub fn y_val(&self, latent: usize, field: usize) -> u32 {
        self.y[latent * self.n_fields + field]
    }

    #[inline]
    pub fn z_val(&self, record: usize, field: usize) -> u8 {
        self.z[record * self.n_fields + field]
    }

    #[inline]
    pub fn beta_val(&self, list: usize, field: usize) -> f64 {
        self.beta[list * self.n_fields + field]
    }

    /// Sum of distortion flags for one list and field.
    pub fn z_count(&self, dataset: &Dataset, list: usize, field: usize) -> usize {
        (0..dataset.n_records())
            .filter(|&r| dataset.list_of[r] as usize == list)
            .map(|r| self.z_val(r, field) as usize)
            .sum()
    }
}

/// First invariant violation found in a state, with coordinates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateViolation {
    #[error("{what}: expected {expected}, got {got}")]
    Dimensions {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("record {record}: lambda = {value} outside 0..{n_pop}")]
    LambdaOutOfRange {
        record: usize,
        value: u32,
        n_pop: usize,
    },
    #[error("latent {latent}, field {field}: y = {value} outside vocabulary of size {vocab}")]
    YOutOfRange {
        latent: usize,
        field: usize,
        value: u32,
        vocab: usize,
    },
    #[error("record {record}, field {field}: z = {value} is not a 0/1 flag")]
    ZNotBinary {
        record: usize,
        field: usize,
        value: u8,
    },
    #[error("list {list}, field {field}: beta = {value} outside (0, 1)")]
    BetaOutOfRange {
        list: usize,
        field: usize,
        value: f64,
    },
    #[error(
        "list {list}, record {record_in_list} (global {record}), field {field}: \
         z = 0 but the record disagrees with its latent entity"
    )]
    SupportViolated {
        list: usize,
        record_in_list: usize,
        record: usize,
        field: usize,
    },
}

/// Check every [`LatentState`] invariant against a dataset; reports the first
/// violation with its coordinates.
pub fn validate_state(
    state: &LatentState,
    dataset: &Dataset,
    hp: &Hyperparams,
) -> Result<(), StateViolation> {
    let n = dataset.n_records();
    let p = dataset.n_fields();
    let k = dataset.n_lists();
    let dims: [(&'static str, usize, usize); 7] = [
        ("lambda length", n, state.lambda.len()),
        ("y length", hp.n_pop * p, state.y.len()),
        ("z length", n * p, state.z.len()),
        ("beta length", k * p, state.beta.len()),
        ("n_pop", hp.n_pop, state.n_pop),
        ("n_fields", p, state.n_fields),
        ("n_lists", k, state.n_lists),
    ];
    for (what, expected, got) in dims {
        if expected != got {
            return Err(StateViolation::Dimensions {
                what,
                expected,
                got,
            });
        }
    }
    for (r, &lam) in state.lambda.iter().enumerate() {
        if lam as usize >= state.n_pop {
            return Err(StateViolation::LambdaOutOfRange {
                record: r,
                value: lam,
                n_pop: state.n_pop,
            });
        }
    }
    for j in 0..state.n_pop {
        for f in 0..p {
            let v = state.y_val(j, f);
            if v as usize >= dataset.vocab[f].len() {
                return Err(StateViolation::YOutOfRange {
                    latent: j,
                    field: f,
                    value: v,
                    vocab: dataset.vocab[f].len(),
                });
            }
        }
    }
    for i in 0..k {
        for f in 0..p {
            let b = state.beta_val(i, f);
            if !(b > 0.0 && b < 1.0) {
                return Err(StateViolation::BetaOutOfRange {
                    list: i,
                    field: f,
                    value: b,
                });
            }
        }
    }
    let mut seen_in_list = vec![0usize; k];
    for r in 0..n {
        let list = dataset.list_of[r] as usize;
        let record_in_list = seen_in_list[list];
        seen_in_list[list] += 1;
        for f in 0..p {
            let zv = state.z_val(r, f);
            if zv > 1 {
                return Err(StateViolation::ZNotBinary {
                    record: r,
                    field: f,
                    value: zv,
                });
            }
            if zv == 0 && dataset.value(r, f) != state.y_val(state.lambda[r] as usize, f) {
                return Err(StateViolation::SupportViolated {
                    list,
                    record_in_list,
                    record: r,
                    field: f,
                });
            }
        }
    }
    Ok(())
}

/// Log of the unnormalized joint posterior density of a state.
///
/// Returns negative infinity exactly when some undistorted field disagrees
/// with its latent entity's value (the support constraint); errors only on
/// dimension mismatches.
pub fn log_joint_posterior(
    state: &LatentState,
    dataset: &Dataset,
    tables: &FieldTables,
    hp: &Hyperparams,
) -> Result<f64, ModelError> {
    let n = dataset.n_records();
    let p = dataset.n_fields();
    let ps = dataset.schema.p_s();
    let k = dataset.n_lists();
    if state.lambda.len() != n
        || state.z.len() != n * p
        || state.y.len() != hp.n_pop * p
        || state.beta.len() != k * p
        || state.n_pop != hp.n_pop
    {
        return Err(ModelError::DimensionMismatch {
            detail: format!(
                "state sized for n_pop={}, |lambda|={}, |z|={}, |y|={}, |beta|={}; \
                 dataset has N={}, p={}, k={}, n_pop={}",
                state.n_pop,
                state.lambda.len(),
                state.z.len(),
                state.y.len(),
                state.beta.len(),
                n,
                p,
                k,
                hp.n_pop
            ),
        });
    }

    let mut lp = 0.0;
    for r in 0..n {
        let lam = state.lambda[r] as usize;
        for f in 0..p {
            let x = dataset.value(r, f) as usize;
            let yv = state.y_val(lam, f) as usize;
            if state.z_val(r, f) == 0 {
                if x != yv {
                    return Ok(f64::NEG_INFINITY);
                }
            } else {
                let ft = tables.field(f);
                lp += ft.log_alpha[x];
                if f < ps {
                    let st = ft.string.as_ref().expect("string tables for string field");
                    lp += st.log_h[yv] - hp.c * st.dist(x, yv);
                }
            }
        }
    }
    for j in 0..hp.n_pop {
        for f in 0..p {
            lp += tables.field(f).log_alpha[state.y_val(j, f) as usize];
        }
    }
    let mut z_sums = vec![0usize; k * p];
    for r in 0..n {
        let list = dataset.list_of[r] as usize;
        for f in 0..p {
            z_sums[list * p + f] += state.z_val(r, f) as usize;
        }
    }
    for i in 0..k {
        for f in 0..p {
            let zs = z_sums[i * p + f] as f64;
            let ni = dataset.list_sizes[i] as f64;
            let beta = state.beta_val(i, f);
            lp += (zs + hp.a - 1.0) * beta.ln() + (ni - zs + hp.b - 1.0) * (1.0 - beta).ln();
        }
    }
    Ok(lp)
}

#[cfg(test)]
pub mod test_support {
    use super::*;

    /// Build a single-list dataset from per-field value columns, with
    /// `Hyperparams { a, b: 99, c, n_pop: N }` and edit distance.
    pub fn toy_dataset(
        columns: &[&[&str]],
        kinds: &[FieldKind],
        c: f64,
        a: f64,
        n_records: usize,
    ) -> (Dataset, Hyperparams) {
        assert_eq!(columns.len(), kinds.len());
        for col in columns {
            assert_eq!(col.len(), n_records);
        }
        let fields: Vec<FieldSpec> = kinds
            .iter()
            .enumerate()
            .map(|(f, &kind)| FieldSpec {
                name: format!("f{f}"),
                kind,
                column: f + 1,
            })
            .collect();
        let schema = Schema::new(fields, 0, None).unwrap();
        let rows: Vec<Vec<String>> = (0..n_records)
            .map(|r| {
                let mut row = vec!["1".to_string()];
                row.extend(columns.iter().map(|col| col[r].to_string()));
                row
            })
            .collect();
        let dataset = Dataset::intern(&rows, &schema).unwrap();
        let hp = Hyperparams {
            a,
            b: 99.0,
            c,
            n_pop: n_records,
            distance: StringDistance::Edit,
        };
        (dataset, hp)
    }
}
