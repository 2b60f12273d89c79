//! File formats: schema-driven CSV ingestion, sample-log persistence, and
//! partition import/export.
//!
//! A sample log on disk is a directory holding `manifest.json` (run settings
//! and shape), `lambda.bin` (little-endian 32-bit latent indices, row-major
//! snapshots x records, present when assignments were recorded), and
//! `diagnostics.csv` (per-sweep scalar traces).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::gibbs::{LambdaSnapshots, SampleLog};
use crate::linkage::{LinkageError, LinkagePartition};
use crate::model::{Dataset, FieldKind, FieldSpec, Hyperparams, IngestError, Schema};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("schema {path}: {detail}")]
    SchemaParse { path: String, detail: String },
    #[error("schema column '{column}' has unknown kind '{kind}' (expected string|categorical|list_id|truth_id)")]
    UnknownKind { column: String, kind: String },
    #[error("schema references column '{name}' which is not in the CSV header")]
    MissingColumn { name: String },
    #[error("schema must declare exactly one list_id column")]
    ListColumnCount,
    #[error("schema declares more than one truth_id column")]
    TruthColumnCount,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Linkage(#[from] LinkageError),
    #[error("corrupt sample log: {detail}")]
    Corrupt { detail: String },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Parsed schema file: column name to kind keyword.
pub fn load_schema_file(path: &Path) -> Result<BTreeMap<String, String>, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let value: toml::Value = toml::from_str(&text).map_err(|e| IoError::SchemaParse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let columns = value
        .get("columns")
        .and_then(|v| v.as_table())
        .ok_or_else(|| IoError::SchemaParse {
            path: path.display().to_string(),
            detail: "missing [columns] table".to_string(),
        })?;
    let mut map = BTreeMap::new();
    for (name, kind) in columns {
        let kind = kind.as_str().ok_or_else(|| IoError::SchemaParse {
            path: path.display().to_string(),
            detail: format!("column '{name}' must map to a string kind"),
        })?;
        map.insert(name.clone(), kind.to_string());
    }
    Ok(map)
}

/// Render a schema file for a generated table.
pub fn schema_toml(schema: &Schema, header: &[String]) -> String {
    let mut out = String::from("[columns]\n");
    out.push_str(&format!("{} = \"list_id\"\n", header[schema.list_id_column]));
    if let Some(tc) = schema.truth_id_column {
        out.push_str(&format!("{} = \"truth_id\"\n", header[tc]));
    }
    for field in &schema.fields {
        let kind = match field.kind {
            FieldKind::String => "string",
            FieldKind::Categorical => "categorical",
        };
        out.push_str(&format!("{} = \"{kind}\"\n", field.name));
    }
    out
}

/// Read a CSV file and its schema into an interned dataset. An explicit
/// `truth_col` overrides (or adds) the schema's truth_id declaration.
pub fn load_input(
    input: &Path,
    schema_path: &Path,
    truth_col: Option<&str>,
) -> Result<Dataset, IoError> {
    let kinds = load_schema_file(schema_path)?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(input)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => IoError::File {
                path: input.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => IoError::Csv(e),
        })?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column_of = |name: &str| -> Result<usize, IoError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::MissingColumn {
                name: name.to_string(),
            })
    };

    let mut fields = Vec::new();
    let mut list_columns = Vec::new();
    let mut truth_column = None;
    for (name, kind) in &kinds {
        let column = column_of(name)?;
        match kind.as_str() {
            "string" => fields.push(FieldSpec {
                name: name.clone(),
                kind: FieldKind::String,
                column,
            }),
            "categorical" => fields.push(FieldSpec {
                name: name.clone(),
                kind: FieldKind::Categorical,
                column,
            }),
            "list_id" => list_columns.push(column),
            "truth_id" => {
                if truth_column.replace(column).is_some() {
                    return Err(IoError::TruthColumnCount);
                }
            }
            other => {
                return Err(IoError::UnknownKind {
                    column: name.clone(),
                    kind: other.to_string(),
                })
            }
        }
    }
    if let Some(name) = truth_col {
        truth_column = Some(column_of(name)?);
    }
    if list_columns.len() != 1 {
        return Err(IoError::ListColumnCount);
    }
    let schema = Schema::new(fields, list_columns[0], truth_column)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(|v| v.to_string()).collect());
    }
    Ok(Dataset::intern(&rows, &schema)?)
}

/// Write a raw table as RFC-4180 CSV.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(file_err(path))?;
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Manifest {
    format: u32,
    n_records: u32,
    n_pop: u32,
    n_lists: u32,
    n_fields: u32,
    sweeps: u64,
    thin: u64,
    seed: u64,
    hyperparams: Option<Hyperparams>,
    snapshots: u64,
    has_beta: bool,
}

/// Persist a sample log into a directory.
pub fn write_sample_log(log: &SampleLog, dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    let manifest = Manifest {
        format: 1,
        n_records: log.n_records,
        n_pop: log.n_pop,
        n_lists: log.n_lists,
        n_fields: log.n_fields,
        sweeps: log.sweeps,
        thin: log.thin,
        seed: log.seed,
        hyperparams: log.hyperparams,
        snapshots: log.lambda.as_ref().map_or(0, |l| l.count() as u64),
        has_beta: log.beta_trace.is_some(),
    };
    let manifest_path = dir.join("manifest.json");
    let mut file = fs::File::create(&manifest_path).map_err(file_err(&manifest_path))?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    file.write_all(b"\n").map_err(file_err(&manifest_path))?;

    if let Some(snaps) = &log.lambda {
        let bin_path = dir.join("lambda.bin");
        let file = fs::File::create(&bin_path).map_err(file_err(&bin_path))?;
        let mut writer = BufWriter::new(file);
        for &v in &snaps.data {
            writer
                .write_all(&v.to_le_bytes())
                .map_err(file_err(&bin_path))?;
        }
        writer.flush().map_err(file_err(&bin_path))?;
    }

    let diag_path = dir.join("diagnostics.csv");
    let mut writer = csv::Writer::from_path(&diag_path)?;
    let mut header = vec![
        "sweep".to_string(),
        "n_distinct".to_string(),
        "singles".to_string(),
        "doubles".to_string(),
        "triples".to_string(),
    ];
    let kp = (log.n_lists * log.n_fields) as usize;
    if log.beta_trace.is_some() {
        for i in 0..log.n_lists {
            for f in 0..log.n_fields {
                header.push(format!("beta_{i}_{f}"));
            }
        }
    }
    writer.write_record(&header)?;
    for sweep in 0..log.n_distinct.len() {
        let mut row = vec![
            (sweep + 1).to_string(),
            log.n_distinct[sweep].to_string(),
            log.multiplicity[sweep][0].to_string(),
            log.multiplicity[sweep][1].to_string(),
            log.multiplicity[sweep][2].to_string(),
        ];
        if let Some(trace) = &log.beta_trace {
            for v in &trace[sweep * kp..(sweep + 1) * kp] {
                row.push(format!("{v:.17e}"));
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(file_err(&diag_path))?;
    Ok(())
}

/// Load a sample log from a directory, verifying sizes against the manifest.
pub fn read_sample_log(dir: &Path) -> Result<SampleLog, IoError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(file_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != 1 {
        return Err(IoError::Corrupt {
            detail: format!("unknown format version {}", manifest.format),
        });
    }

    let lambda = if manifest.snapshots > 0 {
        let bin_path = dir.join("lambda.bin");
        let expected = manifest.snapshots as usize * manifest.n_records as usize * 4;
        let file = fs::File::open(&bin_path).map_err(file_err(&bin_path))?;
        let mut bytes = Vec::with_capacity(expected);
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(file_err(&bin_path))?;
        if bytes.len() != expected {
            return Err(IoError::Corrupt {
                detail: format!(
                    "lambda.bin holds {} bytes, manifest implies {expected}",
                    bytes.len()
                ),
            });
        }
        let data: Vec<u32> = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Some(LambdaSnapshots {
            stride: manifest.n_records as usize,
            data,
        })
    } else {
        None
    };

    let diag_path = dir.join("diagnostics.csv");
    let mut reader = csv::Reader::from_path(&diag_path)?;
    let kp = (manifest.n_lists * manifest.n_fields) as usize;
    let mut n_distinct = Vec::new();
    let mut multiplicity = Vec::new();
    let mut beta_trace = if manifest.has_beta {
        Some(Vec::new())
    } else {
        None
    };
    let parse = |v: &str| -> Result<f64, IoError> {
        v.parse::<f64>().map_err(|e| IoError::Corrupt {
            detail: format!("diagnostics.csv: bad number '{v}': {e}"),
        })
    };
    for record in reader.records() {
        let record = record?;
        if record.len() < 5 {
            return Err(IoError::Corrupt {
                detail: "diagnostics.csv row too short".to_string(),
            });
        }
        n_distinct.push(parse(&record[1])? as u32);
        multiplicity.push([
            parse(&record[2])? as u32,
            parse(&record[3])? as u32,
            parse(&record[4])? as u32,
        ]);
        if let Some(trace) = &mut beta_trace {
            if record.len() != 5 + kp {
                return Err(IoError::Corrupt {
                    detail: format!(
                        "diagnostics.csv row has {} columns, expected {}",
                        record.len(),
                        5 + kp
                    ),
                });
            }
            for v in record.iter().skip(5) {
                trace.push(parse(v)?);
            }
        }
    }
    if n_distinct.len() as u64 != manifest.sweeps {
        return Err(IoError::Corrupt {
            detail: format!(
                "diagnostics.csv holds {} sweeps, manifest says {}",
                n_distinct.len(),
                manifest.sweeps
            ),
        });
    }

    Ok(SampleLog {
        n_records: manifest.n_records,
        n_pop: manifest.n_pop,
        n_lists: manifest.n_lists,
        n_fields: manifest.n_fields,
        sweeps: manifest.sweeps,
        thin: manifest.thin,
        seed: manifest.seed,
        hyperparams: manifest.hyperparams,
        lambda,
        n_distinct,
        multiplicity,
        beta_trace,
    })
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PartitionFile {
    n_records: usize,
    clusters: Vec<Vec<u32>>,
}

pub fn write_partition_json(partition: &LinkagePartition, path: &Path) -> Result<(), IoError> {
    let file = PartitionFile {
        n_records: partition.n_records(),
        clusters: partition.clusters().to_vec(),
    };
    let mut out = fs::File::create(path).map_err(file_err(path))?;
    serde_json::to_writer_pretty(&mut out, &file)?;
    out.write_all(b"\n").map_err(file_err(path))?;
    Ok(())
}

pub fn read_partition_json(path: &Path) -> Result<LinkagePartition, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let file: PartitionFile = serde_json::from_str(&text)?;
    Ok(LinkagePartition::new(file.n_records, file.clusters)?)
}

/// One `record,cluster` row per record, ascending by record index.
pub fn write_partition_csv(partition: &LinkagePartition, path: &Path) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["record", "cluster"])?;
    for (r, label) in partition.labels().iter().enumerate() {
        writer.write_record(&[r.to_string(), label.to_string()])?;
    }
    writer.flush().map_err(file_err(path))?;
    Ok(())
}
