//! The `eblink` command line: dataset generation, sampling, estimation,
//! evaluation, posterior summaries, diagnostics, sensitivity sweeps, and the
//! divergence-bound report.
//!
//! Every path is deterministic given `--seed`; repeated invocations with the
//! same flags produce byte-identical primary outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::eval;
use crate::gibbs::{run_sampler, SamplerConfig};
use crate::io;
use crate::klbounds;
use crate::linkage;
use crate::model::{Dataset, Hyperparams};
use crate::strdist::{FieldTables, StringDistance};
use crate::synth::{self, GenConfig};

#[derive(Parser)]
#[command(
    name = "eblink",
    version,
    about = "Empirical-Bayes record linkage and de-duplication"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn parse_distance(s: &str) -> Result<StringDistance, String> {
    s.parse()
}

/// Model hyperparameters shared by the sampling subcommands.
#[derive(Args, Clone)]
pub struct ModelArgs {
    /// Beta prior shape a for the distortion probabilities.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Beta prior shape b for the distortion probabilities.
    #[arg(long, default_value_t = 99.0)]
    pub b: f64,
    /// Steepness of the string distortion kernel exp(-c * d).
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Latent population size; defaults to the number of records.
    #[arg(long)]
    pub npop: Option<usize>,
    /// String metric for the distortion kernel.
    #[arg(long, default_value = "edit", value_parser = parse_distance)]
    pub distance: StringDistance,
}

impl ModelArgs {
    fn hyperparams(&self, n_records: usize) -> anyhow::Result<Hyperparams> {
        let hp = Hyperparams {
            a: self.a,
            b: self.b,
            c: self.c,
            n_pop: self.npop.unwrap_or(n_records),
            distance: self.distance,
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with ground-truth entity ids.
    Gen {
        /// Output directory (writes data.csv and schema.toml).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        n_records: usize,
        #[arg(long, default_value_t = 50)]
        n_duplicates: usize,
        /// Poisson mean of per-string-field edits on duplicates.
        #[arg(long, default_value_t = 1.0)]
        string_error: f64,
        /// Probability a duplicated categorical field is swapped.
        #[arg(long, default_value_t = 0.05)]
        cat_error: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file with custom field pools; defaults to a built-in
        /// five-field person register.
        #[arg(long)]
        pools: Option<PathBuf>,
    },
    /// Run the Gibbs sampler and write a sample log directory.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Sample log output directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of Gibbs sweeps.
        #[arg(long)]
        iters: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep a lambda snapshot every this many sweeps.
        #[arg(long, default_value_t = 1)]
        thin: u64,
        /// Skip lambda snapshots entirely (diagnostics only).
        #[arg(long, default_value_t = false)]
        no_lambda: bool,
        /// Treat this CSV column as the ground-truth entity id.
        #[arg(long)]
        truth_col: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Turn a sample log into the shared-MPMMS linkage estimate.
    Estimate {
        /// Sample log directory from `run`.
        #[arg(long)]
        log: PathBuf,
        /// Partition JSON output path.
        #[arg(long)]
        out: PathBuf,
        /// Also write a record,cluster CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Score an estimated partition against ground truth.
    Evaluate {
        /// Partition JSON from `estimate`.
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        truth_col: Option<String>,
        /// Metrics JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export posterior pairwise match probabilities as CSV.
    Pairs {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop pairs below this probability.
        #[arg(long, default_value_t = 0.0)]
        min_prob: f64,
    },
    /// Posterior summary of the number of distinct entities.
    Summary {
        #[arg(long)]
        log: PathBuf,
        /// Summary JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Histogram CSV (value,count,density) for density plots.
        #[arg(long)]
        hist: Option<PathBuf>,
    },
    /// Geweke scores and multiplicity traces.
    Diag {
        #[arg(long)]
        log: PathBuf,
        /// Diagnostics JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot-ready trace CSV (sweep, n_distinct, singles, doubles, triples).
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Grid sweep over hyperparameters; one posterior summary row per cell.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Result CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        iters: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "99.0")]
        b: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        c: Vec<f64>,
        /// Latent population sizes; defaults to the record count.
        #[arg(long, value_delimiter = ',')]
        npop: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "edit", value_parser = parse_distance)]
        distance: Vec<StringDistance>,
        #[arg(long)]
        truth_col: Option<String>,
        /// Zip the parameter lists into one cell per position (length-one
        /// lists broadcast) instead of taking their cartesian product; this
        /// is how paired (a, b) settings with a fixed ratio are swept.
        #[arg(long, default_value_t = false)]
        paired: bool,
        /// Run grid cells one at a time instead of in parallel.
        #[arg(long, default_value_t = false)]
        serial: bool,
    },
    /// Verify the divergence identities and bounds; JSON report.
    Klcheck {
        /// Report JSON output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random cases per bound check.
        #[arg(long, default_value_t = 10_000)]
        cases: u64,
    },
}

/// Parse the process arguments and execute; returns the process exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_dataset(
    input: &Path,
    schema: &Path,
    truth_col: Option<&str>,
) -> anyhow::Result<Dataset> {
    let dataset = io::load_input(input, schema, truth_col)
        .with_context(|| format!("loading {}", input.display()))?;
    let vocab_sizes: Vec<String> = dataset
        .schema
        .fields
        .iter()
        .enumerate()
        .map(|(f, spec)| format!("{}={}", spec.name, dataset.vocab[f].len()))
        .collect();
    eprintln!(
        "loaded {} records in {} list(s); {} string + {} categorical field(s); vocabulary sizes: {}",
        dataset.n_records(),
        dataset.n_lists(),
        dataset.schema.p_s(),
        dataset.schema.p_c(),
        vocab_sizes.join(", ")
    );
    Ok(dataset)
}

fn write_json_or_stdout(value: &serde_json::Value, out: Option<&Path>) -> anyhow::Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(value)?);
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen {
            out,
            n_records,
            n_duplicates,
            string_error,
            cat_error,
            seed,
            pools,
        } => {
            let mut config =
                GenConfig::person_register(n_records, n_duplicates, string_error, cat_error, seed);
            if let Some(path) = pools {
                config.fields = load_pools(&path)?;
            }
            let table = synth::generate_table(&config)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let data_path = out.join("data.csv");
            let schema_path = out.join("schema.toml");
            io::write_csv(&data_path, &table.header, &table.rows)?;
            std::fs::write(&schema_path, io::schema_toml(&table.schema, &table.header))
                .with_context(|| format!("writing {}", schema_path.display()))?;
            eprintln!(
                "wrote {} records ({} duplicates) to {} with schema {}",
                n_records,
                n_duplicates,
                data_path.display(),
                schema_path.display()
            );
            Ok(())
        }
        Command::Run {
            input,
            schema,
            out,
            iters,
            seed,
            thin,
            no_lambda,
            truth_col,
            model,
        } => {
            let dataset = load_dataset(&input, &schema, truth_col.as_deref())?;
            let hp = model.hyperparams(dataset.n_records())?;
            let tables = FieldTables::build(&dataset, &hp)?;
            let config = SamplerConfig {
                sweeps: iters,
                seed,
                thin,
                record_lambda: !no_lambda,
            };
            let log = run_sampler(&dataset, &tables, &hp, &config);
            io::write_sample_log(&log, &out)?;
            eprintln!(
                "ran {iters} sweeps (seed {seed}); kept {} lambda snapshot(s) in {}",
                log.lambda.as_ref().map_or(0, |l| l.count()),
                out.display()
            );
            Ok(())
        }
        Command::Estimate { log, out, csv } => {
            let log = io::read_sample_log(&log)?;
            let partition = linkage::shared_mpmms_linkage(&log)?;
            io::write_partition_json(&partition, &out)?;
            if let Some(csv_path) = csv {
                io::write_partition_csv(&partition, &csv_path)?;
            }
            eprintln!(
                "estimated {} cluster(s) over {} records -> {}",
                partition.clusters().len(),
                partition.n_records(),
                out.display()
            );
            Ok(())
        }
        Command::Evaluate {
            estimate,
            input,
            schema,
            truth_col,
            out,
        } => {
            let partition = io::read_partition_json(&estimate)?;
            let dataset = load_dataset(&input, &schema, truth_col.as_deref())?;
            let truth_labels = dataset
                .truth
                .as_ref()
                .context("dataset declares no truth_id column; pass --truth-col")?;
            let truth = linkage::LinkagePartition::from_labels(truth_labels);
            let counts = eval::confusion_counts(&partition, &truth)?;
            let metrics = serde_json::json!({
                "cl": counts.correct_links,
                "fn": counts.false_negatives,
                "fp": counts.false_positives,
                "cnl": counts.correct_non_links,
                "fnr": eval::fnr(&counts),
                "fdr": eval::fdr(&counts),
            });
            write_json_or_stdout(&metrics, out.as_deref())
        }
        Command::Pairs { log, out, min_prob } => {
            let log = io::read_sample_log(&log)?;
            let probs = linkage::pairwise_match_probs(&log)?;
            let mut rows: Vec<((u32, u32), f64)> = probs
                .into_iter()
                .filter(|&(_, p)| p >= min_prob)
                .collect();
            rows.sort_by_key(|&(pair, _)| pair);
            let mut writer = csv::Writer::from_path(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            writer.write_record(["record_a", "record_b", "probability"])?;
            for ((a, b), p) in rows {
                writer.write_record(&[a.to_string(), b.to_string(), format!("{p:.10}")])?;
            }
            writer.flush()?;
            Ok(())
        }
        Command::Summary { log, out, hist } => {
            let log = io::read_sample_log(&log)?;
            let summary = eval::n_distinct_summary(&log)?;
            if let Some(hist_path) = hist {
                let mut writer = csv::Writer::from_path(&hist_path)
                    .with_context(|| format!("writing {}", hist_path.display()))?;
                writer.write_record(["n_distinct", "count", "density"])?;
                for &(value, count) in &summary.histogram {
                    writer.write_record(&[
                        value.to_string(),
                        count.to_string(),
                        format!("{:.10}", count as f64 / summary.sweeps as f64),
                    ])?;
                }
                writer.flush()?;
            }
            let value = serde_json::json!({
                "mean": summary.mean,
                "sd": summary.sd,
                "sweeps": summary.sweeps,
            });
            write_json_or_stdout(&value, out.as_deref())
        }
        Command::Diag { log, out, traces } => {
            let log = io::read_sample_log(&log)?;
            let series: Vec<(&str, Vec<f64>)> = vec![
                (
                    "n_distinct",
                    log.n_distinct.iter().map(|&v| v as f64).collect(),
                ),
                ("singles", trace_f64(&log, 1)?),
                ("doubles", trace_f64(&log, 2)?),
                ("triples", trace_f64(&log, 3)?),
            ];
            let mut entries = Vec::new();
            for (name, values) in &series {
                let result = eval::geweke_z(values, 0.1, 0.5)
                    .with_context(|| format!("Geweke on {name}"))?;
                entries.push(serde_json::json!({
                    "series": name,
                    "z": result.z,
                    "zero_variance": result.zero_variance,
                }));
            }
            if let Some(trace_path) = traces {
                let mut writer = csv::Writer::from_path(&trace_path)
                    .with_context(|| format!("writing {}", trace_path.display()))?;
                writer.write_record(["sweep", "n_distinct", "singles", "doubles", "triples"])?;
                for sweep in 0..log.n_distinct.len() {
                    writer.write_record(&[
                        (sweep + 1).to_string(),
                        log.n_distinct[sweep].to_string(),
                        log.multiplicity[sweep][0].to_string(),
                        log.multiplicity[sweep][1].to_string(),
                        log.multiplicity[sweep][2].to_string(),
                    ])?;
                }
                writer.flush()?;
            }
            write_json_or_stdout(&serde_json::json!({ "geweke": entries }), out.as_deref())
        }
        Command::Sweep {
            input,
            schema,
            out,
            iters,
            seed,
            a,
            b,
            c,
            npop,
            distance,
            truth_col,
            paired,
            serial,
        } => {
            let dataset = load_dataset(&input, &schema, truth_col.as_deref())?;
            let npop = if npop.is_empty() {
                vec![dataset.n_records()]
            } else {
                npop
            };
            let mut cells = Vec::new();
            if paired {
                let len = a
                    .len()
                    .max(b.len())
                    .max(c.len())
                    .max(npop.len())
                    .max(distance.len());
                let pick = |len_i: usize, i: usize| -> anyhow::Result<usize> {
                    match len_i {
                        1 => Ok(0),
                        l if l == len => Ok(i),
                        l => bail!("--paired lists must share one length (or be single): {l} vs {len}"),
                    }
                };
                for i in 0..len {
                    cells.push(Hyperparams {
                        a: a[pick(a.len(), i)?],
                        b: b[pick(b.len(), i)?],
                        c: c[pick(c.len(), i)?],
                        n_pop: npop[pick(npop.len(), i)?],
                        distance: distance[pick(distance.len(), i)?],
                    });
                }
            } else {
                for &av in &a {
                    for &bv in &b {
                        for &cv in &c {
                            for &nv in &npop {
                                for &dv in &distance {
                                    cells.push(Hyperparams {
                                        a: av,
                                        b: bv,
                                        c: cv,
                                        n_pop: nv,
                                        distance: dv,
                                    });
                                }
                            }
                        }
                    }
                }
            }
            for hp in &cells {
                hp.validate()?;
            }
            let run_cell = |hp: &Hyperparams| -> anyhow::Result<(f64, f64)> {
                let tables = FieldTables::build(&dataset, hp)?;
                let config = SamplerConfig {
                    sweeps: iters,
                    seed,
                    thin: 1,
                    record_lambda: false,
                };
                let log = run_sampler(&dataset, &tables, hp, &config);
                let summary = eval::n_distinct_summary(&log)?;
                Ok((summary.mean, summary.sd))
            };
            let results: Vec<anyhow::Result<(f64, f64)>> = if serial {
                cells.iter().map(run_cell).collect()
            } else {
                cells.par_iter().map(run_cell).collect()
            };
            let mut writer = csv::Writer::from_path(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            writer.write_record([
                "a",
                "b",
                "c",
                "npop",
                "distance",
                "seed",
                "iters",
                "mean_n_distinct",
                "sd_n_distinct",
            ])?;
            for (hp, result) in cells.iter().zip(results) {
                let (mean, sd) = result?;
                writer.write_record(&[
                    hp.a.to_string(),
                    hp.b.to_string(),
                    hp.c.to_string(),
                    hp.n_pop.to_string(),
                    hp.distance.to_string(),
                    seed.to_string(),
                    iters.to_string(),
                    format!("{mean:.6}"),
                    format!("{sd:.6}"),
                ])?;
            }
            writer.flush()?;
            eprintln!("swept {} cell(s) -> {}", cells.len(), out.display());
            Ok(())
        }
        Command::Klcheck { out, seed, cases } => {
            let reports = klbounds::run_default_checks(seed, cases);
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.name.as_str())
                .collect();
            for report in &reports {
                eprintln!(
                    "{} [{} case(s)] margin {:+.3e}: {}",
                    if report.passed { "PASS" } else { "FAIL" },
                    report.cases,
                    report.worst_margin,
                    report.name
                );
            }
            let value = serde_json::to_value(&reports)?;
            write_json_or_stdout(&value, out.as_deref())?;
            if !failed.is_empty() {
                bail!("bound checks failed: {}", failed.join(", "));
            }
            Ok(())
        }
    }
}

fn trace_f64(log: &crate::gibbs::SampleLog, m: usize) -> anyhow::Result<Vec<f64>> {
    Ok(eval::multiplicity_trace(log, m)?
        .into_iter()
        .map(|v| v as f64)
        .collect())
}

#[derive(serde::Deserialize)]
struct PoolsFile {
    field: Vec<PoolField>,
}

#[derive(serde::Deserialize)]
struct PoolField {
    name: String,
    kind: crate::model::FieldKind,
    pool: Vec<String>,
}

fn load_pools(path: &Path) -> anyhow::Result<Vec<synth::GenField>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let file: PoolsFile =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file
        .field
        .into_iter()
        .map(|f| synth::GenField {
            name: f.name,
            kind: f.kind,
            pool: f.pool,
        })
        .collect())
}
