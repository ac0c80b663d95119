//! Executes a resolved [`RunConfig`] and writes `report.json`, `data.csv`
//! and `manifest.json` into a content-addressed run directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use nikodym::curve::lookup;
use nikodym::experiments::sharpness::{sharpness_log_sweep, LEVEL_RATIO_SPREAD};
use nikodym::experiments::volume::default_pairs;
use nikodym::experiments::{
    aniso_admissibility_experiment, base_case_experiment, count_experiment,
    decomposition_audit_pipeline, n0_lemma_experiment, sharpness_range_experiment,
    sobolev_embedding_check, theorem1_scaling, tube_volume_experiment,
};
use nikodym::operators::KernelQuadrature;

use crate::config::{Execution, RunConfig};

pub const SCHEMA: u32 = 1;

/// Factor allowed between measured and predicted tube volumes.
pub const VOLUME_FACTOR: f64 = 4.0;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("stage `{stage}` failed: {reason}")]
    Stage { stage: String, reason: String },
    #[error("experiment `{experiment}` failed: {source}")]
    Experiment {
        experiment: String,
        source: nikodym::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What an experiment produced before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub pass: bool,
    /// Names the failed check when `pass` is false.
    pub check: &'static str,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub hash: String,
    pub pass: bool,
    pub check: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    experiment: &'a str,
    config: &'a RunConfig,
    config_hash: &'a str,
    library_version: &'a str,
    wall_time_seconds: f64,
    workers: usize,
    files: [&'a str; 3],
    pass: bool,
}

/// SHA-256 over the canonical JSON of the config and the library version.
pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical =
        serde_json::to_vec(&json!({ "config": cfg, "library_version": nikodym::VERSION }))
            .expect("config serializes");
    Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn failed(experiment: &str) -> impl Fn(nikodym::Error) -> RunError + '_ {
    move |e| match e {
        nikodym::Error::Stage { stage, reason } => RunError::Stage { stage, reason },
        source => RunError::Experiment {
            experiment: experiment.into(),
            source,
        },
    }
}

fn quadrature() -> KernelQuadrature {
    KernelQuadrature {
        t_levels: 2,
        ..Default::default()
    }
}

/// Runs the experiment on the current rayon pool.
pub fn execute(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let err = failed(&cfg.experiment);
    let curve = lookup::<f64>(&cfg.curve, cfg.d).map_err(&err)?;
    let q = quadrature();
    let art = match cfg.experiment.as_str() {
        "an-count" => {
            let r = count_experiment(&curve, cfg.n_level, &cfg.lambdas, cfg.seed).map_err(&err)?;
            let rows = r
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.lambda.to_string(),
                        p.analytic.to_string(),
                        p.empirical.to_string(),
                        num(p.limit),
                        p.pass.to_string(),
                    ]
                })
                .collect();
            Artifacts {
                header: vec!["lambda", "analytic", "empirical", "limit", "pass"],
                rows,
                pass: r.pass,
                check: "count <= C log2(2+lambda)",
                report: serde_json::to_value(&r)?,
            }
        }
        "aniso-admissibility" => {
            let r =
                aniso_admissibility_experiment(&curve, &cfg.deltas, cfg.samples as usize, cfg.seed)
                    .map_err(&err)?;
            let rows = r
                .points
                .iter()
                .map(|p| {
                    vec![
                        num(p.delta),
                        p.isotropic.admissible.to_string(),
                        p.graded.admissible.to_string(),
                        p.symbol.inner_violations.to_string(),
                        p.symbol.outer_violations.to_string(),
                        p.tube.inner_violations.to_string(),
                        p.tube.outer_violations.to_string(),
                    ]
                })
                .collect();
            Artifacts {
                header: vec![
                    "delta",
                    "isotropic",
                    "graded",
                    "symbol_inner",
                    "symbol_outer",
                    "tube_inner",
                    "tube_outer",
                ],
                rows,
                pass: r.pass,
                check: "admissibility and isotropic sandwich",
                report: serde_json::to_value(&r)?,
            }
        }
        "kernel-base-case" => {
            let lambdas: Vec<f64> = cfg.lambdas.iter().map(|&l| l as f64).collect();
            let r = base_case_experiment(&lambdas, &q).map_err(&err)?;
            let rows = r
                .points
                .iter()
                .flat_map(|p| {
                    p.profile
                        .iter()
                        .map(move |&(x, k, kd)| vec![num(p.lambda), num(x), num(k), num(kd)])
                })
                .collect();
            Artifacts {
                header: vec![
                    "lambda",
                    "one_plus_u_lambda",
                    "abs_k",
                    "abs_k_ds_over_lambda2",
                ],
                rows,
                pass: r.pass,
                check: "kernel decay and Schur growth",
                report: serde_json::to_value(&r)?,
            }
        }
        "lemma-audit" => {
            let lambda = cfg.lambdas[0];
            let r = decomposition_audit_pipeline(&curve, lambda, cfg.n_level, cfg.seed, &q)
                .map_err(&err)?;
            let rows = r
                .stages
                .iter()
                .map(|s| {
                    vec![
                        s.index.to_string(),
                        s.name.to_string(),
                        s.pass.to_string(),
                        s.vacuous.to_string(),
                        s.summary.clone(),
                    ]
                })
                .collect();
            Artifacts {
                header: vec!["stage", "name", "pass", "vacuous", "summary"],
                rows,
                pass: r.pass,
                check: "decomposition audit",
                report: serde_json::to_value(&r)?,
            }
        }
        "n0-lemma" => {
            let r = n0_lemma_experiment(&curve, cfg.n_level, &cfg.lambdas, cfg.seed, &q)
                .map_err(&err)?;
            let rows = r
                .points
                .iter()
                .map(|p| {
                    let s = &p.schur;
                    vec![
                        num(p.lambda),
                        s.samples.to_string(),
                        num(s.big_lambda),
                        num(s.schur0),
                        num(s.schur1),
                        num(s.normalized0),
                        num(s.normalized1),
                        num(s.width_constant),
                        num(s.derivative_constant),
                    ]
                })
                .collect();
            Artifacts {
                header: vec![
                    "lambda",
                    "samples",
                    "big_lambda",
                    "schur0",
                    "schur1",
                    "normalized0",
                    "normalized1",
                    "width",
                    "derivative",
                ],
                rows,
                pass: r.pass,
                check: "n=0 Schur bounds",
                report: serde_json::to_value(&r)?,
            }
        }
        "sharpness-log" => {
            let r =
                sharpness_log_sweep(&curve, &cfg.deltas, cfg.p, cfg.slack, cfg.probes, cfg.seed)
                    .map_err(&err)?;
            let rows = r
                .runs
                .iter()
                .flat_map(|run| {
                    (0..run.level_measures.len()).map(move |k| {
                        vec![
                            num(run.delta),
                            k.to_string(),
                            num(run.level_measures[k]),
                            num(run.ratios[k]),
                            num(run.cone_measures[k]),
                            num(run.cone_ratios[k]),
                            num(run.cone_levels[k]),
                        ]
                    })
                })
                .collect();
            let per_k = r
                .runs
                .iter()
                .all(|run| run.per_k_pass && run.chebyshev_holds && !run.degenerate);
            Artifacts {
                header: vec![
                    "delta",
                    "k",
                    "level_measure",
                    "ratio",
                    "cone_measure",
                    "cone_ratio",
                    "cone_level",
                ],
                rows,
                pass: r.fit.pass && per_k,
                check: if r.fit.pass {
                    "per-k level-set bound"
                } else {
                    "lower-bound exponent"
                },
                report: serde_json::to_value(&r)?,
            }
        }
        "sharpness-range" => {
            let runs = cfg
                .deltas
                .iter()
                .map(|&delta| {
                    sharpness_range_experiment(&curve, delta, cfg.p, cfg.probes, cfg.seed)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(&err)?;
            let lo = runs
                .iter()
                .map(|r| r.measure_ratio)
                .fold(f64::INFINITY, f64::min);
            let hi = runs.iter().map(|r| r.measure_ratio).fold(0.0, f64::max);
            let pass = lo > 0.0
                && hi / lo <= LEVEL_RATIO_SPREAD
                && runs.iter().all(|r| r.max_value <= 1.0);
            let rows = runs
                .iter()
                .map(|r| {
                    vec![
                        num(r.delta),
                        num(r.c_min),
                        num(r.superlevel_measure),
                        num(r.measure_ratio),
                        num(r.lower_bound),
                        num(r.max_value),
                    ]
                })
                .collect();
            Artifacts {
                header: vec![
                    "delta",
                    "c_min",
                    "superlevel_measure",
                    "measure_ratio",
                    "lower_bound",
                    "max_value",
                ],
                rows,
                pass,
                check: "superlevel measure against the neighbourhood volume",
                report: json!({ "runs": runs, "measure_ratio_spread": if lo > 0.0 { hi / lo } else { f64::INFINITY }, "pass": pass }),
            }
        }
        "sobolev-check" => {
            let r =
                sobolev_embedding_check(&curve, &cfg.deltas, cfg.fields, cfg.seed).map_err(&err)?;
            let rows = r
                .points
                .iter()
                .flat_map(|p| {
                    p.ratios
                        .iter()
                        .enumerate()
                        .map(move |(i, v)| vec![num(p.delta), i.to_string(), num(*v)])
                })
                .collect();
            Artifacts {
                header: vec!["delta", "field", "ratio"],
                rows,
                pass: r.pass,
                check: "uniformity of the embedding constant",
                report: serde_json::to_value(&r)?,
            }
        }
        "theorem1-scaling" => {
            let r = theorem1_scaling(&curve, &cfg.deltas, cfg.slack, cfg.probes, cfg.seed)
                .map_err(&err)?;
            let rows = r
                .points
                .iter()
                .flat_map(|p| {
                    p.witnesses.iter().map(move |w| {
                        vec![
                            num(p.delta),
                            w.label.clone(),
                            num(w.maximal_norm),
                            num(w.witness_norm),
                            num(w.ratio),
                        ]
                    })
                })
                .collect();
            Artifacts {
                header: vec!["delta", "witness", "maximal_norm", "witness_norm", "ratio"],
                rows,
                pass: r.fit.pass,
                check: "scaling exponent",
                report: serde_json::to_value(&r)?,
            }
        }
        "tube-volume" => {
            let r = tube_volume_experiment(
                &curve,
                &default_pairs(),
                cfg.samples,
                cfg.seed,
                VOLUME_FACTOR,
            )
            .map_err(&err)?;
            let rows = r
                .pairs
                .iter()
                .map(|p| {
                    vec![
                        num(p.delta),
                        num(p.r),
                        num(p.s),
                        num(p.gap),
                        num(p.measured),
                        num(p.std_error),
                        num(p.predicted),
                        num(p.ratio),
                        p.within.to_string(),
                    ]
                })
                .collect();
            Artifacts {
                header: vec![
                    "delta",
                    "r",
                    "s",
                    "gap",
                    "measured",
                    "std_error",
                    "predicted",
                    "ratio",
                    "within",
                ],
                rows,
                pass: r.pass,
                check: "volume law",
                report: serde_json::to_value(&r)?,
            }
        }
        other => {
            return Err(RunError::Experiment {
                experiment: other.into(),
                source: nikodym::Error::Unknown {
                    kind: "experiment",
                    name: other.into(),
                },
            })
        }
    };
    Ok(art)
}

pub fn csv_bytes(art: &Artifacts) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&art.header)?;
    for row in &art.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| RunError::Io(e.into_error()))
}

/// First free directory among `<stem>`, `<stem>-1`, `<stem>-2`, ...
fn fresh_dir(root: &Path, stem: &str) -> PathBuf {
    let mut dir = root.join(stem);
    let mut k = 0;
    while dir.exists() {
        k += 1;
        dir = root.join(format!("{stem}-{k}"));
    }
    dir
}

/// Runs on a pool of `exec.workers` threads and writes the artifacts.
pub fn run(cfg: &RunConfig, exec: &Execution) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = exec.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    let workers = pool.current_num_threads();
    let art = pool.install(|| execute(cfg))?;
    let hash = config_hash(cfg);
    let report = json!({
        "schema": SCHEMA,
        "experiment": cfg.experiment,
        "config_hash": hash,
        "pass": art.pass,
        "report": art.report,
    });
    let report = serde_json::to_vec_pretty(&report)?;
    let data = csv_bytes(&art)?;

    std::fs::create_dir_all(&exec.output_dir)?;
    let dir = fresh_dir(
        &exec.output_dir,
        &format!("{}-{}", cfg.experiment, &hash[..16]),
    );
    std::fs::create_dir(&dir)?;
    std::fs::write(dir.join("report.json"), report)?;
    std::fs::write(dir.join("data.csv"), data)?;
    let manifest = Manifest {
        schema: SCHEMA,
        experiment: &cfg.experiment,
        config: cfg,
        config_hash: &hash,
        library_version: nikodym::VERSION,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        workers,
        files: ["report.json", "data.csv", "manifest.json"],
        pass: art.pass,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(RunOutcome {
        dir,
        hash,
        pass: art.pass,
        check: art.check,
    })
}
