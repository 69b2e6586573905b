use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use snmf::dataset::{load_csv, save_csv, Dataset};
use snmf::error::{Result, SnmfError};
use snmf::evaluation::{auc, grid_search_cv, stratified_split};
use snmf::factorization::{fit_nmf, transform_nnls, ConvergenceConfig, PgdConfig};
use snmf::gridspec::parse_grid;
use snmf::model::{load_model, save_model, FitMode, ModelFile, MODEL_SCHEMA};
use snmf::numerics::{NonNegMatrix, RngSeed};
use snmf::report::RunReport;
use snmf::repro::{run_table1, ReproConfig};
use snmf::simulation::{gen_simulation, SimConfig};
use snmf::supervised::{fit_snmf, predict_scores, SnmfHyper, TraceEntry};

#[derive(Parser)]
#[command(name = "snmf", version, about = "Supervised NMF toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Nmf,
    Snmf,
}

#[derive(Subcommand)]
enum Commands {
    /// Generate the synthetic two-Gaussian dataset and write stratified
    /// train/test CSVs.
    Simulate {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 250)]
        n_per_class: usize,
        #[arg(long, default_value_t = 5)]
        latent_dim: usize,
        #[arg(long, default_value_t = 10)]
        ambient_dim: usize,
    },
    /// Fit an NMF or SNMF model on a training CSV.
    Fit {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Disable the α/m, β/r, γ/(n·r) rescaling.
        #[arg(long)]
        no_scale_by_shape: bool,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Transform a test CSV with a saved model and report the test AUC.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include per-sample scores in the report.
        #[arg(long)]
        scores: bool,
    },
    /// Cross-validated grid search over (alpha, beta, gamma, rank).
    Cv {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Run the full simulation comparison (NMF vs SNMF across noise levels).
    ReproSim {
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {}: {}", err.category(), err);
        std::process::exit(1);
    }
}

fn log_level() -> u8 {
    match std::env::var("SNMF_LOG").as_deref() {
        Ok("debug") => 2,
        Ok("info") => 1,
        _ => 0,
    }
}

fn info(msg: &str) {
    if log_level() >= 1 {
        eprintln!("[snmf] {msg}");
    }
}

fn debug_trace(trace: &[TraceEntry]) {
    if log_level() >= 2 {
        for (i, e) in trace.iter().enumerate() {
            eprintln!(
                "[snmf] iter {i}: total={} l_f={} l_lr={} l_r={}",
                e.total, e.l_f, e.l_lr, e.l_r
            );
        }
    }
}

fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Commands::Simulate {
            noise,
            seed,
            out,
            n_per_class,
            latent_dim,
            ambient_dim,
        } => {
            let cfg = SimConfig {
                n_per_class,
                latent_dim,
                ambient_dim,
                mu1: default_mu1(latent_dim),
                mu2: default_mu2(latent_dim),
                cov_diag: vec![1.0; latent_dim],
                noise_level: noise,
                seed: RngSeed(seed),
            };
            let (x, y, _) = gen_simulation(&cfg)?;
            let split = stratified_split(&y, 0.5, RngSeed(seed))?;
            std::fs::create_dir_all(&out)?;
            for (name, idx) in [
                ("train.csv", &split.train_indices),
                ("test.csv", &split.test_indices),
            ] {
                let features = NonNegMatrix::new(snmf::evaluation::take_rows(x.as_dense(), idx))?;
                let labels: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
                save_csv(&out.join(name), &Dataset::new(features, Some(labels))?)?;
            }
            info(&format!("wrote train/test CSVs to {}", out.display()));
            let report = RunReport::new(
                "simulate",
                serde_json::to_value(&cfg)?,
                seed,
                json!({
                    "rows": x.rows(),
                    "features": x.cols(),
                    "train_rows": split.train_indices.len(),
                    "test_rows": split.test_indices.len(),
                }),
                start.elapsed().as_secs_f64(),
            );
            report.save(&out.join("report.json"))
        }
        Commands::Fit {
            mode,
            rank,
            alpha,
            beta,
            gamma,
            no_scale_by_shape,
            train,
            model_out,
            seed,
            max_iters,
            tol,
        } => {
            let ds = load_csv(&train)?;
            let pgd = PgdConfig::default();
            let conv = ConvergenceConfig {
                max_outer_iters: max_iters,
                rel_tol: tol,
            };
            let (n, m) = (ds.features.rows(), ds.features.cols());
            let (model_file, trace_totals, effective, train_auc) = match mode {
                ModeArg::Nmf => {
                    let fit = fit_nmf(&ds.features, rank, &pgd, &conv, RngSeed(seed))?;
                    let trace: Vec<TraceEntry> = fit
                        .trace
                        .iter()
                        .map(|&t| TraceEntry {
                            l_f: t,
                            l_lr: 0.0,
                            l_r: 0.0,
                            total: t,
                        })
                        .collect();
                    let totals: Vec<f64> = fit.trace.clone();
                    let mf = ModelFile {
                        schema: MODEL_SCHEMA.into(),
                        mode: FitMode::Nmf,
                        u: fit.factors.u().as_dense().clone(),
                        v: fit.factors.v().as_dense().clone(),
                        logreg: None,
                        hyper: None,
                        trace,
                    };
                    (mf, totals, (0.0, 0.0, 0.0), None)
                }
                ModeArg::Snmf => {
                    let labels = ds.require_labels(&train)?;
                    let hyper = SnmfHyper {
                        alpha,
                        beta,
                        gamma,
                        rank,
                        scale_by_shape: !no_scale_by_shape,
                    };
                    let fit = fit_snmf(&ds.features, labels, &hyper, &pgd, &conv, RngSeed(seed))?;
                    let totals: Vec<f64> = fit.trace.iter().map(|e| e.total).collect();
                    let effective = hyper.effective(n, m);
                    // training AUC through the same transform `evaluate`
                    // applies, so evaluating the training file reproduces it
                    let u_train =
                        transform_nnls(&ds.features, fit.factors.v(), &pgd, &eval_conv())?;
                    let train_auc =
                        auc(&predict_scores(u_train.as_dense(), &fit.logreg)?, labels)?;
                    let mf = ModelFile {
                        schema: MODEL_SCHEMA.into(),
                        mode: FitMode::Snmf,
                        u: fit.factors.u().as_dense().clone(),
                        v: fit.factors.v().as_dense().clone(),
                        logreg: Some(fit.logreg),
                        hyper: Some(hyper),
                        trace: fit.trace,
                    };
                    (mf, totals, effective, Some(train_auc))
                }
            };
            debug_trace(&model_file.trace);
            save_model(&model_out, &model_file)?;
            let report = RunReport::new(
                "fit",
                json!({
                    "mode": model_file.mode.to_string(),
                    "rank": rank,
                    "raw": {"alpha": alpha, "beta": beta, "gamma": gamma},
                    "effective": {
                        "alpha": effective.0, "beta": effective.1, "gamma": effective.2
                    },
                    "scale_by_shape": !no_scale_by_shape,
                    "max_iters": max_iters,
                    "tol": tol,
                    "train": train.display().to_string(),
                }),
                seed,
                json!({
                    "iterations": trace_totals.len() - 1,
                    "objective_trace": trace_totals,
                    "final_objective": trace_totals.last(),
                    "train_auc": train_auc,
                }),
                start.elapsed().as_secs_f64(),
            );
            report.save(&report_path(&model_out))
        }
        Commands::Evaluate {
            model,
            test,
            out,
            scores,
        } => {
            let mf = load_model(&model)?;
            let ds = load_csv(&test)?;
            if ds.features.cols() != mf.v.cols() {
                return Err(SnmfError::DimensionMismatch {
                    expected: mf.v.cols(),
                    got: ds.features.cols(),
                });
            }
            let factors = mf.factors()?;
            let pgd = PgdConfig::default();
            let u = transform_nnls(&ds.features, factors.v(), &pgd, &eval_conv())?;
            let logreg = mf.logreg.clone().ok_or_else(|| {
                SnmfError::InvalidConfig(
                    "model has no classifier; evaluate requires an snmf model".into(),
                )
            })?;
            let s = predict_scores(u.as_dense(), &logreg)?;
            let labels = ds.require_labels(&test)?;
            let test_auc = auc(&s, labels)?;
            info(&format!("test AUC {test_auc}"));
            let mut metrics = json!({"auc": test_auc, "samples": s.len()});
            if scores {
                metrics["scores"] = json!(s);
            }
            let report = RunReport::new(
                "evaluate",
                json!({
                    "model": model.display().to_string(),
                    "test": test.display().to_string(),
                }),
                0,
                metrics,
                start.elapsed().as_secs_f64(),
            );
            let out = out.unwrap_or_else(|| report_path(&test));
            report.save(&out)
        }
        Commands::Cv {
            train,
            grid,
            folds,
            seed,
            rank,
            jobs,
            out,
            max_iters,
            tol,
        } => {
            configure_jobs(jobs);
            let ds = load_csv(&train)?;
            let labels = ds.require_labels(&train)?;
            let grid = parse_grid(&grid, rank, folds)?;
            let pgd = PgdConfig::default();
            let conv = ConvergenceConfig {
                max_outer_iters: max_iters,
                rel_tol: tol,
            };
            let (best, table) =
                grid_search_cv(&ds.features, labels, &grid, true, &pgd, &conv, RngSeed(seed))?;
            info(&format!(
                "selected alpha={} beta={} gamma={} rank={}",
                best.alpha, best.beta, best.gamma, best.rank
            ));
            let report = RunReport::new(
                "cv",
                json!({
                    "train": train.display().to_string(),
                    "grid": serde_json::to_value(&grid)?,
                    "folds": folds,
                }),
                seed,
                json!({
                    "selected": serde_json::to_value(&best)?,
                    "table": serde_json::to_value(&table)?,
                }),
                start.elapsed().as_secs_f64(),
            );
            let out = out.unwrap_or_else(|| report_path(&train));
            report.save(&out)
        }
        Commands::ReproSim {
            seeds,
            base_seed,
            out,
            jobs,
        } => {
            configure_jobs(jobs);
            let cfg = ReproConfig {
                n_seeds: seeds,
                base_seed,
                ..ReproConfig::default()
            };
            let table = run_table1(&cfg)?;
            std::fs::create_dir_all(&out)?;
            for row in &table.rows {
                info(&format!(
                    "eta={}: NMF {:.2} SNMF {:.2}",
                    row.noise_level,
                    100.0 * row.nmf_mean_auc,
                    100.0 * row.snmf_mean_auc
                ));
            }
            let report = RunReport::new(
                "repro-sim",
                serde_json::to_value(&cfg)?,
                base_seed,
                serde_json::to_value(&table)?,
                start.elapsed().as_secs_f64(),
            );
            report.save(&out.join("table1.json"))
        }
    }
}

/// Transform settings shared by `fit`'s training-AUC report field and
/// `evaluate`, so the two produce identical scores on the same file.
fn eval_conv() -> ConvergenceConfig {
    ConvergenceConfig {
        max_outer_iters: 1_000,
        rel_tol: 1e-10,
    }
}

fn report_path(base: &Path) -> PathBuf {
    let mut name = base
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("run")
        .to_string();
    name.push_str(".report.json");
    base.with_file_name(name)
}

fn default_mu1(latent_dim: usize) -> Vec<f64> {
    vec![1.0; latent_dim]
}

fn default_mu2(latent_dim: usize) -> Vec<f64> {
    let mut mu = vec![1.0; latent_dim];
    for v in mu.iter_mut().take(2) {
        *v = 3.0;
    }
    mu
}
