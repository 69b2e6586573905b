//! End-to-end simulation benchmark: for each noise level, generate the
//! synthetic dataset, split half/half stratified, run the unsupervised
//! pipeline (NMF + separately trained logistic regression) and the
//! supervised pipeline (cross-validated SNMF), and compare test AUCs
//! across seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evaluation::{
    auc, grid_search_cv, permutation_test, take_rows, stratified_split, CvGrid,
};
use crate::factorization::{fit_nmf, transform_nnls, ConvergenceConfig, PgdConfig};
use crate::numerics::{NonNegMatrix, RngSeed};
use crate::simulation::{gen_simulation, SimConfig};
use crate::supervised::{fit_snmf, logreg_fit, predict_scores};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReproConfig {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub noise_levels: Vec<f64>,
    /// Value grid shared by α, β, γ in the CV search.
    pub grid_values: Vec<f64>,
    pub rank: usize,
    pub folds: usize,
    /// Ridge strength for the logistic regression trained on top of the
    /// unsupervised coefficients.
    pub nmf_logreg_beta: f64,
    pub n_perm: usize,
    pub pgd: PgdConfig,
    pub conv: ConvergenceConfig,
    /// Cheaper termination for the many fits inside the grid search; the
    /// final refit still uses `conv`.
    pub cv_conv: ConvergenceConfig,
}

impl Default for ReproConfig {
    fn default() -> Self {
        Self {
            n_seeds: 20,
            base_seed: 0,
            noise_levels: vec![0.0, 0.2, 0.5],
            grid_values: vec![0.0, 0.001, 0.01, 0.1],
            rank: 2,
            folds: 5,
            nmf_logreg_beta: 0.01,
            n_perm: 199,
            pgd: PgdConfig::default(),
            conv: ConvergenceConfig {
                max_outer_iters: 300,
                rel_tol: 1e-7,
            },
            cv_conv: ConvergenceConfig {
                max_outer_iters: 150,
                rel_tol: 1e-6,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub nmf_auc: f64,
    pub snmf_auc: f64,
    pub p_value: f64,
    pub selected_alpha: f64,
    pub selected_beta: f64,
    pub selected_gamma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EtaRow {
    pub noise_level: f64,
    pub nmf_mean_auc: f64,
    pub nmf_sd_auc: f64,
    pub snmf_mean_auc: f64,
    pub snmf_sd_auc: f64,
    pub mean_p_value: f64,
    pub per_seed: Vec<SeedOutcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table1Report {
    pub rows: Vec<EtaRow>,
}

pub fn run_table1(cfg: &ReproConfig) -> Result<Table1Report> {
    let mut rows = Vec::with_capacity(cfg.noise_levels.len());
    for (eta_idx, &eta) in cfg.noise_levels.iter().enumerate() {
        let outcomes: Result<Vec<SeedOutcome>> = (0..cfg.n_seeds)
            .into_par_iter()
            .map(|s| {
                let run_seed =
                    RngSeed(cfg.base_seed).child((eta_idx * 100_003 + s + 1) as u64);
                run_one(cfg, eta, run_seed)
            })
            .collect();
        let outcomes = outcomes?;
        let mean = |f: &dyn Fn(&SeedOutcome) -> f64| {
            outcomes.iter().map(|o| f(o)).sum::<f64>() / outcomes.len() as f64
        };
        let sd = |f: &dyn Fn(&SeedOutcome) -> f64, mu: f64| {
            if outcomes.len() < 2 {
                return 0.0;
            }
            let ss: f64 = outcomes.iter().map(|o| (f(o) - mu).powi(2)).sum();
            (ss / (outcomes.len() - 1) as f64).sqrt()
        };
        let nmf_mean = mean(&|o| o.nmf_auc);
        let snmf_mean = mean(&|o| o.snmf_auc);
        rows.push(EtaRow {
            noise_level: eta,
            nmf_mean_auc: nmf_mean,
            nmf_sd_auc: sd(&|o| o.nmf_auc, nmf_mean),
            snmf_mean_auc: snmf_mean,
            snmf_sd_auc: sd(&|o| o.snmf_auc, snmf_mean),
            mean_p_value: mean(&|o| o.p_value),
            per_seed: outcomes,
        });
    }
    Ok(Table1Report { rows })
}

fn run_one(cfg: &ReproConfig, eta: f64, seed: RngSeed) -> Result<SeedOutcome> {
    let sim = SimConfig {
        noise_level: eta,
        seed,
        ..SimConfig::default()
    };
    let (x, y, _) = gen_simulation(&sim)?;
    let split = stratified_split(&y, 0.5, seed)?;
    let x_train = NonNegMatrix::new(take_rows(x.as_dense(), &split.train_indices))?;
    let y_train: Vec<u8> = split.train_indices.iter().map(|&i| y[i]).collect();
    let x_test = NonNegMatrix::new(take_rows(x.as_dense(), &split.test_indices))?;
    let y_test: Vec<u8> = split.test_indices.iter().map(|&i| y[i]).collect();

    // unsupervised pipeline: NMF bases, then a fresh logistic regression on
    // the learned training coefficients
    let nmf = fit_nmf(&x_train, cfg.rank, &cfg.pgd, &cfg.conv, seed)?;
    let lr = logreg_fit(
        nmf.factors.u().as_dense(),
        &y_train,
        cfg.nmf_logreg_beta,
        &ConvergenceConfig {
            max_outer_iters: 5_000,
            rel_tol: 1e-8,
        },
        seed,
    )?;
    let u_test = transform_nnls(&x_test, nmf.factors.v(), &cfg.pgd, &cfg.conv)?;
    let nmf_scores = predict_scores(u_test.as_dense(), &lr)?;
    let nmf_auc = auc(&nmf_scores, &y_test)?;

    // supervised pipeline: CV-selected hyperparameters, refit on the full
    // training half, score the test half with the jointly fitted (w, b)
    let grid = CvGrid {
        alphas: cfg.grid_values.clone(),
        betas: cfg.grid_values.clone(),
        gammas: cfg.grid_values.clone(),
        ranks: vec![cfg.rank],
        folds: cfg.folds,
    };
    let (best, _table) =
        grid_search_cv(&x_train, &y_train, &grid, true, &cfg.pgd, &cfg.cv_conv, seed)?;
    let model = fit_snmf(&x_train, &y_train, &best, &cfg.pgd, &cfg.conv, seed)?;
    // same evaluation protocol as the unsupervised arm: a fresh logistic
    // regression on the learned training representation, so the comparison
    // isolates the quality of the representation itself
    let snmf_lr = logreg_fit(
        model.factors.u().as_dense(),
        &y_train,
        cfg.nmf_logreg_beta,
        &ConvergenceConfig {
            max_outer_iters: 5_000,
            rel_tol: 1e-8,
        },
        seed,
    )?;
    let u_test = transform_nnls(&x_test, model.factors.v(), &cfg.pgd, &cfg.conv)?;
    let snmf_scores = predict_scores(u_test.as_dense(), &snmf_lr)?;
    let snmf_auc = auc(&snmf_scores, &y_test)?;

    let p_value = permutation_test(&snmf_scores, &nmf_scores, &y_test, cfg.n_perm, seed)?;
    Ok(SeedOutcome {
        seed: seed.0,
        nmf_auc,
        snmf_auc,
        p_value,
        selected_alpha: best.alpha,
        selected_beta: best.beta,
        selected_gamma: best.gamma,
    })
}
