//! Metrics and protocol: AUC, stratified splitting, k-fold cross-validation
//! with grid search over (α, β, γ, r), and a paired permutation test for AUC
//! differences.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnmfError};
use crate::factorization::{transform_nnls, ConvergenceConfig, PgdConfig};
use crate::numerics::{DenseMatrix, NonNegMatrix, RngSeed};
use crate::supervised::{fit_snmf, predict_scores, SnmfHyper};

/// Mann–Whitney AUC: (#concordant pairs + ½·#tied pairs) / (#pos·#neg),
/// computed by sort-and-rank.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(SnmfError::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(SnmfError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // average ranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Train/test assignment produced by [`stratified_split`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub ratio: f64,
    pub stratified: bool,
    pub seed: RngSeed,
}

/// Stratified shuffle split: per class, round(ratio · class size) samples go
/// to the training side.
pub fn stratified_split(labels: &[u8], ratio: f64, seed: RngSeed) -> Result<SplitPlan> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(SnmfError::InvalidConfig(format!(
            "split ratio must lie in (0,1), got {ratio}"
        )));
    }
    if labels.len() < 2 {
        return Err(SnmfError::InvalidConfig(
            "need at least 2 samples to split".into(),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut seen = 0usize;
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let mut rng = seed.stream(class as u64);
        idx.shuffle(&mut rng);
        // floor or ceil of ratio·len, whichever keeps the running train count
        // closest to ratio·seen; ties break toward ceil
        seen += idx.len();
        let target = seen as f64 * ratio;
        let lo = (idx.len() as f64 * ratio).floor() as usize;
        let hi = (idx.len() as f64 * ratio).ceil() as usize;
        let n_train = if ((train.len() + hi) as f64 - target).abs()
            <= ((train.len() + lo) as f64 - target).abs()
        {
            hi
        } else {
            lo
        };
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(SnmfError::EmptyClassAfterSplit);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        ratio,
        stratified: true,
        seed,
    })
}

/// Stratified k-fold validation-fold index sets; folds partition the samples
/// with per-fold class proportions within one sample of the global ones.
pub fn kfold_indices(labels: &[u8], k: usize, seed: RngSeed) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(SnmfError::InvalidConfig("k must be ≥ 2".into()));
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < k {
            return Err(SnmfError::TooFewSamples {
                class,
                needed: k,
                got: idx.len(),
            });
        }
        let mut rng = seed.stream(16 + class as u64);
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            folds[pos % k].push(i);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Hyperparameter grid for cross-validated selection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub ranks: Vec<usize>,
    pub folds: usize,
}

impl CvGrid {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty()
            || self.betas.is_empty()
            || self.gammas.is_empty()
            || self.ranks.is_empty()
        {
            return Err(SnmfError::InvalidConfig("grid lists must be nonempty".into()));
        }
        if self
            .alphas
            .iter()
            .chain(&self.betas)
            .chain(&self.gammas)
            .any(|&v| v < 0.0)
        {
            return Err(SnmfError::InvalidConfig("grid values must be ≥ 0".into()));
        }
        if self.folds < 2 {
            return Err(SnmfError::InvalidConfig("folds must be ≥ 2".into()));
        }
        Ok(())
    }

    /// Cells in lexicographic (α, β, γ, r) order.
    pub fn cells(&self) -> Vec<(f64, f64, f64, usize)> {
        let mut out = Vec::new();
        for &a in &self.alphas {
            for &b in &self.betas {
                for &g in &self.gammas {
                    for &r in &self.ranks {
                        out.push((a, b, g, r));
                    }
                }
            }
        }
        out
    }
}

/// One evaluated grid cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvCell {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rank: usize,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
}

/// Cross-validated grid search. Per cell and fold: fit the joint model on
/// the training part, map the held-out part through nonnegative least
/// squares against the learned bases, score with the fitted (w, b), and
/// average the fold AUCs. Ties break toward smaller (α, β, γ, r).
#[allow(clippy::too_many_arguments)]
pub fn grid_search_cv(
    x: &NonNegMatrix,
    y: &[u8],
    grid: &CvGrid,
    scale_by_shape: bool,
    pgd: &PgdConfig,
    conv: &ConvergenceConfig,
    seed: RngSeed,
) -> Result<(SnmfHyper, Vec<CvCell>)> {
    grid.validate()?;
    let folds = kfold_indices(y, grid.folds, seed)?;
    let splits: Vec<(Vec<usize>, &Vec<usize>)> = folds
        .iter()
        .map(|val| {
            let val_set: std::collections::HashSet<usize> = val.iter().copied().collect();
            let train: Vec<usize> = (0..y.len()).filter(|i| !val_set.contains(i)).collect();
            (train, val)
        })
        .collect();

    let cells = grid.cells();
    let table: Result<Vec<CvCell>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(alpha, beta, gamma, rank))| {
            let hyper = SnmfHyper {
                alpha,
                beta,
                gamma,
                rank,
                scale_by_shape,
            };
            let mut fold_aucs = Vec::with_capacity(splits.len());
            for (fold_idx, (train, val)) in splits.iter().enumerate() {
                let x_train = take_rows(x.as_dense(), train);
                let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
                let x_val = take_rows(x.as_dense(), val);
                let y_val: Vec<u8> = val.iter().map(|&i| y[i]).collect();
                let fit_seed = seed.child((cell_idx * splits.len() + fold_idx) as u64);
                let model = fit_snmf(
                    &NonNegMatrix::new(x_train)?,
                    &y_train,
                    &hyper,
                    pgd,
                    conv,
                    fit_seed,
                )?;
                let u_val = transform_nnls(
                    &NonNegMatrix::new(x_val)?,
                    model.factors.v(),
                    pgd,
                    conv,
                )?;
                let scores = predict_scores(u_val.as_dense(), &model.logreg)?;
                fold_aucs.push(auc(&scores, &y_val)?);
            }
            let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
            Ok(CvCell {
                alpha,
                beta,
                gamma,
                rank,
                fold_aucs,
                mean_auc,
            })
        })
        .collect();
    let table = table?;
    // first strict maximum in lexicographic cell order wins ties
    let best = table
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.mean_auc
                .partial_cmp(&b.mean_auc)
                .unwrap()
                .then(ib.cmp(ia))
        })
        .map(|(_, c)| c)
        .expect("grid validated nonempty");
    let hyper = SnmfHyper {
        alpha: best.alpha,
        beta: best.beta,
        gamma: best.gamma,
        rank: best.rank,
        scale_by_shape,
    };
    Ok((hyper, table))
}

pub fn take_rows(m: &DenseMatrix, indices: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(indices.len(), m.cols(), |i, j| m.get(indices[i], j))
}

/// Paired permutation test on the AUC difference of two scorers.
///
/// Statistic T = auc(a) − auc(b); the null exchanges the per-sample score
/// assignment with probability ½, and p uses the add-one estimator so it
/// never reaches 0.
pub fn permutation_test(
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[u8],
    n_perm: usize,
    seed: RngSeed,
) -> Result<f64> {
    if scores_a.len() != scores_b.len() || scores_a.len() != labels.len() {
        return Err(SnmfError::ShapeMismatch(format!(
            "{} vs {} scores vs {} labels",
            scores_a.len(),
            scores_b.len(),
            labels.len()
        )));
    }
    if n_perm < 1 {
        return Err(SnmfError::InvalidConfig("n_perm must be ≥ 1".into()));
    }
    let t_obs = (auc(scores_a, labels)? - auc(scores_b, labels)?).abs();
    let exceed: usize = (0..n_perm)
        .into_par_iter()
        .map(|p| {
            // one independent stream per permutation keeps the count
            // independent of batching
            let mut rng = seed.stream(1_000 + p as u64);
            let mut a = Vec::with_capacity(scores_a.len());
            let mut b = Vec::with_capacity(scores_b.len());
            for i in 0..scores_a.len() {
                if rng.gen::<bool>() {
                    a.push(scores_b[i]);
                    b.push(scores_a[i]);
                } else {
                    a.push(scores_a[i]);
                    b.push(scores_b[i]);
                }
            }
            let t = (auc(&a, labels).unwrap() - auc(&b, labels).unwrap()).abs();
            (t >= t_obs) as usize
        })
        .sum();
    Ok((1 + exceed) as f64 / (1 + n_perm) as f64)
}
