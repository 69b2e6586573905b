//! The joint SNMF model: ½‖X−UV‖² plus an α-weighted logistic loss on the
//! coefficients U and ridge terms on U, w, b, minimized by cyclic
//! projected-gradient updates over the blocks U, V, w, b.
//!
//! All exp/ln expressions go through stable softplus/sigmoid forms; the
//! margin Uw + b can exceed ±700 during line search and the naive forms
//! overflow. The D matrix of the matrix-form gradients (entries 1 + exp(·))
//! is never materialized; its reciprocals are sigmoids.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnmfError};
use crate::factorization::{
    nndsvd_init, pgd_step, pgd_step_cached, recon_grad_u, recon_grad_v, ConvergenceConfig, FactorPair, PgdConfig,
};
use crate::numerics::{dot, frobenius_sq, recon_half_sq, DenseMatrix, NonNegMatrix, RngSeed};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + exp(z)) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary labels kept in both encodings: {0,1} as read from files, ±1 as the
/// loss and gradients consume them. Under the ±1 encoding a y=0 sample would
/// contribute nothing, so 0 maps to −1 and 1 to +1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedLabels {
    raw: Vec<u8>,
    signed: Vec<f64>,
}

impl SignedLabels {
    pub fn from_raw(raw: &[u8]) -> Result<Self> {
        for &v in raw {
            if v > 1 {
                return Err(SnmfError::InvalidConfig(format!(
                    "labels must be 0 or 1, got {v}"
                )));
            }
        }
        let signed = raw.iter().map(|&v| if v == 0 { -1.0 } else { 1.0 }).collect();
        Ok(Self {
            raw: raw.to_vec(),
            signed,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    pub fn signed(&self) -> &[f64] {
        &self.signed
    }

    pub fn has_both_classes(&self) -> bool {
        self.raw.iter().any(|&v| v == 0) && self.raw.iter().any(|&v| v == 1)
    }
}

/// Logistic-regression parameters: weights over the r latent coefficients
/// plus a bias. Unconstrained in sign; the w and b updates carry no
/// projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LogRegModel {
    pub fn zeros(r: usize) -> Self {
        Self { w: vec![0.0; r], b: 0.0 }
    }
}

/// SNMF hyperparameters. With `scale_by_shape` set (the default), the raw
/// values are rescaled to α/m, β/r, γ/(n·r) before use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnmfHyper {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rank: usize,
    pub scale_by_shape: bool,
}

impl SnmfHyper {
    pub fn new(alpha: f64, beta: f64, gamma: f64, rank: usize) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            rank,
            scale_by_shape: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(SnmfError::InvalidConfig(
                "alpha, beta, gamma must be nonnegative".into(),
            ));
        }
        if self.rank < 1 {
            return Err(SnmfError::InvalidConfig("rank must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Effective (α, β, γ) for an n×m data matrix.
    pub fn effective(&self, n: usize, m: usize) -> (f64, f64, f64) {
        if self.scale_by_shape {
            (
                self.alpha / m as f64,
                self.beta / self.rank as f64,
                self.gamma / (n as f64 * self.rank as f64),
            )
        } else {
            (self.alpha, self.beta, self.gamma)
        }
    }
}

/// One outer-iteration record of the objective split into its three terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub l_f: f64,
    pub l_lr: f64,
    pub l_r: f64,
    pub total: f64,
}

/// The fitted joint model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnmfModel {
    pub factors: FactorPair,
    pub logreg: LogRegModel,
    pub hyper: SnmfHyper,
    pub trace: Vec<TraceEntry>,
    pub stalls: usize,
}

/// The α-weighted log-loss Σᵢ α·ln(1+exp(−yᵢ(uᵢ·w+b))), optionally plus the
/// ½β(wᵀw+b²) ridge so the assembled objective counts each term exactly once.
pub fn logistic_loss(
    u: &DenseMatrix,
    y: &SignedLabels,
    model: &LogRegModel,
    alpha: f64,
    beta: f64,
    include_ridge: bool,
) -> Result<f64> {
    if u.rows() != y.len() {
        return Err(SnmfError::ShapeMismatch(format!(
            "U has {} rows but y has {} entries",
            u.rows(),
            y.len()
        )));
    }
    if u.cols() != model.w.len() {
        return Err(SnmfError::ShapeMismatch(format!(
            "U has {} columns but w has {} entries",
            u.cols(),
            model.w.len()
        )));
    }
    let mut loss = 0.0;
    if alpha != 0.0 {
        for i in 0..u.rows() {
            let margin = y.signed()[i] * (dot(u.row(i), &model.w) + model.b);
            loss += softplus(-margin);
        }
        loss *= alpha;
    }
    if include_ridge {
        loss += 0.5 * beta * (dot(&model.w, &model.w) + model.b * model.b);
    }
    Ok(loss)
}

/// Objective value split into L_f + L_lr + L_r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub l_f: f64,
    pub l_lr: f64,
    pub l_r: f64,
}

/// Full SNMF objective. `hyper` supplies raw values; scaling (when enabled)
/// uses the shape of `x`.
pub fn snmf_objective(
    x: &NonNegMatrix,
    y: &SignedLabels,
    factors: &FactorPair,
    model: &LogRegModel,
    hyper: &SnmfHyper,
) -> Result<Objective> {
    let (alpha, beta, gamma) = hyper.effective(x.rows(), x.cols());
    objective_with(
        x.as_dense(),
        y,
        factors.u().as_dense(),
        factors.v().as_dense(),
        model,
        alpha,
        beta,
        gamma,
    )
}

#[allow(clippy::too_many_arguments)]
fn objective_with(
    x: &DenseMatrix,
    y: &SignedLabels,
    u: &DenseMatrix,
    v: &DenseMatrix,
    model: &LogRegModel,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<Objective> {
    if u.rows() != x.rows() || v.cols() != x.cols() || u.cols() != v.rows() {
        return Err(SnmfError::ShapeMismatch(format!(
            "X {:?} vs U {:?} vs V {:?}",
            x.shape(),
            u.shape(),
            v.shape()
        )));
    }
    let l_f = recon_half_sq(x, u, v);
    let l_lr = logistic_loss(u, y, model, alpha, beta, false)?;
    let mut l_r = 0.0;
    if beta != 0.0 {
        l_r += 0.5 * beta * (dot(&model.w, &model.w) + model.b * model.b);
    }
    if gamma != 0.0 {
        l_r += 0.5 * gamma * frobenius_sq(u);
    }
    Ok(Objective {
        total: l_f + l_lr + l_r,
        l_f,
        l_lr,
        l_r,
    })
}

/// Per-sample σ(−yᵢ(uᵢ·w+b)) — the reciprocal of the Dᵢ column entries in
/// the matrix-form gradients.
fn inv_margin_factors(u: &DenseMatrix, y: &SignedLabels, model: &LogRegModel) -> Vec<f64> {
    (0..u.rows())
        .map(|i| sigmoid(-y.signed()[i] * (dot(u.row(i), &model.w) + model.b)))
        .collect()
}

/// ∇_U of the full objective: (UV−X)Vᵀ + γU − α(ywᵀ)⊘D.
pub fn grad_u_total(
    x: &NonNegMatrix,
    y: &SignedLabels,
    factors: &FactorPair,
    model: &LogRegModel,
    hyper: &SnmfHyper,
) -> Result<DenseMatrix> {
    let (alpha, _beta, gamma) = hyper.effective(x.rows(), x.cols());
    grad_u_with(x.as_dense(), y, factors.u().as_dense(), factors.v().as_dense(), model, alpha, gamma)
}

fn grad_u_with(
    x: &DenseMatrix,
    y: &SignedLabels,
    u: &DenseMatrix,
    v: &DenseMatrix,
    model: &LogRegModel,
    alpha: f64,
    gamma: f64,
) -> Result<DenseMatrix> {
    if u.rows() != x.rows() || v.cols() != x.cols() || u.rows() != y.len() {
        return Err(SnmfError::ShapeMismatch("grad_U operands disagree".into()));
    }
    let mut g = recon_grad_u(x, u, v);
    if gamma != 0.0 {
        for (gi, &ui) in g.as_mut_slice().iter_mut().zip(u.as_slice()) {
            *gi += gamma * ui;
        }
    }
    if alpha != 0.0 {
        let s = inv_margin_factors(u, y, model);
        let r = u.cols();
        for i in 0..u.rows() {
            let c = alpha * y.signed()[i] * s[i];
            for j in 0..r {
                let gij = g.get(i, j) - c * model.w[j];
                g.set(i, j, gij);
            }
        }
    }
    Ok(g)
}

/// ∇_V = Uᵀ(UV−X); the logistic and ridge terms do not involve V.
pub fn grad_v(x: &NonNegMatrix, factors: &FactorPair) -> Result<DenseMatrix> {
    let (u, v) = (factors.u().as_dense(), factors.v().as_dense());
    if u.rows() != x.rows() || v.cols() != x.cols() {
        return Err(SnmfError::ShapeMismatch("grad_V operands disagree".into()));
    }
    Ok(recon_grad_v(x.as_dense(), u, v))
}

/// ∇_w = −α(U⊙Y⊘D)ᵀe_n + βw, computed in stable scalar form.
pub fn grad_w(
    u: &DenseMatrix,
    y: &SignedLabels,
    model: &LogRegModel,
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    if u.rows() != y.len() || u.cols() != model.w.len() {
        return Err(SnmfError::ShapeMismatch("grad_w operands disagree".into()));
    }
    let mut g: Vec<f64> = model.w.iter().map(|&w| beta * w).collect();
    if alpha != 0.0 {
        let s = inv_margin_factors(u, y, model);
        for i in 0..u.rows() {
            let c = alpha * y.signed()[i] * s[i];
            for (gj, &uij) in g.iter_mut().zip(u.row(i)) {
                *gj -= c * uij;
            }
        }
    }
    Ok(g)
}

/// ∇_b = −αΣᵢ yᵢ/(1+exp(yᵢ(uᵢ·w+b))) + βb.
pub fn grad_b(
    u: &DenseMatrix,
    y: &SignedLabels,
    model: &LogRegModel,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    if u.rows() != y.len() || u.cols() != model.w.len() {
        return Err(SnmfError::ShapeMismatch("grad_b operands disagree".into()));
    }
    let mut g = beta * model.b;
    if alpha != 0.0 {
        let s = inv_margin_factors(u, y, model);
        for i in 0..u.rows() {
            g -= alpha * y.signed()[i] * s[i];
        }
    }
    Ok(g)
}

/// Fit the joint model by cyclic U → V → w → b projected-gradient updates,
/// each a single Armijo-backtracked step against the total objective.
///
/// With α=β=γ=0 this produces the same iterate sequence as
/// [`crate::factorization::fit_nmf`]: the extra terms vanish exactly and the
/// w/b gradients are identically zero.
pub fn fit_snmf(
    x: &NonNegMatrix,
    y_raw: &[u8],
    hyper: &SnmfHyper,
    pgd: &PgdConfig,
    conv: &ConvergenceConfig,
    seed: RngSeed,
) -> Result<SnmfModel> {
    hyper.validate()?;
    pgd.validate()?;
    conv.validate()?;
    let y = SignedLabels::from_raw(y_raw)?;
    if y.len() != x.rows() {
        return Err(SnmfError::ShapeMismatch(format!(
            "X has {} rows but y has {} labels",
            x.rows(),
            y.len()
        )));
    }
    if !y.has_both_classes() {
        return Err(SnmfError::LossDegenerate);
    }
    let (alpha, beta, gamma) = hyper.effective(x.rows(), x.cols());
    let init = nndsvd_init(x, hyper.rank, seed)?;
    let xd = x.as_dense();
    let mut u = init.u().as_dense().clone();
    let mut v = init.v().as_dense().clone();
    let mut model = LogRegModel::zeros(hyper.rank);
    let mut steps = [pgd.initial_step; 4];
    let mut stalls = 0usize;

    let eval = |u: &DenseMatrix, v: &DenseMatrix, model: &LogRegModel| -> Objective {
        objective_with(xd, &y, u, v, model, alpha, beta, gamma).expect("shapes fixed")
    };

    let first = eval(&u, &v, &model);
    if !first.total.is_finite() {
        return Err(SnmfError::NonFiniteObjective);
    }
    let mut total = first.total;
    let mut trace = vec![to_entry(first)];
    for _ in 0..conv.max_outer_iters {
        // U block (projected)
        let g = grad_u_with(xd, &y, &u, &v, &model, alpha, gamma)?;
        let out = pgd_step_cached(&u, &g, pgd, steps[0], true, total, |cand| {
            eval(cand, &v, &model).total
        })?;
        stalls += out.stalled as usize;
        steps[0] = crate::factorization::warm_step(pgd, &out);
        u = out.value;
        total = out.f_value;

        // V block (projected)
        let g = recon_grad_v(xd, &u, &v);
        let out = pgd_step_cached(&v, &g, pgd, steps[1], true, total, |cand| {
            eval(&u, cand, &model).total
        })?;
        stalls += out.stalled as usize;
        steps[1] = crate::factorization::warm_step(pgd, &out);
        v = out.value;

        // the reconstruction and γ terms do not involve (w, b); freeze them
        // for the next two blocks
        let l_f = recon_half_sq(xd, &u, &v);
        let gamma_term = if gamma != 0.0 {
            0.5 * gamma * frobenius_sq(&u)
        } else {
            0.0
        };
        let fixed = l_f + gamma_term;
        let mut f_wb = fixed + logistic_loss(&u, &y, &model, alpha, beta, true)?;

        // w block (unprojected)
        let g = DenseMatrix::new(1, hyper.rank, grad_w(&u, &y, &model, alpha, beta)?)?;
        let w_mat = DenseMatrix::new(1, hyper.rank, model.w.clone())?;
        let out = pgd_step_cached(&w_mat, &g, pgd, steps[2], false, f_wb, |cand| {
            let m = LogRegModel {
                w: cand.as_slice().to_vec(),
                b: model.b,
            };
            fixed + logistic_loss(&u, &y, &m, alpha, beta, true).expect("shapes fixed")
        })?;
        stalls += out.stalled as usize;
        steps[2] = crate::factorization::warm_step(pgd, &out);
        model.w = out.value.as_slice().to_vec();
        f_wb = out.f_value;

        // b block (unprojected)
        let g = DenseMatrix::new(1, 1, vec![grad_b(&u, &y, &model, alpha, beta)?])?;
        let b_mat = DenseMatrix::new(1, 1, vec![model.b])?;
        let out = pgd_step_cached(&b_mat, &g, pgd, steps[3], false, f_wb, |cand| {
            let m = LogRegModel {
                w: model.w.clone(),
                b: cand.get(0, 0),
            };
            fixed + logistic_loss(&u, &y, &m, alpha, beta, true).expect("shapes fixed")
        })?;
        stalls += out.stalled as usize;
        steps[3] = crate::factorization::warm_step(pgd, &out);
        model.b = out.value.get(0, 0);

        // assemble the end-of-iteration objective from its parts, in the
        // same summation order as a fresh evaluation
        let l_lr = logistic_loss(&u, &y, &model, alpha, beta, false)?;
        let mut l_r = 0.0;
        if beta != 0.0 {
            l_r += 0.5 * beta * (dot(&model.w, &model.w) + model.b * model.b);
        }
        l_r += gamma_term;
        let obj = Objective {
            total: l_f + l_lr + l_r,
            l_f,
            l_lr,
            l_r,
        };
        let prev = trace.last().unwrap().total;
        trace.push(to_entry(obj));
        total = obj.total;
        if conv.converged(prev, obj.total) {
            break;
        }
    }
    let factors = FactorPair::new(
        crate::numerics::NonNegMatrix::new(u)?,
        crate::numerics::NonNegMatrix::new(v)?,
    )?;
    Ok(SnmfModel {
        factors,
        logreg: model,
        hyper: hyper.clone(),
        trace,
        stalls,
    })
}

fn to_entry(o: Objective) -> TraceEntry {
    TraceEntry {
        l_f: o.l_f,
        l_lr: o.l_lr,
        l_r: o.l_r,
        total: o.total,
    }
}

/// Standalone ridge-regularized logistic regression on a fixed coefficient
/// matrix, by gradient descent with Armijo line search from w=0, b=0.
///
/// For β>0 the loss is strictly convex; iteration stops when the gradient
/// norm falls below `conv.rel_tol · (1 + loss)` or `max_outer_iters`.
pub fn logreg_fit(
    u: &DenseMatrix,
    y_raw: &[u8],
    beta: f64,
    conv: &ConvergenceConfig,
    _seed: RngSeed,
) -> Result<LogRegModel> {
    conv.validate()?;
    let y = SignedLabels::from_raw(y_raw)?;
    if y.len() != u.rows() {
        return Err(SnmfError::ShapeMismatch(format!(
            "U has {} rows but y has {} labels",
            u.rows(),
            y.len()
        )));
    }
    if !y.has_both_classes() {
        return Err(SnmfError::LossDegenerate);
    }
    let r = u.cols();
    let pgd = PgdConfig::default();
    let mut model = LogRegModel::zeros(r);
    let mut step = pgd.initial_step;
    for _ in 0..conv.max_outer_iters {
        let mut g = grad_w(u, &y, &model, 1.0, beta)?;
        g.push(grad_b(u, &y, &model, 1.0, beta)?);
        let loss = logistic_loss(u, &y, &model, 1.0, beta, true)?;
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= conv.rel_tol * (1.0 + loss.abs()) {
            break;
        }
        let params = {
            let mut p = model.w.clone();
            p.push(model.b);
            DenseMatrix::new(1, r + 1, p)?
        };
        let g_mat = DenseMatrix::new(1, r + 1, g)?;
        let out = pgd_step(&params, &g_mat, &pgd, step, false, |cand| {
            let m = LogRegModel {
                w: cand.as_slice()[..r].to_vec(),
                b: cand.as_slice()[r],
            };
            logistic_loss(u, &y, &m, 1.0, beta, true).unwrap_or(f64::INFINITY)
        })?;
        if out.stalled {
            break;
        }
        step = crate::factorization::warm_step(&pgd, &out);
        model.w = out.value.as_slice()[..r].to_vec();
        model.b = out.value.as_slice()[r];
    }
    Ok(model)
}

/// Linear scores sᵢ = uᵢ·w + b.
pub fn predict_scores(u: &DenseMatrix, model: &LogRegModel) -> Result<Vec<f64>> {
    if u.cols() != model.w.len() {
        return Err(SnmfError::ShapeMismatch(format!(
            "U has {} columns but w has {} entries",
            u.cols(),
            model.w.len()
        )));
    }
    Ok((0..u.rows())
        .map(|i| dot(u.row(i), &model.w) + model.b)
        .collect())
}

/// Probabilities σ(sᵢ) for the same scores.
pub fn predict_probs(u: &DenseMatrix, model: &LogRegModel) -> Result<Vec<f64>> {
    Ok(predict_scores(u, model)?.into_iter().map(sigmoid).collect())
}
