//! Unsupervised NMF: NNDSVD initialization, the ½‖X−UV‖² objective and its
//! gradients, and the projected-gradient engine with Armijo backtracking that
//! the supervised solver reuses block by block.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnmfError};
use crate::numerics::{
    dot, recon_half_sq, DenseMatrix, NonNegMatrix, RngSeed,
};

/// Nonnegative factor pair: U is n×r coefficients, V is r×m bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    u: NonNegMatrix,
    v: NonNegMatrix,
}

impl FactorPair {
    pub fn new(u: NonNegMatrix, v: NonNegMatrix) -> Result<Self> {
        let r = u.cols();
        if v.rows() != r {
            return Err(SnmfError::ShapeMismatch(format!(
                "U has {} columns but V has {} rows",
                r,
                v.rows()
            )));
        }
        let (n, m) = (u.rows(), v.cols());
        if r < 1 || r > n.min(m) {
            return Err(SnmfError::RankTooLarge {
                rank: r,
                rows: n,
                cols: m,
            });
        }
        Ok(Self { u, v })
    }

    pub fn u(&self) -> &NonNegMatrix {
        &self.u
    }

    pub fn v(&self) -> &NonNegMatrix {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.u.as_dense().matmul(self.v.as_dense())
    }
}

/// Line-search configuration for one projected-gradient step.
///
/// The per-variable step sizes ηᵗ have no fixed schedule here; every block
/// update runs Armijo backtracking from a warm-started initial step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PgdConfig {
    pub initial_step: f64,
    pub backtrack_ratio: f64,
    pub armijo_coeff: f64,
    pub max_backtracks: usize,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            backtrack_ratio: 0.5,
            armijo_coeff: 1e-4,
            max_backtracks: 60,
        }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_step <= 0.0 {
            return Err(SnmfError::InvalidConfig("initial_step must be > 0".into()));
        }
        if !(0.0 < self.backtrack_ratio && self.backtrack_ratio < 1.0) {
            return Err(SnmfError::InvalidConfig(
                "backtrack_ratio must lie in (0,1)".into(),
            ));
        }
        if !(0.0 < self.armijo_coeff && self.armijo_coeff < 1.0) {
            return Err(SnmfError::InvalidConfig(
                "armijo_coeff must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

/// Outer-loop termination: iteration cap plus a relative-objective-change test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub max_outer_iters: usize,
    pub rel_tol: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 500,
            rel_tol: 1e-6,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters < 1 {
            return Err(SnmfError::InvalidConfig("max_outer_iters must be ≥ 1".into()));
        }
        if self.rel_tol <= 0.0 {
            return Err(SnmfError::InvalidConfig("rel_tol must be > 0".into()));
        }
        Ok(())
    }

    pub fn converged(&self, prev: f64, curr: f64) -> bool {
        (prev - curr).abs() <= self.rel_tol * prev.abs().max(1.0)
    }
}

/// Result of one line-searched block update.
pub struct PgdOutcome {
    pub value: DenseMatrix,
    pub step: f64,
    pub stalled: bool,
    /// Objective at `value` (equals the incoming objective on a stall).
    pub f_value: f64,
}

/// One projected-gradient step with Armijo backtracking.
///
/// Accepts `P₊[x − η g]` (projection only when `project` is set) for the
/// largest tried η satisfying f(x⁺) ≤ f(x) + c·⟨g, x⁺−x⟩. If every trial
/// fails the value is returned unchanged with `step = 0` and `stalled` set,
/// so an accepted outcome can never increase the objective.
pub fn pgd_step(
    current: &DenseMatrix,
    gradient: &DenseMatrix,
    cfg: &PgdConfig,
    init_step: f64,
    project: bool,
    objective: impl Fn(&DenseMatrix) -> f64,
) -> Result<PgdOutcome> {
    if current.shape() != gradient.shape() {
        return Err(SnmfError::ShapeMismatch(format!(
            "value {:?} vs gradient {:?}",
            current.shape(),
            gradient.shape()
        )));
    }
    let f0 = objective(current);
    if !f0.is_finite() {
        return Err(SnmfError::NonFiniteObjective);
    }
    pgd_step_cached(current, gradient, cfg, init_step, project, f0, objective)
}

/// [`pgd_step`] with the objective at `current` already known, so block
/// loops that carry the accepted value forward skip one evaluation per step.
pub(crate) fn pgd_step_cached(
    current: &DenseMatrix,
    gradient: &DenseMatrix,
    cfg: &PgdConfig,
    init_step: f64,
    project: bool,
    f0: f64,
    objective: impl Fn(&DenseMatrix) -> f64,
) -> Result<PgdOutcome> {
    let mut step = init_step;
    for _ in 0..=cfg.max_backtracks {
        let mut candidate = current.clone();
        for (c, &g) in candidate.as_mut_slice().iter_mut().zip(gradient.as_slice()) {
            *c -= step * g;
            if project && *c < 0.0 {
                *c = 0.0;
            }
        }
        let fc = objective(&candidate);
        if fc.is_finite() {
            let dir_dot: f64 = gradient
                .as_slice()
                .iter()
                .zip(candidate.as_slice().iter().zip(current.as_slice()))
                .map(|(&g, (&c, &x))| g * (c - x))
                .sum();
            if fc <= f0 + cfg.armijo_coeff * dir_dot {
                return Ok(PgdOutcome {
                    value: candidate,
                    step,
                    stalled: false,
                    f_value: fc,
                });
            }
        }
        step *= cfg.backtrack_ratio;
    }
    Ok(PgdOutcome {
        value: current.clone(),
        step: 0.0,
        stalled: true,
        f_value: f0,
    })
}

/// Warm-start rule: double the last accepted step, reset after a stall.
pub(crate) fn warm_step(cfg: &PgdConfig, outcome: &PgdOutcome) -> f64 {
    if outcome.stalled {
        cfg.initial_step
    } else {
        outcome.step * 2.0
    }
}

/// ½‖X − UV‖²_F.
pub fn nmf_objective(x: &NonNegMatrix, f: &FactorPair) -> Result<f64> {
    if f.u.rows() != x.rows() || f.v.cols() != x.cols() {
        return Err(SnmfError::ShapeMismatch(format!(
            "X is {}x{} but UV is {}x{}",
            x.rows(),
            x.cols(),
            f.u.rows(),
            f.v.cols()
        )));
    }
    Ok(recon_half_sq(
        x.as_dense(),
        f.u.as_dense(),
        f.v.as_dense(),
    ))
}

/// ∇_U ½‖X−UV‖² = (UV − X)Vᵀ, one residual row at a time.
pub(crate) fn recon_grad_u(x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> DenseMatrix {
    let (n, m) = x.shape();
    let r = u.cols();
    let mut g = DenseMatrix::zeros(n, r);
    let mut buf = vec![0.0f64; m];
    for i in 0..n {
        residual_row(&mut buf, x, u, v, i);
        for j in 0..r {
            g.set(i, j, dot(&buf, v.row(j)));
        }
    }
    g
}

/// ∇_V ½‖X−UV‖² = Uᵀ(UV − X), one residual row at a time.
pub(crate) fn recon_grad_v(x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> DenseMatrix {
    let (n, m) = x.shape();
    let r = u.cols();
    let mut g = DenseMatrix::zeros(r, m);
    let mut buf = vec![0.0f64; m];
    for k in 0..n {
        residual_row(&mut buf, x, u, v, k);
        for (i, &a) in u.row(k).iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let out_row = &mut g.as_mut_slice()[i * m..(i + 1) * m];
            for (o, &b) in out_row.iter_mut().zip(buf.iter()) {
                *o += a * b;
            }
        }
    }
    g
}

/// Row i of UV − X, with the product accumulated in the same order as
/// `matmul`.
fn residual_row(buf: &mut [f64], x: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix, i: usize) {
    buf.iter_mut().for_each(|b| *b = 0.0);
    for (k, &a) in u.row(i).iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &b) in buf.iter_mut().zip(v.row(k)) {
            *o += a * b;
        }
    }
    for (o, &q) in buf.iter_mut().zip(x.row(i)) {
        *o -= q;
    }
}

/// NNDSVD: deterministic nonnegative initialization from the leading r
/// singular triplets of X. Exact zeros in the construction are lifted to
/// `mean(positive entries of X) · 1e-4`; exact zeros are absorbing under
/// projection and leave flat search directions.
pub fn nndsvd_init(x: &NonNegMatrix, r: usize, _seed: RngSeed) -> Result<FactorPair> {
    let (n, m) = (x.rows(), x.cols());
    if r < 1 || r > n.min(m) {
        return Err(SnmfError::RankTooLarge {
            rank: r,
            rows: n,
            cols: m,
        });
    }
    let positives: Vec<f64> = x
        .as_dense()
        .as_slice()
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .collect();
    if positives.is_empty() {
        return Err(SnmfError::ZeroMatrix);
    }
    let fill = positives.iter().sum::<f64>() / positives.len() as f64 * 1e-4;

    let xm = nalgebra::DMatrix::from_row_slice(n, m, x.as_dense().as_slice());
    let svd = xm.svd(true, true);
    let u_full = svd.u.as_ref().expect("requested");
    let vt_full = svd.v_t.as_ref().expect("requested");
    // nalgebra does not promise an ordering; sort triplets by singular value.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });

    let mut u0 = DenseMatrix::zeros(n, r);
    let mut v0 = DenseMatrix::zeros(r, m);
    for (j, &k) in order.iter().take(r).enumerate() {
        let sigma = svd.singular_values[k];
        let uc: Vec<f64> = (0..n).map(|i| u_full[(i, k)]).collect();
        let vc: Vec<f64> = (0..m).map(|i| vt_full[(k, i)]).collect();
        let (su, sv, scale) = if j == 0 {
            // Leading singular pair of a nonnegative matrix is nonnegative up
            // to a global sign.
            let flip = if uc.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let su: Vec<f64> = uc.iter().map(|&v| (flip * v).max(0.0)).collect();
            let sv: Vec<f64> = vc.iter().map(|&v| (flip * v).max(0.0)).collect();
            (su, sv, sigma)
        } else {
            let pos = |s: &[f64]| -> Vec<f64> { s.iter().map(|&v| v.max(0.0)).collect() };
            let neg = |s: &[f64]| -> Vec<f64> { s.iter().map(|&v| (-v).max(0.0)).collect() };
            let norm = |s: &[f64]| -> f64 { dot(s, s).sqrt() };
            let (up, un, vp, vn) = (pos(&uc), neg(&uc), pos(&vc), neg(&vc));
            let (upn, unn, vpn, vnn) = (norm(&up), norm(&un), norm(&vp), norm(&vn));
            let mp = upn * vpn;
            let mn = unn * vnn;
            if mp >= mn && mp > 0.0 {
                let su = up.iter().map(|&v| v / upn).collect();
                let sv = vp.iter().map(|&v| v / vpn).collect();
                (su, sv, sigma * mp)
            } else if mn > 0.0 {
                let su = un.iter().map(|&v| v / unn).collect();
                let sv = vn.iter().map(|&v| v / vnn).collect();
                (su, sv, sigma * mn)
            } else {
                (vec![0.0; n], vec![0.0; m], 0.0)
            }
        };
        let s = scale.max(0.0).sqrt();
        for i in 0..n {
            u0.set(i, j, s * su[i]);
        }
        for i in 0..m {
            v0.set(j, i, s * sv[i]);
        }
    }
    let lift = |v: f64| if v <= 0.0 { fill } else { v };
    let u0 = NonNegMatrix::new(u0.map(lift))?;
    let v0 = NonNegMatrix::new(v0.map(lift))?;
    FactorPair::new(u0, v0)
}

/// Fitted NMF model plus its per-iteration objective trace.
#[derive(Clone, Debug)]
pub struct NmfFit {
    pub factors: FactorPair,
    pub trace: Vec<f64>,
    pub stalls: usize,
}

/// Alternating projected-gradient NMF (the α=β=γ=0 degeneration of the
/// supervised solver; the two must produce identical iterates in that case,
/// so the block structure here mirrors the supervised loop exactly).
pub fn fit_nmf(
    x: &NonNegMatrix,
    r: usize,
    pgd: &PgdConfig,
    conv: &ConvergenceConfig,
    seed: RngSeed,
) -> Result<NmfFit> {
    pgd.validate()?;
    conv.validate()?;
    let init = nndsvd_init(x, r, seed)?;
    let xd = x.as_dense();
    let mut u = init.u().as_dense().clone();
    let mut v = init.v().as_dense().clone();
    let mut step_u = pgd.initial_step;
    let mut step_v = pgd.initial_step;
    let mut stalls = 0usize;

    let objective = |u: &DenseMatrix, v: &DenseMatrix| recon_half_sq(xd, u, v);

    let mut f_curr = objective(&u, &v);
    let mut trace = vec![f_curr];
    for _ in 0..conv.max_outer_iters {
        let gu = recon_grad_u(xd, &u, &v);
        let out =
            pgd_step_cached(&u, &gu, pgd, step_u, true, f_curr, |cand| objective(cand, &v))?;
        stalls += out.stalled as usize;
        step_u = warm_step(pgd, &out);
        u = out.value;
        f_curr = out.f_value;

        let gv = recon_grad_v(xd, &u, &v);
        let out =
            pgd_step_cached(&v, &gv, pgd, step_v, true, f_curr, |cand| objective(&u, cand))?;
        stalls += out.stalled as usize;
        step_v = warm_step(pgd, &out);
        v = out.value;
        f_curr = out.f_value;

        let prev = *trace.last().unwrap();
        trace.push(f_curr);
        if conv.converged(prev, f_curr) {
            break;
        }
    }
    let factors = FactorPair::new(NonNegMatrix::new(u)?, NonNegMatrix::new(v)?)?;
    Ok(NmfFit {
        factors,
        trace,
        stalls,
    })
}

/// Nonnegative least squares for out-of-sample rows: U_new =
/// argmin_{U⪰0} ½‖X_new − U V‖². Rows are independent subproblems and are
/// solved independently (so the result does not depend on scheduling).
pub fn transform_nnls(
    x_new: &NonNegMatrix,
    v: &NonNegMatrix,
    pgd: &PgdConfig,
    conv: &ConvergenceConfig,
) -> Result<NonNegMatrix> {
    pgd.validate()?;
    conv.validate()?;
    if x_new.cols() != v.cols() {
        return Err(SnmfError::ShapeMismatch(format!(
            "X_new has {} columns but V has {}",
            x_new.cols(),
            v.cols()
        )));
    }
    let r = v.rows();
    let vd = v.as_dense();
    let rows: Result<Vec<Vec<f64>>> = (0..x_new.rows())
        .into_par_iter()
        .map(|i| {
            let x_row = DenseMatrix::new(1, x_new.cols(), x_new.as_dense().row(i).to_vec())?;
            let objective = |u: &DenseMatrix| recon_half_sq(&x_row, u, vd);
            let mut u = DenseMatrix::zeros(1, r);
            let mut step = pgd.initial_step;
            let mut f_curr = objective(&u);
            for _ in 0..conv.max_outer_iters {
                let g = recon_grad_u(&x_row, &u, vd);
                let out = pgd_step_cached(&u, &g, pgd, step, true, f_curr, objective)?;
                step = warm_step(pgd, &out);
                u = out.value;
                let f_prev = f_curr;
                f_curr = out.f_value;
                if conv.converged(f_prev, f_curr) {
                    break;
                }
            }
            Ok(u.as_slice().to_vec())
        })
        .collect();
    let u = DenseMatrix::from_rows(&rows?)?;
    NonNegMatrix::new(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, frobenius_sq, sample_uniform};

    fn random_nonneg(rows: usize, cols: usize, seed: u64) -> NonNegMatrix {
        let mut rng = RngSeed(seed).stream(0);
        NonNegMatrix::new(sample_uniform(rows, cols, &mut rng)).unwrap()
    }

    fn pair_from(u: DenseMatrix, v: DenseMatrix) -> FactorPair {
        FactorPair::new(NonNegMatrix::new(u).unwrap(), NonNegMatrix::new(v).unwrap()).unwrap()
    }

    #[test]
    fn nndsvd_recovers_rank_one_exactly() {
        let u = vec![0.5, 1.0, 2.0, 0.25, 1.5];
        let v = vec![1.0, 3.0, 0.5, 2.0];
        let x = DenseMatrix::from_fn(5, 4, |i, j| u[i] * v[j]);
        let norm = frobenius_sq(&x);
        let x = NonNegMatrix::new(x).unwrap();
        let init = nndsvd_init(&x, 1, RngSeed(0)).unwrap();
        let err = frobenius_sq(&init.reconstruct().sub(x.as_dense()).unwrap());
        assert!(err / norm <= 1e-10, "relative error {}", err / norm);
    }

    #[test]
    fn nndsvd_factors_are_nonneg_and_deterministic() {
        let x = random_nonneg(12, 7, 3);
        let a = nndsvd_init(&x, 3, RngSeed(0)).unwrap();
        let b = nndsvd_init(&x, 3, RngSeed(99)).unwrap();
        assert_eq!(a, b);
        assert!(a.u().as_dense().as_slice().iter().all(|&v| v >= 0.0));
        assert!(a.v().as_dense().as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn nndsvd_beats_mean_random_init() {
        let x = random_nonneg(50, 30, 11);
        let init = nndsvd_init(&x, 5, RngSeed(0)).unwrap();
        let nndsvd_err = frobenius_sq(&init.reconstruct().sub(x.as_dense()).unwrap());
        let mut total = 0.0;
        for s in 0..10u64 {
            let mut rng = RngSeed(1000 + s).stream(0);
            let u = sample_uniform(50, 5, &mut rng);
            let v = sample_uniform(5, 30, &mut rng);
            total += frobenius_sq(&u.matmul(&v).sub(x.as_dense()).unwrap());
        }
        assert!(nndsvd_err <= total / 10.0);
    }

    #[test]
    fn nndsvd_rejects_bad_inputs() {
        let x = random_nonneg(4, 3, 1);
        assert!(matches!(
            nndsvd_init(&x, 4, RngSeed(0)),
            Err(SnmfError::RankTooLarge { .. })
        ));
        let z = NonNegMatrix::new(DenseMatrix::zeros(3, 3)).unwrap();
        assert!(matches!(
            nndsvd_init(&z, 1, RngSeed(0)),
            Err(SnmfError::ZeroMatrix)
        ));
    }

    #[test]
    fn nmf_objective_cases() {
        let u = DenseMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let v = DenseMatrix::new(1, 2, vec![3.0, 4.0]).unwrap();
        let exact = NonNegMatrix::new(u.matmul(&v)).unwrap();
        let f = pair_from(u, v);
        assert_eq!(nmf_objective(&exact, &f).unwrap(), 0.0);

        let x = NonNegMatrix::new(DenseMatrix::new(1, 1, vec![2.0]).unwrap()).unwrap();
        let f = pair_from(DenseMatrix::zeros(1, 1), DenseMatrix::zeros(1, 1));
        assert_eq!(nmf_objective(&x, &f).unwrap(), 2.0);
    }

    #[test]
    fn nmf_objective_matches_double_loop_oracle() {
        let x = random_nonneg(6, 4, 5);
        let mut rng = RngSeed(6).stream(0);
        let f = pair_from(
            sample_uniform(6, 2, &mut rng),
            sample_uniform(2, 4, &mut rng),
        );
        let recon = f.reconstruct();
        let mut oracle = 0.0;
        for i in 0..6 {
            for j in 0..4 {
                let d = x.as_dense().get(i, j) - recon.get(i, j);
                oracle += 0.5 * d * d;
            }
        }
        let got = nmf_objective(&x, &f).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }

    #[test]
    fn recon_grads_match_finite_differences() {
        let x = random_nonneg(10, 6, 21);
        let mut rng = RngSeed(22).stream(0);
        let u = sample_uniform(10, 3, &mut rng);
        let v = sample_uniform(3, 6, &mut rng);
        let gu = recon_grad_u(x.as_dense(), &u, &v);
        let fd = finite_diff_grad(
            |cand| 0.5 * frobenius_sq(&cand.matmul(&v).sub(x.as_dense()).unwrap()),
            &u,
            1e-6,
        );
        for (a, b) in gu.as_slice().iter().zip(fd.as_slice()) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()));
        }
        let gv = recon_grad_v(x.as_dense(), &u, &v);
        let fd = finite_diff_grad(
            |cand| 0.5 * frobenius_sq(&u.matmul(cand).sub(x.as_dense()).unwrap()),
            &v,
            1e-6,
        );
        for (a, b) in gv.as_slice().iter().zip(fd.as_slice()) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn pgd_step_zero_gradient_is_identity() {
        let x = DenseMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let g = DenseMatrix::zeros(1, 2);
        let out = pgd_step(&x, &g, &PgdConfig::default(), 1.0, false, frobenius_sq).unwrap();
        assert_eq!(out.value, x);
        assert!(!out.stalled);
    }

    #[test]
    fn pgd_step_decreases_quadratic() {
        let x = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let g = x.clone(); // gradient of ½‖A‖² at A
        let out = pgd_step(&x, &g, &PgdConfig::default(), 1.0, false, |a| {
            0.5 * frobenius_sq(a)
        })
        .unwrap();
        assert!(0.5 * frobenius_sq(&out.value) < 0.5);
    }

    #[test]
    fn pgd_step_projection_clamps() {
        let x = DenseMatrix::new(1, 1, vec![0.1]).unwrap();
        let g = DenseMatrix::new(1, 1, vec![10.0]).unwrap();
        // any accepted step ≥ 0.01 lands on the boundary
        let out = pgd_step(&x, &g, &PgdConfig::default(), 1.0, true, |a| {
            0.5 * frobenius_sq(a)
        })
        .unwrap();
        assert_eq!(out.value.get(0, 0), 0.0);
    }

    #[test]
    fn fit_nmf_recovers_exact_low_rank() {
        let mut rng = RngSeed(31).stream(0);
        let u = sample_uniform(6, 2, &mut rng);
        let v = sample_uniform(2, 5, &mut rng);
        let x = NonNegMatrix::new(u.matmul(&v)).unwrap();
        let conv = ConvergenceConfig {
            max_outer_iters: 500,
            rel_tol: 1e-14,
        };
        let fit = fit_nmf(&x, 2, &PgdConfig::default(), &conv, RngSeed(0)).unwrap();
        let final_obj = *fit.trace.last().unwrap();
        assert!(final_obj <= 1e-8 * frobenius_sq(x.as_dense()));
    }

    #[test]
    fn fit_nmf_trace_monotone_and_deterministic() {
        let x = random_nonneg(9, 7, 41);
        let conv = ConvergenceConfig {
            max_outer_iters: 100,
            rel_tol: 1e-12,
        };
        let a = fit_nmf(&x, 7, &PgdConfig::default(), &conv, RngSeed(5)).unwrap();
        let b = fit_nmf(&x, 7, &PgdConfig::default(), &conv, RngSeed(5)).unwrap();
        assert_eq!(a.trace, b.trace);
        for w in a.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(a.trace.last().unwrap() <= a.trace.first().unwrap());
    }

    #[test]
    fn fit_nmf_tolerates_zero_rows() {
        let mut x = random_nonneg(6, 4, 8).into_dense();
        for j in 0..4 {
            x.set(2, j, 0.0);
        }
        let x = NonNegMatrix::new(x).unwrap();
        let fit = fit_nmf(&x, 2, &PgdConfig::default(), &ConvergenceConfig::default(), RngSeed(0))
            .unwrap();
        assert!(fit.trace.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn transform_recovers_known_coefficients() {
        let mut rng = RngSeed(51).stream(0);
        let v = NonNegMatrix::new(sample_uniform(3, 8, &mut rng)).unwrap();
        let u_true = sample_uniform(4, 3, &mut rng);
        let x = NonNegMatrix::new(u_true.matmul(v.as_dense())).unwrap();
        let conv = ConvergenceConfig {
            max_outer_iters: 2000,
            rel_tol: 1e-15,
        };
        let u = transform_nnls(&x, &v, &PgdConfig::default(), &conv).unwrap();
        for (a, b) in u.as_dense().as_slice().iter().zip(u_true.as_slice()) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn transform_zero_row_gives_zero_coefficients() {
        let mut rng = RngSeed(52).stream(0);
        let v = NonNegMatrix::new(sample_uniform(2, 5, &mut rng)).unwrap();
        let x = NonNegMatrix::new(DenseMatrix::zeros(3, 5)).unwrap();
        let u = transform_nnls(&x, &v, &PgdConfig::default(), &ConvergenceConfig::default())
            .unwrap();
        assert!(u.as_dense().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transform_after_fit_does_not_worsen_objective() {
        let x = random_nonneg(12, 6, 61);
        let conv = ConvergenceConfig {
            max_outer_iters: 300,
            rel_tol: 1e-12,
        };
        let fit = fit_nmf(&x, 3, &PgdConfig::default(), &conv, RngSeed(0)).unwrap();
        let u = transform_nnls(&x, fit.factors.v(), &PgdConfig::default(), &conv).unwrap();
        let refit = FactorPair::new(u, fit.factors.v().clone()).unwrap();
        let obj = nmf_objective(&x, &refit).unwrap();
        assert!(obj <= fit.trace.last().unwrap() + 1e-8);
    }
}
