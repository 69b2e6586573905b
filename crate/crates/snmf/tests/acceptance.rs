//! End-to-end acceptance checks. Each test prints one `acceptance N (...):
//! PASS|FAIL` line; run with `--nocapture` to see them on success.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use snmf::evaluation::{auc, grid_search_cv, permutation_test, stratified_split, take_rows, CvGrid};
use snmf::factorization::{
    fit_nmf, nmf_objective, nndsvd_init, transform_nnls, ConvergenceConfig, FactorPair, PgdConfig,
};
use snmf::numerics::{
    dot, finite_diff_grad, sample_uniform, DenseMatrix, NonNegMatrix, RngSeed,
};
use snmf::repro::{run_table1, ReproConfig};
use snmf::supervised::{
    fit_snmf, grad_b, grad_u_total, grad_v, grad_w, predict_scores, snmf_objective, SignedLabels,
    SnmfHyper,
};

fn report(number: usize, name: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("acceptance {number} ({name}): {verdict}");
    if let Err(cause) = outcome {
        std::panic::resume_unwind(cause);
    }
}

fn random_instance(
    n: usize,
    m: usize,
    r: usize,
    seed: RngSeed,
) -> (NonNegMatrix, Vec<u8>, DenseMatrix, DenseMatrix, Vec<f64>, f64) {
    let mut rng = seed.stream(0);
    let x = sample_uniform(n, m, &mut rng).map(|v| v + 0.05);
    let u = sample_uniform(n, r, &mut rng).map(|v| v + 0.5);
    let v = sample_uniform(r, m, &mut rng).map(|v| v + 0.5);
    let w = sample_uniform(1, r, &mut rng).as_slice().to_vec();
    let b = sample_uniform(1, 1, &mut rng).get(0, 0) - 0.5;
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    (NonNegMatrix::new(x).unwrap(), y, u, v, w, b)
}

fn pair(u: &DenseMatrix, v: &DenseMatrix) -> FactorPair {
    FactorPair::new(
        NonNegMatrix::new(u.clone()).unwrap(),
        NonNegMatrix::new(v.clone()).unwrap(),
    )
    .unwrap()
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

#[test]
fn acceptance_1_gradient_oracle() {
    report(1, "gradient oracle", || {
        let start = Instant::now();
        let coeffs = [0.01, 0.1];
        for inst in 0..10 {
            let (x, y_raw, u, v, w, b) = random_instance(20, 8, 3, RngSeed(100 + inst));
            let y = SignedLabels::from_raw(&y_raw).unwrap();
            let hyper = SnmfHyper {
                alpha: coeffs[(inst % 4 / 2) as usize],
                beta: coeffs[(inst % 2) as usize],
                gamma: coeffs[(inst % 4 / 2) as usize],
                rank: 3,
                scale_by_shape: false,
            };
            let model = snmf::supervised::LogRegModel {
                w: w.clone(),
                b,
            };
            let h = 1e-5;

            let ga = grad_u_total(&x, &y, &pair(&u, &v), &model, &hyper).unwrap();
            let gn = finite_diff_grad(
                |um| snmf_objective(&x, &y, &pair(um, &v), &model, &hyper).unwrap().total,
                &u,
                h,
            );
            assert!(rel_err(ga.as_slice(), gn.as_slice()) <= 1e-5, "grad U off");

            let ga = grad_v(&x, &pair(&u, &v)).unwrap();
            let gn = finite_diff_grad(
                |vm| snmf_objective(&x, &y, &pair(&u, vm), &model, &hyper).unwrap().total,
                &v,
                h,
            );
            assert!(rel_err(ga.as_slice(), gn.as_slice()) <= 1e-5, "grad V off");

            let ga = grad_w(&u, &y, &model, hyper.alpha, hyper.beta).unwrap();
            let mut gn = vec![0.0; w.len()];
            for (j, g) in gn.iter_mut().enumerate() {
                let eval = |delta: f64| {
                    let mut m2 = model.clone();
                    m2.w[j] += delta;
                    snmf_objective(&x, &y, &pair(&u, &v), &m2, &hyper).unwrap().total
                };
                *g = (eval(h) - eval(-h)) / (2.0 * h);
            }
            assert!(rel_err(&ga, &gn) <= 1e-5, "grad w off");

            let ga = grad_b(&u, &y, &model, hyper.alpha, hyper.beta).unwrap();
            let eval = |delta: f64| {
                let mut m2 = model.clone();
                m2.b += delta;
                snmf_objective(&x, &y, &pair(&u, &v), &m2, &hyper).unwrap().total
            };
            let gn = (eval(h) - eval(-h)) / (2.0 * h);
            assert!(
                (ga - gn).abs() / gn.abs().max(1e-12) <= 1e-5,
                "grad b off: {ga} vs {gn}"
            );
        }
        assert!(start.elapsed().as_secs_f64() < 10.0, "gradient oracle too slow");
    });
}

#[test]
fn acceptance_2_degeneration() {
    report(2, "degeneration to plain factorization", || {
        let mut rng = RngSeed(7).stream(0);
        let x = NonNegMatrix::new(sample_uniform(30, 12, &mut rng)).unwrap();
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let pgd = PgdConfig::default();
        let conv = ConvergenceConfig {
            max_outer_iters: 50,
            rel_tol: 1e-300,
        };
        let nmf = fit_nmf(&x, 4, &pgd, &conv, RngSeed(7)).unwrap();
        let hyper = SnmfHyper::new(0.0, 0.0, 0.0, 4);
        let model = fit_snmf(&x, &y, &hyper, &pgd, &conv, RngSeed(7)).unwrap();

        for (a, b) in nmf
            .factors
            .u()
            .as_dense()
            .as_slice()
            .iter()
            .zip(model.factors.u().as_dense().as_slice())
        {
            assert!((a - b).abs() <= 1e-12, "U diverged: {a} vs {b}");
        }
        for (a, b) in nmf
            .factors
            .v()
            .as_dense()
            .as_slice()
            .iter()
            .zip(model.factors.v().as_dense().as_slice())
        {
            assert!((a - b).abs() <= 1e-12, "V diverged: {a} vs {b}");
        }
        assert_eq!(nmf.trace.len(), model.trace.len());
        for (a, e) in nmf.trace.iter().zip(&model.trace) {
            assert!((a - e.total).abs() <= 1e-12 * a.abs().max(1.0));
            assert_eq!(e.l_lr, 0.0);
            assert_eq!(e.l_r, 0.0);
        }
        assert!(model.logreg.w.iter().all(|&v| v == 0.0));
        assert_eq!(model.logreg.b, 0.0);
    });
}

#[test]
fn acceptance_3_monotone_trace() {
    report(3, "monotone objective trace", || {
        for seed in 0..5u64 {
            let mut rng = RngSeed(40 + seed).stream(0);
            let n = 40;
            let x = NonNegMatrix::new(sample_uniform(n, 15, &mut rng)).unwrap();
            let y: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
            let hyper = SnmfHyper::new(0.1, 0.01, 0.01, 4);
            let conv = ConvergenceConfig {
                max_outer_iters: 200,
                rel_tol: 1e-300,
            };
            let model =
                fit_snmf(&x, &y, &hyper, &PgdConfig::default(), &conv, RngSeed(40 + seed))
                    .unwrap();
            for win in model.trace.windows(2) {
                assert!(
                    win[1].total <= win[0].total,
                    "objective rose: {} -> {}",
                    win[0].total,
                    win[1].total
                );
            }
        }
    });
}

#[test]
fn acceptance_4_simulation_benchmark() {
    report(4, "simulation benchmark statistics", || {
        let start = Instant::now();
        let report = run_table1(&ReproConfig::default()).unwrap();
        let targets = [97.15, 95.68, 91.78];
        for (row, &target) in report.rows.iter().zip(&targets) {
            let nmf = 100.0 * row.nmf_mean_auc;
            let snmf = 100.0 * row.snmf_mean_auc;
            eprintln!(
                "eta={:.1}: nmf {:.2} snmf {:.2} (target {:.2}, p {:.3})",
                row.noise_level, nmf, snmf, target, row.mean_p_value
            );
            assert!(
                snmf + 1e-12 >= nmf,
                "supervised mean AUC {snmf:.2} below unsupervised {nmf:.2} at eta {}",
                row.noise_level
            );
            assert!(
                (snmf - target).abs() <= 4.0,
                "supervised mean AUC {snmf:.2} not within 4 points of {target}"
            );
        }
        let secs = start.elapsed().as_secs_f64();
        eprintln!("benchmark wall time: {secs:.1}s");
        assert!(secs < 300.0, "benchmark too slow: {secs:.1}s");
    });
}

#[test]
fn acceptance_5_auc_exactness() {
    report(5, "rank-based AUC vs pairwise oracle", || {
        assert_eq!(auc(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[4.0, 3.0, 2.0, 1.0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(auc(&[5.0, 5.0, 5.0, 5.0], &[0, 0, 1, 1]).unwrap(), 0.5);

        let pairwise = |scores: &[f64], labels: &[u8]| -> f64 {
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for (i, &si) in scores.iter().enumerate() {
                if labels[i] != 1 {
                    continue;
                }
                for (j, &sj) in scores.iter().enumerate() {
                    if labels[j] != 0 {
                        continue;
                    }
                    pairs += 1.0;
                    if si > sj {
                        wins += 1.0;
                    } else if si == sj {
                        wins += 0.5;
                    }
                }
            }
            wins / pairs
        };

        for trial in 0..100u64 {
            let mut rng = RngSeed(500).stream(trial);
            let n = 2 + (sample_uniform(1, 1, &mut rng).get(0, 0) * 198.0) as usize;
            let raw = sample_uniform(2, n, &mut rng);
            // quantize so ties occur
            let scores: Vec<f64> = raw.row(0).iter().map(|v| (v * 8.0).floor()).collect();
            let mut labels: Vec<u8> = raw.row(1).iter().map(|&v| (v > 0.5) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let fast = auc(&scores, &labels).unwrap();
            let slow = pairwise(&scores, &labels);
            assert!((fast - slow).abs() <= 1e-12, "trial {trial}: {fast} vs {slow}");
        }
    });
}

#[test]
fn acceptance_6_nndsvd_quality() {
    report(6, "svd-based init beats random", || {
        for trial in 0..10u64 {
            let mut rng = RngSeed(900).stream(trial);
            let x = NonNegMatrix::new(sample_uniform(50, 30, &mut rng)).unwrap();
            let init = nndsvd_init(&x, 5, RngSeed(900)).unwrap();
            let nndsvd_err = nmf_objective(&x, &init).unwrap();

            let mut random_sum = 0.0;
            for k in 0..10 {
                let mut r = RngSeed(901 + trial).stream(k);
                let f = FactorPair::new(
                    NonNegMatrix::new(sample_uniform(50, 5, &mut r)).unwrap(),
                    NonNegMatrix::new(sample_uniform(5, 30, &mut r)).unwrap(),
                )
                .unwrap();
                random_sum += nmf_objective(&x, &f).unwrap();
            }
            assert!(
                nndsvd_err <= random_sum / 10.0,
                "trial {trial}: {nndsvd_err} vs mean random {}",
                random_sum / 10.0
            );

            let again = nndsvd_init(&x, 5, RngSeed(3)).unwrap();
            assert_eq!(init.u().as_dense().as_slice(), again.u().as_dense().as_slice());
            assert_eq!(init.v().as_dense().as_slice(), again.v().as_dense().as_slice());
        }
    });
}

#[test]
fn acceptance_7_permutation_sanity() {
    report(7, "permutation test sanity", || {
        let labels: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
        let scores: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let p = permutation_test(&scores, &scores, &labels, 999, RngSeed(1)).unwrap();
        assert_eq!(p, 1.0);

        // perfect scorer vs perfectly reversed scorer
        let perfect: Vec<f64> = labels.iter().map(|&l| l as f64 * 10.0).collect();
        let reversed: Vec<f64> = labels.iter().map(|&l| 10.0 - l as f64 * 10.0).collect();
        let p = permutation_test(&perfect, &reversed, &labels, 999, RngSeed(2)).unwrap();
        assert!(p <= 0.01, "p = {p}");
    });
}

#[test]
fn acceptance_8_large_scale_smoke() {
    report(8, "large-scale pipeline smoke", || {
        let start = Instant::now();
        let n = 7863;
        let m = 300;
        let mut rng = RngSeed(2024).stream(0);
        let x = NonNegMatrix::new(sample_uniform(n, m, &mut rng)).unwrap();
        let y: Vec<u8> = (0..n).map(|i| (i % 10 == 0) as u8).collect();
        assert_eq!(y.iter().filter(|&&l| l == 1).count(), 787);

        let pgd = PgdConfig::default();
        let conv = ConvergenceConfig {
            max_outer_iters: 40,
            rel_tol: 1e-5,
        };
        let split = stratified_split(&y, 0.5, RngSeed(2024)).unwrap();
        let x_train =
            NonNegMatrix::new(take_rows(x.as_dense(), &split.train_indices)).unwrap();
        let y_train: Vec<u8> = split.train_indices.iter().map(|&i| y[i]).collect();
        let x_test = NonNegMatrix::new(take_rows(x.as_dense(), &split.test_indices)).unwrap();
        let y_test: Vec<u8> = split.test_indices.iter().map(|&i| y[i]).collect();

        let grid = CvGrid {
            alphas: vec![0.0, 0.01],
            betas: vec![0.0, 0.01],
            gammas: vec![0.0, 0.01],
            ranks: vec![5],
            folds: 3,
        };
        let (best, table) =
            grid_search_cv(&x_train, &y_train, &grid, true, &pgd, &conv, RngSeed(2024)).unwrap();
        assert_eq!(table.len(), 8);
        let model = fit_snmf(&x_train, &y_train, &best, &pgd, &conv, RngSeed(2024)).unwrap();
        let u_test = transform_nnls(&x_test, model.factors.v(), &pgd, &conv).unwrap();
        let scores = predict_scores(u_test.as_dense(), &model.logreg).unwrap();
        let test_auc = auc(&scores, &y_test).unwrap();
        assert!(test_auc.is_finite() && (0.0..=1.0).contains(&test_auc));
        assert!(dot(&model.logreg.w, &model.logreg.w).is_finite());

        let secs = start.elapsed().as_secs_f64();
        eprintln!("smoke wall time: {secs:.1}s, test AUC {test_auc:.4}");
        assert!(secs < 900.0, "smoke test too slow: {secs:.1}s");
    });
}
