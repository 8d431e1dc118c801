//! Monte-Carlo studies on the reference instance.

use rkhs_sgd::datagen::reference_dataset;
use rkhs_sgd::exact::solve;
use rkhs_sgd::experiment::{dyadic_block_means, run_study, run_trials, summarize};
use rkhs_sgd::sgd::PreparedProblem;
use rkhs_sgd::{Error, KernelFamily, KernelSpec, MixtureWeights, Radius, SgdConfig, StudyConfig};

fn reference_study(trials: usize) -> (StudyConfig, rkhs_sgd::Dataset, KernelSpec) {
    let data = reference_dataset();
    let spec = KernelSpec::new(KernelFamily::Gaussian, 1.0, 2).unwrap();
    let w = MixtureWeights::for_dataset(0.3, &data).unwrap();
    let mut sgd = SgdConfig::new(w, 20000, 1);
    sgd.record_every = 100;
    (StudyConfig::new(sgd, trials), data, spec)
}

#[test]
fn degenerate_study_starts_at_fstar_norm() {
    let (mut cfg, data, spec) = reference_study(1);
    cfg.sgd.steps = 1;
    let rec = run_study(&cfg, &data, &spec).unwrap();
    assert_eq!(rec.ks, vec![1]);
    assert_eq!(rec.mean_err_sq, vec![rec.oracle.fstar.norm_sq().unwrap()]);
    assert_eq!(rec.stderr, vec![0.0]);
    assert!(rec.fit.is_none());
}

#[test]
fn study_is_independent_of_thread_count() {
    let (mut cfg, data, spec) = reference_study(24);
    cfg.sgd.steps = 3000;
    cfg.sgd.record_every = 50;
    cfg.threads = Some(1);
    let a = run_study(&cfg, &data, &spec).unwrap();
    cfg.threads = Some(4);
    let b = run_study(&cfg, &data, &spec).unwrap();
    assert_eq!(a.mean_err_sq, b.mean_err_sq);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn radius_below_minimizer_norm_is_rejected() {
    let (mut cfg, data, spec) = reference_study(2);
    let w = cfg.sgd.weights;
    let norm = solve(&spec, &data, &w).unwrap().norm;
    cfg.sgd.radius = Radius::new(0.9 * norm).unwrap();
    assert!(matches!(run_study(&cfg, &data, &spec), Err(Error::Config(_))));
}

#[test]
fn reference_study_shape() {
    let (cfg, data, spec) = reference_study(200);
    let rec = run_study(&cfg, &data, &spec).unwrap();
    let fit = rec.fit.unwrap();
    println!("slope {} ± {}", fit.slope, fit.ci_half_width);
    assert!((-1.25..=-0.75).contains(&fit.slope));

    // dyadic block means decrease
    let blocks = dyadic_block_means(&rec.ks, &rec.mean_err_sq);
    println!("blocks {blocks:?}");
    assert!(blocks.windows(2).all(|w| w[1] <= w[0]));

    // k·E[err] stays bounded over the tail
    let tail_start = rec.ks.len() / 2;
    let quarter = tail_start + (rec.ks.len() - tail_start) / 4;
    let scaled = |i: usize| rec.ks[i] as f64 * rec.mean_err_sq[i];
    let last = rec.ks.len() - 1;
    println!("k·err at quarter {} last {}", scaled(quarter), scaled(last));
    assert!(scaled(last) <= 3.0 * scaled(quarter));
}

#[test]
fn trial_halves_agree() {
    let (cfg, data, spec) = reference_study(200);
    let sol = solve(&spec, &data, &cfg.sgd.weights).unwrap();
    let problem = PreparedProblem::new(&data, &spec, Some(&sol.fstar)).unwrap();
    let curves: Vec<Vec<f64>> = run_trials(&cfg, &problem).unwrap().into_iter().map(|t| t.values).collect();
    let (m1, s1) = summarize(&curves[..100]);
    let (m2, s2) = summarize(&curves[100..]);
    for i in 0..m1.len() {
        let pooled = (s1[i] * s1[i] + s2[i] * s2[i]).sqrt();
        assert!((m1[i] - m2[i]).abs() <= 4.0 * pooled + 1e-300, "k index {i}");
    }
}
