mod common;

use common::{fista, random_problem, Dense};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treerules::featurize::DesignMatrix;
use treerules::regpath::{run_path, PathConfig, ZERO_EPS};
use treerules::sparse_glm::{
    fit, lambda_max, objective, sigmoid, smooth_gradient, FitProblem, SolverConfig,
};

fn problem(seed: u64) -> DesignMatrix {
    random_problem(&mut ChaCha8Rng::seed_from_u64(seed), 40, 6)
}

fn lambda_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.001), Just(0.01), Just(0.05), Just(0.1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let m = problem(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let a: Vec<f64> = (0..m.n_features()).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
        let b = 0.3;
        let (ga, gb) = smooth_gradient(&m, &a, b);
        let h = 1e-6;
        let f = |a: &[f64], b: f64| objective(&m, a, b, 0.0);
        for j in 0..a.len() {
            let mut up = a.clone();
            let mut down = a.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (f(&up, b) - f(&down, b)) / (2.0 * h);
            prop_assert!((fd - ga[j]).abs() < 1e-7, "feature {}: {} vs {}", j, fd, ga[j]);
        }
        let fd = (f(&a, b + h) - f(&a, b - h)) / (2.0 * h);
        prop_assert!((fd - gb).abs() < 1e-7);
        let (oa, ob) = common::gradient(&Dense::from_matrix(&m), &a, b);
        prop_assert!((ob - gb).abs() < 1e-12);
        for (x, y) in oa.iter().zip(&ga) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_is_monotone_optimal_and_sparse(seed in any::<u64>(), lambda in lambda_strategy()) {
        let m = problem(seed);
        let d = Dense::from_matrix(&m);
        let r = fit(&FitProblem::new(&m, lambda)).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "objective increased: {} -> {}", w[0], w[1]);
        }
        prop_assert!(r.converged);
        prop_assert!(common::kkt(&d, &r.weights, r.intercept, lambda) <= 1e-5);
        // small weights are exact zeros, except for gradient noise on a
        // feature sitting on the threshold (up to the optimality tolerance), which
        // the entry guard absorbs
        let (g, _) = common::gradient(&d, &r.weights, r.intercept);
        for (w, g) in r.weights.iter().zip(&g) {
            let tiny = *w != 0.0 && w.abs() <= ZERO_EPS;
            prop_assert!(!tiny || (g.abs() - lambda).abs() <= SolverConfig::default().tolerance, "weight {} with gradient {}", w, g);
        }
        let oracle = fista(&d, lambda, 20_000);
        prop_assert!(common::objective(&d, &r.weights, r.intercept, lambda) <= oracle.objective + 1e-6);
    }

    #[test]
    fn duplicated_rows_same_optimum(seed in any::<u64>(), lambda in lambda_strategy()) {
        let m = problem(seed);
        let solver = SolverConfig { tolerance: 1e-9, ..SolverConfig::default() };
        let once = fit(&FitProblem::with_solver(&m, lambda, &solver)).unwrap();
        let twice = fit(&FitProblem::with_solver(&m.repeat_rows(2), lambda, &solver)).unwrap();
        prop_assert!((once.objective - twice.objective).abs() < 1e-9);
        for (a, b) in once.weights.iter().zip(&twice.weights) {
            prop_assert!((a - b).abs() < 1e-4, "{} vs {}", a, b);
        }
    }

    #[test]
    fn lambda_max_gives_intercept_only(seed in any::<u64>(), scale in 1.0f64..4.0) {
        let m = problem(seed);
        let lmax = lambda_max(&m);
        let r = fit(&FitProblem::new(&m, lmax * scale)).unwrap();
        prop_assert!(r.weights.iter().all(|w| *w == 0.0));
        prop_assert!((sigmoid(r.intercept) - m.label_mean()).abs() <= 1e-8);
        // and just below λ_max something enters
        let below = fit(&FitProblem::new(&m, lmax * 0.9)).unwrap();
        prop_assert!(lmax == 0.0 || below.weights.iter().any(|w| *w != 0.0));
    }

    #[test]
    fn warm_and_cold_paths_agree_on_entry(seed in any::<u64>()) {
        let m = problem(seed);
        let solver = SolverConfig { tolerance: 1e-9, ..SolverConfig::default() };
        let cfg = PathConfig { k: 20, ..PathConfig::default() };
        let warm = run_path(&m, &cfg, &solver).unwrap();
        let cold = run_path(&m, &PathConfig { warm_start: false, ..cfg }, &solver).unwrap();
        for (step, (w, c)) in warm.fits.iter().zip(&cold.fits).enumerate() {
            prop_assert!((w.objective - c.objective).abs() < 1e-8, "step {}", step);
        }
        // entries can only differ where a weight sits at the zero threshold
        let d = Dense::from_matrix(&m);
        for f in 0..m.n_features() {
            if warm.entry_step[f] != cold.entry_step[f] {
                let s = warm.entry_step[f].unwrap_or(usize::MAX).min(cold.entry_step[f].unwrap_or(usize::MAX));
                let (g, _) = common::gradient(&d, &warm.fits[s].weights, warm.fits[s].intercept);
                prop_assert!((g[f].abs() - warm.lambdas[s]).abs() < 1e-6, "feature {} step {}", f, s);
            }
        }
    }
}

#[test]
fn separable_data_stays_finite() {
    // feature 0 perfectly predicts the label
    let m = DesignMatrix::from_dense(
        &[vec![true], vec![true], vec![false], vec![false]],
        vec![true, true, false, false],
    )
    .unwrap();
    let r = fit(&FitProblem::new(&m, 0.001)).unwrap();
    assert!(r.converged);
    assert!(r.weights[0].is_finite() && r.weights[0] > 5.0);
    let d = Dense::from_matrix(&m);
    assert!(common::kkt(&d, &r.weights, r.intercept, 0.001) <= 1e-5);
}
