//! L1-regularized logistic regression with an unpenalized intercept.
//!
//! Minimizes
//!
//! ```text
//! (1/n) Σᵢ ℓ(aᵀxᵢ + b, yᵢ) + λ‖a‖₁,   ℓ(w, y) = −y·w + log(1 + eʷ)
//! ```
//!
//! over weights `a` and intercept `b` by cyclic proximal coordinate descent.
//! Each weight update is a soft-thresholded Newton step on one coordinate,
//! using the exact second derivative of the smooth part, accepted by a
//! backtracking line search; soft-thresholding gives exact zeros. When the
//! search fails, the step falls back to the quadratic majorizer (the
//! logistic loss has curvature at most 1/4 and `xᵢ ∈ {0,1}`, so column `f`
//! has curvature bound `|col f| / 4n`). The intercept takes a safeguarded
//! 1-D Newton step once per sweep. Sweeps alternate between the full
//! feature set and the current nonzero set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::featurize::DesignMatrix;

/// Intercept for all-0 / all-1 labels, where the unpenalized optimum is at
/// infinity.
pub const INTERCEPT_CLIP: f64 = 15.0;

/// Below this the intercept gradient is rounding noise and the step is
/// skipped, so that `λ = λ_max` reproduces the all-zero solution exactly.
const INTERCEPT_GRAD_FLOOR: f64 = 1e-13;

/// Sufficient-decrease fraction for the line searches.
const ARMIJO: f64 = 0.01;

/// Joint Newton steps are skipped above this many nonzero weights; the
/// dense solve would dominate the sweep.
/// Relative size below which a shrunk weight is cancellation noise.
const ROUNDING: f64 = 4.0 * f64::EPSILON;
const NEWTON_MAX_ACTIVE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverConfig {
    /// Stop when no parameter moves more than this in a full sweep and the
    /// optimality conditions hold to the same tolerance.
    pub tolerance: f64,
    /// Maximum number of sweeps.
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone)]
pub struct FitProblem<'a> {
    pub matrix: &'a DesignMatrix,
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub warm_start: Option<WarmStart>,
}

impl<'a> FitProblem<'a> {
    pub fn new(matrix: &'a DesignMatrix, lambda: f64) -> Self {
        Self::with_solver(matrix, lambda, &SolverConfig::default())
    }

    pub fn with_solver(matrix: &'a DesignMatrix, lambda: f64, solver: &SolverConfig) -> Self {
        Self {
            matrix,
            lambda,
            tolerance: solver.tolerance,
            max_iters: solver.max_iters,
            warm_start: None,
        }
    }

    pub fn warm(mut self, warm: WarmStart) -> Self {
        self.warm_start = Some(warm);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub objective: f64,
    /// Number of sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// All labels equal; weights are zero and the intercept is clipped.
    pub no_signal: bool,
    /// Largest violation of the optimality conditions at the returned point.
    pub kkt_violation: f64,
    /// Objective after initialization and after every sweep.
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

/// `log(1 + eʷ)` without overflow.
pub fn softplus(w: f64) -> f64 {
    w.max(0.0) + (-w.abs()).exp().ln_1p()
}

/// Negative log-likelihood `−y·w + log(1 + eʷ)` for a label in {0, 1}.
pub fn loss(w: f64, y: f64) -> f64 {
    softplus(w) - y * w
}

pub fn sigmoid(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `σ(aᵀx + b)` for a dense input.
pub fn predict_proba(weights: &[f64], intercept: f64, x: &[f64]) -> Result<f64> {
    if weights.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: x.len(),
        });
    }
    let margin: f64 = weights.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + intercept;
    Ok(sigmoid(margin))
}

pub fn margins(matrix: &DesignMatrix, weights: &[f64], intercept: f64) -> Vec<f64> {
    (0..matrix.n_rows())
        .map(|i| intercept + matrix.row(i).iter().map(|&f| weights[f as usize]).sum::<f64>())
        .collect()
}

/// Average loss plus `λ‖a‖₁`.
pub fn objective(matrix: &DesignMatrix, weights: &[f64], intercept: f64, lambda: f64) -> f64 {
    let m = margins(matrix, weights, intercept);
    smooth_loss(&m, matrix.labels()) + lambda * weights.iter().map(|w| w.abs()).sum::<f64>()
}

fn smooth_loss(margins: &[f64], labels: &[bool]) -> f64 {
    let n = margins.len() as f64;
    margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| loss(m, if y { 1.0 } else { 0.0 }))
        .sum::<f64>()
        / n
}

fn column_gradient(col: &[u32], probs: &[f64], labels: &[bool], n: f64) -> f64 {
    col.iter()
        .map(|&i| probs[i as usize] - if labels[i as usize] { 1.0 } else { 0.0 })
        .sum::<f64>()
        / n
}

/// Gradient of the smooth part: per-feature entries and the intercept entry.
pub fn smooth_gradient(matrix: &DesignMatrix, weights: &[f64], intercept: f64) -> (Vec<f64>, f64) {
    let probs: Vec<f64> = margins(matrix, weights, intercept).into_iter().map(sigmoid).collect();
    let n = matrix.n_rows() as f64;
    let grad = (0..matrix.n_features())
        .map(|f| column_gradient(matrix.column(f), &probs, matrix.labels(), n))
        .collect();
    let all: Vec<u32> = (0..matrix.n_rows() as u32).collect();
    let g_b = column_gradient(&all, &probs, matrix.labels(), n);
    (grad, g_b)
}

/// Largest violation of the first-order optimality conditions: `|g_f + λ
/// sign(a_f)|` for nonzero weights, `max(|g_f| − λ, 0)` for zero weights,
/// and `|g_b|` for the intercept.
pub fn kkt_violation(matrix: &DesignMatrix, weights: &[f64], intercept: f64, lambda: f64) -> f64 {
    let (grad, g_b) = smooth_gradient(matrix, weights, intercept);
    grad.iter()
        .zip(weights)
        .map(|(&g, &a)| {
            if a != 0.0 {
                (g + lambda * a.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(g_b.abs(), f64::max)
}

fn initial_intercept(matrix: &DesignMatrix) -> f64 {
    logit(matrix.label_mean()).clamp(-INTERCEPT_CLIP, INTERCEPT_CLIP)
}

/// Smallest λ for which `a = 0` is optimal: `max_f |g_f|` at `a = 0`,
/// `b = logit(mean y)`. Zero for constant labels.
pub fn lambda_max(matrix: &DesignMatrix) -> f64 {
    let pos = matrix.positives();
    if pos == 0 || pos == matrix.n_rows() {
        return 0.0;
    }
    let p = sigmoid(initial_intercept(matrix));
    let probs = vec![p; matrix.n_rows()];
    let n = matrix.n_rows() as f64;
    (0..matrix.n_features())
        .map(|f| column_gradient(matrix.column(f), &probs, matrix.labels(), n).abs())
        .fold(0.0, f64::max)
}

struct State<'a> {
    matrix: &'a DesignMatrix,
    lambda: f64,
    n: f64,
    weights: Vec<f64>,
    intercept: f64,
    margins: Vec<f64>,
    probs: Vec<f64>,
    curvature: Vec<f64>,
}

impl<'a> State<'a> {
    fn refresh(&mut self) {
        self.margins = margins(self.matrix, &self.weights, self.intercept);
        self.probs = self.margins.iter().map(|&m| sigmoid(m)).collect();
    }

    fn objective(&self) -> f64 {
        smooth_loss(&self.margins, self.matrix.labels())
            + self.lambda * self.weights.iter().map(|w| w.abs()).sum::<f64>()
    }

    /// Proximal coordinate Newton step with exact curvature and an Armijo
    /// backtracking search on the 1-D composite objective. If the search
    /// fails the majorizer step (curvature bound) is taken, which always
    /// descends.
    fn update_feature(&mut self, f: usize) -> f64 {
        let bound = self.curvature[f];
        if bound == 0.0 {
            return 0.0;
        }
        let col = self.matrix.column(f);
        let labels = self.matrix.labels();
        let g = column_gradient(col, &self.probs, labels, self.n);
        let h = col
            .iter()
            .map(|&i| {
                let p = self.probs[i as usize];
                p * (1.0 - p)
            })
            .sum::<f64>()
            / self.n;
        let old = self.weights[f];
        let prox = |h: f64| {
            let u = h * old - g;
            // within rounding of the threshold counts as on it
            if u.abs() <= self.lambda * (1.0 + ROUNDING) {
                0.0
            } else {
                (u - self.lambda * u.signum()) / h
            }
        };
        let newton = prox(h.max(1e-12));
        let mut new = newton;
        if newton != old {
            let d = newton - old;
            let decrease = g * d + self.lambda * (newton.abs() - old.abs());
            let change = |t: f64| {
                let w = old + t * d;
                col.iter()
                    .map(|&i| {
                        let m = self.margins[i as usize];
                        let y = if labels[i as usize] { 1.0 } else { 0.0 };
                        loss(m + t * d, y) - loss(m, y)
                    })
                    .sum::<f64>()
                    / self.n
                    + self.lambda * (w.abs() - old.abs())
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                if change(t) <= ARMIJO * t * decrease {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            new = if accepted { old + t * d } else { prox(bound) };
        }
        let delta = new - old;
        if delta != 0.0 {
            self.weights[f] = new;
            for &i in col {
                let i = i as usize;
                self.margins[i] += delta;
                self.probs[i] = sigmoid(self.margins[i]);
            }
        }
        delta.abs()
    }

    fn update_intercept(&mut self) -> f64 {
        let labels = self.matrix.labels();
        let g: f64 = self
            .probs
            .iter()
            .zip(labels)
            .map(|(&p, &y)| p - if y { 1.0 } else { 0.0 })
            .sum::<f64>()
            / self.n;
        if g.abs() <= INTERCEPT_GRAD_FLOOR {
            return 0.0;
        }
        let h: f64 = self.probs.iter().map(|&p| p * (1.0 - p)).sum::<f64>() / self.n;
        let step = g / h.max(1e-12);
        let shifted = |d: f64| {
            self.margins
                .iter()
                .zip(labels)
                .map(|(&m, &y)| loss(m + d, if y { 1.0 } else { 0.0 }))
                .sum::<f64>()
                / self.n
        };
        let base = shifted(0.0);
        let mut t = 1.0;
        for _ in 0..60 {
            let d = -t * step;
            if shifted(d) <= base {
                self.intercept += d;
                for (m, p) in self.margins.iter_mut().zip(self.probs.iter_mut()) {
                    *m += d;
                    *p = sigmoid(*m);
                }
                return d.abs();
            }
            t *= 0.5;
        }
        0.0
    }

    /// Joint Newton step on the nonzero weights and the intercept with the
    /// weights' signs held fixed, where the objective is smooth. Trial points
    /// are projected back onto the sign orthant (weights that would cross
    /// zero become zero) and accepted on sufficient decrease. Cyclic updates
    /// alone crawl along valleys where a feature column is nearly collinear
    /// with the intercept.
    fn newton_step(&mut self, active: &[usize]) -> f64 {
        if active.is_empty() || active.len() > NEWTON_MAX_ACTIVE {
            return 0.0;
        }
        let k = active.len();
        let labels = self.matrix.labels();
        let mut slot = vec![usize::MAX; self.weights.len()];
        for (j, &f) in active.iter().enumerate() {
            slot[f] = j;
        }
        // coordinates 0..k are the active weights, k is the intercept
        let mut hess = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut grad = DVector::<f64>::zeros(k + 1);
        let mut idx = Vec::new();
        for i in 0..self.matrix.n_rows() {
            let p = self.probs[i];
            let r = p - if labels[i] { 1.0 } else { 0.0 };
            let c = p * (1.0 - p);
            idx.clear();
            idx.extend(self.matrix.row(i).iter().map(|&f| slot[f as usize]).filter(|&j| j != usize::MAX));
            idx.push(k);
            for (a, &ja) in idx.iter().enumerate() {
                grad[ja] += r;
                for &jb in &idx[..=a] {
                    hess[(ja, jb)] += c;
                }
            }
        }
        for a in 0..=k {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        hess /= self.n;
        grad /= self.n;
        for (j, &f) in active.iter().enumerate() {
            grad[j] += self.lambda * self.weights[f].signum();
        }
        let ridge = 1e-10 * (1.0 + hess.diagonal().max());
        for a in 0..=k {
            hess[(a, a)] += ridge;
        }
        let Some(chol) = hess.cholesky() else {
            return 0.0;
        };
        let dir = chol.solve(&(-&grad));
        let slope = grad.dot(&dir);
        if !(slope < 0.0) || !dir.iter().all(|d| d.is_finite()) {
            return 0.0;
        }
        let base = self.objective();
        let old_w: Vec<f64> = active.iter().map(|&f| self.weights[f]).collect();
        let old_b = self.intercept;
        let mut t = 1.0;
        for _ in 0..30 {
            let trial: Vec<f64> = old_w
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let v = w + t * dir[j];
                    if v * w > 0.0 && v.abs() > ROUNDING * w.abs() { v } else { 0.0 }
                })
                .collect();
            for (j, &f) in active.iter().enumerate() {
                self.weights[f] = trial[j];
            }
            self.intercept = old_b + t * dir[k];
            self.refresh();
            let value = self.objective();
            if value <= base + ARMIJO * t * slope {
                // a decrease lost in rounding is drift along a flat valley
                // of a non-unique optimum, not progress
                if base - value <= ROUNDING * base.abs() {
                    break;
                }
                return trial
                    .iter()
                    .zip(&old_w)
                    .map(|(a, b)| (a - b).abs())
                    .fold((self.intercept - old_b).abs(), f64::max);
            }
            t *= 0.5;
        }
        for (j, &f) in active.iter().enumerate() {
            self.weights[f] = old_w[j];
        }
        self.intercept = old_b;
        self.refresh();
        0.0
    }

    fn sweep(&mut self, features: &[usize]) -> f64 {
        let mut max_change: f64 = 0.0;
        for &f in features {
            max_change = max_change.max(self.update_feature(f));
        }
        max_change.max(self.update_intercept())
    }

    fn active(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&f| self.weights[f] != 0.0).collect()
    }
}

pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    let matrix = problem.matrix;
    let lambda = problem.lambda;
    if matrix.n_rows() == 0 {
        return Err(Error::InvalidArgument("cannot fit on an empty design matrix".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if !(problem.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be > 0, got {}",
            problem.tolerance
        )));
    }
    let n_features = matrix.n_features();
    let pos = matrix.positives();
    if pos == 0 || pos == matrix.n_rows() {
        let weights = vec![0.0; n_features];
        let intercept = initial_intercept(matrix);
        let obj = objective(matrix, &weights, intercept, lambda);
        return Ok(FitResult {
            weights,
            intercept,
            objective: obj,
            iterations: 0,
            converged: true,
            no_signal: true,
            kkt_violation: 0.0,
            history: vec![obj],
        });
    }

    let (weights, intercept) = match &problem.warm_start {
        Some(w) => {
            if w.weights.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: w.weights.len(),
                });
            }
            (w.weights.clone(), w.intercept)
        }
        None => (vec![0.0; n_features], initial_intercept(matrix)),
    };
    let n = matrix.n_rows() as f64;
    let curvature = (0..n_features)
        .map(|f| matrix.column(f).len() as f64 / (4.0 * n))
        .collect();
    let mut st = State {
        matrix,
        lambda,
        n,
        weights,
        intercept,
        margins: Vec::new(),
        probs: Vec::new(),
        curvature,
    };
    st.refresh();

    let all: Vec<usize> = (0..n_features).collect();
    let mut history = vec![st.objective()];
    let mut iterations = 0;
    let mut converged = false;
    let tol = problem.tolerance;

    let record = |st: &State, history: &mut Vec<f64>| -> Result<()> {
        let obj = st.objective();
        if !obj.is_finite() || !st.intercept.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite objective at lambda {lambda} after {} sweeps",
                history.len()
            )));
        }
        history.push(obj);
        Ok(())
    };

    'outer: while iterations < problem.max_iters {
        st.refresh();
        let change = st.sweep(&all);
        iterations += 1;
        record(&st, &mut history)?;
        if change < tol && kkt_violation(matrix, &st.weights, st.intercept, lambda) <= tol {
            converged = true;
            break;
        }
        loop {
            if iterations >= problem.max_iters {
                break 'outer;
            }
            let active = st.active();
            let change = st.sweep(&active).max(st.newton_step(&active));
            iterations += 1;
            record(&st, &mut history)?;
            if change < tol {
                break;
            }
        }
    }

    let kkt = kkt_violation(matrix, &st.weights, st.intercept, lambda);
    let objective = objective(matrix, &st.weights, st.intercept, lambda);
    if !objective.is_finite() {
        return Err(Error::Numerical(format!("non-finite objective at lambda {lambda}")));
    }
    Ok(FitResult {
        weights: st.weights,
        intercept: st.intercept,
        objective,
        iterations,
        converged,
        no_signal: false,
        kkt_violation: kkt,
        history,
    })
}
