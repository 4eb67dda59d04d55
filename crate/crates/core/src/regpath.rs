//! Regularization path over a decreasing λ grid, and ranking of features by
//! the first grid step at which their weight becomes nonzero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::DesignMatrix;
use crate::sparse_glm::{fit, FitProblem, FitResult, SolverConfig, WarmStart};

/// Weights at or below this magnitude count as zero.
pub const ZERO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathConfig {
    /// Number of steps after the first; the grid has `k + 1` values.
    pub k: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub spacing: Spacing,
    /// Initialize each fit from the previous step's solution.
    pub warm_start: bool,
    pub zero_eps: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            k: 100,
            lambda_start: 0.1,
            lambda_end: 0.001,
            spacing: Spacing::Linear,
            warm_start: true,
            zero_eps: ZERO_EPS,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidArgument("path k must be at least 1".into()));
        }
        if !(self.lambda_end > 0.0 && self.lambda_start > self.lambda_end && self.lambda_start.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "path requires lambda_start > lambda_end > 0, got {} and {}",
                self.lambda_start, self.lambda_end
            )));
        }
        Ok(())
    }

    /// The `k + 1` strictly decreasing grid values, endpoints exact.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (a, b, k) = (self.lambda_start, self.lambda_end, self.k);
        let mut out: Vec<f64> = (0..=k)
            .map(|i| {
                let t = i as f64 / k as f64;
                match self.spacing {
                    Spacing::Linear => a + (b - a) * t,
                    Spacing::Log => (a.ln() + (b.ln() - a.ln()) * t).exp(),
                }
            })
            .collect();
        out[0] = a;
        out[k] = b;
        Ok(out)
    }
}

/// Features sharing an entry step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankGroup {
    /// 1-based dense rank.
    pub rank: usize,
    pub step: usize,
    /// Ordered by |weight at entry| descending, then id.
    pub features: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
    pub entry_step: Vec<Option<usize>>,
    pub ranking: Vec<RankGroup>,
    /// At least one step did not converge.
    pub warning: bool,
}

impl PathResult {
    /// Rank of a feature, if it entered the path.
    pub fn rank_of(&self, feature: usize) -> Option<usize> {
        self.ranking
            .iter()
            .find(|g| g.features.contains(&feature))
            .map(|g| g.rank)
    }

    /// All ranked features, best first.
    pub fn ranked_features(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ranking
            .iter()
            .flat_map(|g| g.features.iter().map(move |&f| (g.rank, f)))
    }

    pub fn weight_at_entry(&self, feature: usize) -> Option<f64> {
        self.entry_step[feature].map(|s| self.fits[s].weights[feature])
    }
}

/// Features with `|a_f| > zero_eps`.
pub fn zero_eps_check(fit: &FitResult, zero_eps: f64) -> Vec<usize> {
    fit.weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.abs() > zero_eps)
        .map(|(f, _)| f)
        .collect()
}

pub fn run_path(matrix: &DesignMatrix, config: &PathConfig, solver: &SolverConfig) -> Result<PathResult> {
    let lambdas = config.lambdas()?;
    let pos = matrix.positives();
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyScope);
    }
    if pos == 0 || pos == matrix.n_rows() {
        return Err(Error::NoContrastiveSignal);
    }
    let mut fits: Vec<FitResult> = Vec::with_capacity(lambdas.len());
    for (step, &lambda) in lambdas.iter().enumerate() {
        let mut problem = FitProblem::with_solver(matrix, lambda, solver);
        if config.warm_start {
            if let Some(prev) = fits.last() {
                problem = problem.warm(WarmStart {
                    weights: prev.weights.clone(),
                    intercept: prev.intercept,
                });
            }
        }
        let result = fit(&problem)?;
        if !result.converged {
            log::warn!(
                "solver did not converge at step {step} (lambda {lambda}) after {} sweeps",
                result.iterations
            );
        }
        log::debug!(
            "step {step}: lambda {lambda:.6} active {} sweeps {}",
            result.nonzero_count(),
            result.iterations
        );
        fits.push(result);
    }
    let warning = fits.iter().any(|f| !f.converged);
    let entry_step = entry_steps(&fits, matrix.n_features(), config.zero_eps);
    let ranking = rank_by_entry(&fits, &entry_step);
    Ok(PathResult {
        lambdas,
        fits,
        entry_step,
        ranking,
        warning,
    })
}

/// First step at which each feature is nonzero.
pub fn entry_steps(fits: &[FitResult], n_features: usize, zero_eps: f64) -> Vec<Option<usize>> {
    let mut entry = vec![None; n_features];
    for (step, fit) in fits.iter().enumerate() {
        for f in zero_eps_check(fit, zero_eps) {
            if entry[f].is_none() {
                entry[f] = Some(step);
            }
        }
    }
    entry
}

pub fn rank_by_entry(fits: &[FitResult], entry_step: &[Option<usize>]) -> Vec<RankGroup> {
    let mut by_step: Vec<Vec<usize>> = vec![Vec::new(); fits.len()];
    for (f, s) in entry_step.iter().enumerate() {
        if let Some(s) = s {
            by_step[*s].push(f);
        }
    }
    let mut groups = Vec::new();
    for (step, mut features) in by_step.into_iter().enumerate() {
        if features.is_empty() {
            continue;
        }
        let w = &fits[step].weights;
        features.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
        groups.push(RankGroup {
            rank: groups.len() + 1,
            step,
            features,
        });
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_with(weights: Vec<f64>) -> FitResult {
        FitResult {
            weights,
            intercept: 0.0,
            objective: 0.0,
            iterations: 1,
            converged: true,
            no_signal: false,
            kkt_violation: 0.0,
            history: vec![],
        }
    }

    #[test]
    fn grid_linear_and_log() {
        let lin = PathConfig::default().lambdas().unwrap();
        assert_eq!(lin.len(), 101);
        assert_eq!(lin[0], 0.1);
        assert_eq!(lin[100], 0.001);
        assert!((lin[1] - 0.09901).abs() < 1e-15);
        assert!(lin.windows(2).all(|w| w[0] > w[1]));

        let log = PathConfig {
            spacing: Spacing::Log,
            k: 2,
            ..PathConfig::default()
        }
        .lambdas()
        .unwrap();
        assert_eq!(log[0], 0.1);
        assert!((log[1] - 0.01).abs() < 1e-15);
        assert_eq!(log[2], 0.001);
    }

    #[test]
    fn grid_validation() {
        for bad in [
            PathConfig { k: 0, ..PathConfig::default() },
            PathConfig { lambda_end: 0.2, ..PathConfig::default() },
            PathConfig { lambda_end: 0.0, ..PathConfig::default() },
        ] {
            assert!(bad.lambdas().is_err());
        }
    }

    #[test]
    fn zero_eps_threshold() {
        assert!(zero_eps_check(&fit_with(vec![0.0; 3]), ZERO_EPS).is_empty());
        assert_eq!(zero_eps_check(&fit_with(vec![1e-12, -0.5, 2e-9]), ZERO_EPS), vec![1, 2]);
    }

    #[test]
    fn entry_and_ranking_with_ties_and_reentry() {
        let fits = vec![
            fit_with(vec![0.0, 0.0, 0.0, 0.0]),
            fit_with(vec![0.0, 0.2, -0.7, 0.0]),
            fit_with(vec![0.0, 0.0, -0.9, 0.0]),
            fit_with(vec![0.1, 0.3, -1.0, 0.0]),
        ];
        let entry = entry_steps(&fits, 4, ZERO_EPS);
        // feature 1 exits at step 2 and comes back: still entered at 1
        assert_eq!(entry, vec![Some(3), Some(1), Some(1), None]);
        let groups = rank_by_entry(&fits, &entry);
        assert_eq!(groups.len(), 2);
        assert_eq!((groups[0].rank, groups[0].step), (1, 1));
        assert_eq!(groups[0].features, vec![2, 1]);
        assert_eq!((groups[1].rank, groups[1].step, groups[1].features.clone()), (2, 3, vec![0]));
    }

    #[test]
    fn degenerate_path_rejected() {
        let m = DesignMatrix::from_rows(1, vec![vec![0], vec![]], vec![true, true]).unwrap();
        assert!(matches!(
            run_path(&m, &PathConfig::default(), &SolverConfig::default()),
            Err(Error::NoContrastiveSignal)
        ));
    }
}
