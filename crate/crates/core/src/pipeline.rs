//! End-to-end orchestration: treebanks → instances → features → path →
//! rule records.

use rayon::prelude::*;

use crate::config::{JobConfig, RunConfig};
use crate::error::{Error, Result};
use crate::featurize::{DesignMatrix, FeatureConfig, FeatureSpace, Featurizer};
use crate::query::{extract_instances, scope_counts, ScopeCounts};
use crate::regpath::{run_path, PathConfig, PathResult};
use crate::rulestats::{compute_rule, spearman, RankComparison, RuleRecord};
use crate::sparse_glm::SolverConfig;
use crate::treebank::{parse_file, ParseOptions, Treebank};

/// Per-file parse statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CorpusFile {
    pub path: String,
    pub sentences: usize,
    pub tokens: usize,
    pub rejected: usize,
    pub multi_root: usize,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub treebank: Treebank,
    pub files: Vec<CorpusFile>,
}

/// Parses every configured treebank; sentences are concatenated in config
/// order. Rejected sentences are logged and kept as diagnostics.
pub fn load_corpus(config: &RunConfig) -> Result<Corpus> {
    let mut parts = Vec::new();
    let mut files = Vec::new();
    for (name, path) in config.treebanks.iter().zip(&config.treebank_paths) {
        let tb = parse_file(path, &ParseOptions { source: Some(name.clone()) })?;
        for d in &tb.diagnostics {
            log::warn!("{}:{}: {}", d.file, d.line, d.message);
        }
        log::info!(
            "{name}: {} sentences, {} tokens, {} rejected",
            tb.sentence_count(),
            tb.token_count(),
            tb.rejected_count()
        );
        files.push(CorpusFile {
            path: name.clone(),
            sentences: tb.sentence_count(),
            tokens: tb.token_count(),
            rejected: tb.rejected_count(),
            multi_root: tb.multi_root_count(),
        });
        parts.push(tb);
    }
    Ok(Corpus {
        treebank: Treebank::concat(parts),
        files,
    })
}

#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub job: JobConfig,
    pub scope: ScopeCounts,
    pub space: FeatureSpace,
    pub matrix: DesignMatrix,
    pub path: PathResult,
    /// One record per feature that entered the path, in path-rank order.
    pub rules: Vec<RuleRecord>,
    /// `None` when fewer than three rules or a constant ranking.
    pub rank_comparison: Option<RankComparison>,
}

pub fn run_job(
    treebank: &Treebank,
    job: &JobConfig,
    features: &FeatureConfig,
    path: &PathConfig,
    solver: &SolverConfig,
) -> Result<JobOutcome> {
    let instances = extract_instances(treebank, &job.scope, &job.response);
    let scope = scope_counts(&instances)?;
    log::info!(
        "job {}: {} instances in scope, base rate {:.4}",
        job.name,
        scope.n_scope,
        scope.mu
    );
    if scope.n_positive == 0 || scope.n_positive == scope.n_scope {
        return Err(Error::NoContrastiveSignal);
    }
    let featurizer = Featurizer::new(features.clone(), &job.response);
    let (space, matrix) = featurizer.featurize(treebank, &instances)?;
    log::info!("job {}: {} features", job.name, space.len());
    let path_result = run_path(&matrix, path, solver)?;
    let ranked: Vec<(usize, usize)> = path_result.ranked_features().collect();
    let rules = ranked
        .par_iter()
        .map(|&(rank, f)| compute_rule(space.feature(f), &matrix, rank))
        .collect::<Result<Vec<_>>>()?;
    let rank_comparison = compare_rankings(&rules);
    Ok(JobOutcome {
        job: job.clone(),
        scope,
        space,
        matrix,
        path: path_result,
        rules,
        rank_comparison,
    })
}

/// Spearman correlation between path rank (ascending) and G (descending)
/// over the rules that entered the path; positive ρ means agreement.
pub fn compare_rankings(rules: &[RuleRecord]) -> Option<RankComparison> {
    let by_path: Vec<f64> = rules.iter().map(|r| r.path_rank as f64).collect();
    let by_g: Vec<f64> = rules.iter().map(|r| -r.g).collect();
    spearman(&by_path, &by_g).ok()
}

/// Runs all jobs concurrently on a shared corpus. Results keep job order.
pub fn run_jobs(corpus: &Corpus, config: &RunConfig) -> Vec<Result<JobOutcome>> {
    config
        .jobs
        .par_iter()
        .map(|job| run_job(&corpus.treebank, job, &config.features, &config.path, &config.solver))
        .collect()
}
