//! Machine (JSON) and human (Markdown) reports for one job.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{JobConfig, ReportOptions, RunConfig, SortKey};
use crate::error::Result;
use crate::featurize::FeatureConfig;
use crate::pipeline::{CorpusFile, JobOutcome};
use crate::regpath::PathConfig;
use crate::rulestats::{RankComparison, RuleRecord};
use crate::sparse_glm::SolverConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Rejection diagnostics copied into the report; the rest are counted.
const MAX_DIAGNOSTICS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub job: String,
    /// SHA-256 of the effective job configuration.
    pub config_hash: String,
    pub corpus: CorpusSummary,
    pub scope: ScopeSummary,
    pub features: FeatureSummary,
    pub path: PathSummary,
    pub rank_comparison: Option<RankComparison>,
    pub rules: Vec<ReportRule>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub files: Vec<CorpusFile>,
    pub sentences: usize,
    pub tokens: usize,
    pub rejected: usize,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScopeSummary {
    pub scope: String,
    pub response: String,
    /// #(S)
    pub n_scope: usize,
    /// #(S ∧ Q)
    pub n_positive: usize,
    /// Base rate of the response in scope.
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeatureSummary {
    pub count: usize,
    pub leak_filter: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathStep {
    pub step: usize,
    pub lambda: f64,
    pub active: usize,
    pub converged: bool,
    pub iterations: usize,
    pub intercept: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSummary {
    /// Some step hit the iteration limit.
    pub warning: bool,
    pub steps: Vec<PathStep>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRule {
    #[serde(flatten)]
    pub record: RuleRecord,
    pub entry_step: usize,
    pub entry_lambda: f64,
    pub weight_at_entry: f64,
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    schema_version: u32,
    treebanks: &'a [String],
    job: &'a JobConfig,
    features: &'a FeatureConfig,
    path: &'a PathConfig,
    solver: &'a SolverConfig,
    report: &'a ReportOptions,
}

pub fn config_hash(config: &RunConfig, job: &JobConfig) -> String {
    let hashed = HashedConfig {
        schema_version: SCHEMA_VERSION,
        treebanks: &config.treebanks,
        job,
        features: &config.features,
        path: &config.path,
        solver: &config.solver,
        report: &config.report,
    };
    let bytes = serde_json::to_vec(&hashed).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sorts, filters and truncates rules per the report options.
pub fn select_rules(rules: Vec<ReportRule>, options: &ReportOptions) -> Vec<ReportRule> {
    let mut rules: Vec<ReportRule> = rules
        .into_iter()
        .filter(|r| !options.significant_only || r.record.significant)
        .collect();
    if options.sort == SortKey::Gtest {
        // stable: ties keep path order
        rules.sort_by(|a, b| b.record.g.total_cmp(&a.record.g));
    }
    if let Some(k) = options.top_k {
        rules.truncate(k);
    }
    rules
}

impl Report {
    pub fn build(config: &RunConfig, files: &[CorpusFile], diagnostics: &[String], outcome: &JobOutcome) -> Self {
        let path = &outcome.path;
        let rules = outcome
            .rules
            .iter()
            .map(|r| {
                let step = path.entry_step[r.feature].expect("ranked features entered the path");
                ReportRule {
                    record: r.clone(),
                    entry_step: step,
                    entry_lambda: path.lambdas[step],
                    weight_at_entry: path.fits[step].weights[r.feature],
                }
            })
            .collect();
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            job: outcome.job.name.clone(),
            config_hash: config_hash(config, &outcome.job),
            corpus: CorpusSummary {
                files: files.to_vec(),
                sentences: files.iter().map(|f| f.sentences).sum(),
                tokens: files.iter().map(|f| f.tokens).sum(),
                rejected: files.iter().map(|f| f.rejected).sum(),
                diagnostics: diagnostics.iter().take(MAX_DIAGNOSTICS).cloned().collect(),
            },
            scope: ScopeSummary {
                scope: outcome.job.scope.to_string(),
                response: outcome.job.response.to_string(),
                n_scope: outcome.scope.n_scope,
                n_positive: outcome.scope.n_positive,
                mu: outcome.scope.mu,
            },
            features: FeatureSummary {
                count: outcome.space.len(),
                leak_filter: outcome.space.leak_filter.iter().cloned().collect(),
            },
            path: PathSummary {
                warning: path.warning,
                steps: path
                    .fits
                    .iter()
                    .enumerate()
                    .map(|(step, fit)| PathStep {
                        step,
                        lambda: path.lambdas[step],
                        active: fit.weights.iter().filter(|w| w.abs() > config.path.zero_eps).count(),
                        converged: fit.converged,
                        iterations: fit.iterations,
                        intercept: fit.intercept,
                        objective: fit.objective,
                    })
                    .collect(),
            },
            rank_comparison: outcome.rank_comparison,
            rules: select_rules(rules, &config.report),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let s = &self.scope;
        let _ = writeln!(out, "# {}\n", self.job);
        let _ = writeln!(out, "- scope: `{}`", s.scope);
        let _ = writeln!(out, "- response: `{}`", s.response);
        let _ = writeln!(
            out,
            "- #(S) = {}, #(S∧Q) = {}, μ = {:.4}",
            s.n_scope, s.n_positive, s.mu
        );
        let _ = writeln!(
            out,
            "- corpus: {} sentences, {} tokens, {} rejected",
            self.corpus.sentences, self.corpus.tokens, self.corpus.rejected
        );
        let leak = if self.features.leak_filter.is_empty() {
            "none".to_string()
        } else {
            self.features.leak_filter.join(", ")
        };
        let _ = writeln!(out, "- features: {} (filtered: {leak})", self.features.count);
        match &self.rank_comparison {
            Some(c) => {
                let _ = writeln!(
                    out,
                    "- path rank vs G: Spearman ρ = {:.3} (p = {:.3e}, {} rules)",
                    c.rho, c.p_value, c.n_items
                );
            }
            None => out.push_str("- path rank vs G: n/a\n"),
        }
        if self.path.warning {
            out.push_str("- warning: the solver did not converge at some path steps\n");
        }
        let _ = writeln!(out, "- config: `{}`\n", self.config_hash);
        if self.rules.is_empty() {
            out.push_str("No rules.\n");
            return out;
        }
        out.push_str("| rank | pattern | direction | n | α | precision | coverage | G | p | φc |\n");
        out.push_str("|---:|---|:---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for r in &self.rules {
            let r = &r.record;
            let _ = writeln!(
                out,
                "| {} | `{}` | {} | {} | {:.3} | {:.1}% | {:.1}% | {:.2} | {:.2e}{} | {:.3} |",
                r.path_rank,
                r.pattern.replace('|', "\\|"),
                r.direction.as_str(),
                r.n,
                r.alpha,
                100.0 * r.precision,
                100.0 * r.coverage,
                r.g,
                r.p_value,
                if r.significant { "*" } else { "" },
                r.phi_c,
            );
        }
        out
    }
}
