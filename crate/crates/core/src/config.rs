//! Declarative run configuration (TOML).
//!
//! ```toml
//! treebanks = ["fr_gsd-sud-train.conllu"]   # relative to the config file
//!
//! [[jobs]]
//! name = "adj_noun_order"
//! scope = { dep = { upos = "ADJ" }, gov = { upos = "NOUN" } }
//! response = { order = "gov_after_dep" }
//!
//! [[jobs]]
//! name = "number_agreement"
//! response = { agreement = "Number" }
//!
//! [features]      # all optional
//! min_count = 5
//!
//! [path]
//! k = 100
//! lambda_start = 0.1
//! lambda_end = 0.001
//! spacing = "linear"
//! ```
//!
//! A single job may also be declared with top-level `name`, `scope` and
//! `response` keys. Validation reports every problem found, not just the
//! first one.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{ConfigIssue, Error, Result};
use crate::featurize::FeatureConfig;
use crate::query::{NodeRole, OrderDirection, ResponsePattern, ScopeConstraint, ScopePattern};
use crate::regpath::{PathConfig, Spacing};
use crate::sparse_glm::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SortKey {
    /// Path rank, then |weight| at entry.
    Path,
    /// G statistic, descending.
    Gtest,
}

impl std::str::FromStr for SortKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "path" => Ok(SortKey::Path),
            "gtest" => Ok(SortKey::Gtest),
            other => Err(format!("unknown sort key {other:?}, expected \"path\" or \"gtest\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportOptions {
    pub significant_only: bool,
    pub sort: SortKey,
    /// `None` keeps every rule.
    pub top_k: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            significant_only: false,
            sort: SortKey::Path,
            top_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobConfig {
    pub name: String,
    pub scope: ScopePattern,
    pub response: ResponsePattern,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Treebank paths as written in the config.
    pub treebanks: Vec<String>,
    #[serde(skip)]
    pub treebank_paths: Vec<PathBuf>,
    /// Report directory, relative to the config file. The CLI's `--out`
    /// takes precedence.
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    pub jobs: Vec<JobConfig>,
    pub features: FeatureConfig,
    pub path: PathConfig,
    pub solver: SolverConfig,
    pub report: ReportOptions,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        validate_config(&raw, base)
    }
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            field: field.into(),
            message: message.into(),
        });
    }

    fn unknown_keys(&mut self, table: &Table, prefix: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.push(
                    join(prefix, key),
                    format!("unknown key (expected one of: {})", allowed.join(", ")),
                );
            }
        }
    }

    fn table<'t>(&mut self, v: &'t Value, field: &str) -> Option<&'t Table> {
        match v {
            Value::Table(t) => Some(t),
            other => {
                self.push(field, format!("expected a table, found {}", other.type_str()));
                None
            }
        }
    }

    fn string<'t>(&mut self, v: &'t Value, field: &str) -> Option<&'t str> {
        match v {
            Value::String(s) if !s.is_empty() => Some(s),
            Value::String(_) => {
                self.push(field, "must not be empty");
                None
            }
            other => {
                self.push(field, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn bool(&mut self, v: &Value, field: &str) -> Option<bool> {
        match v {
            Value::Boolean(b) => Some(*b),
            other => {
                self.push(field, format!("expected a boolean, found {}", other.type_str()));
                None
            }
        }
    }

    fn uint(&mut self, v: &Value, field: &str, min: i64) -> Option<usize> {
        match v {
            Value::Integer(i) if *i >= min => Some(*i as usize),
            Value::Integer(i) => {
                self.push(field, format!("must be at least {min}, got {i}"));
                None
            }
            other => {
                self.push(field, format!("expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn positive_f64(&mut self, v: &Value, field: &str) -> Option<f64> {
        let x = match v {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            other => {
                self.push(field, format!("expected a number, found {}", other.type_str()));
                return None;
            }
        };
        if !(x > 0.0) || !x.is_finite() {
            self.push(field, format!("must be a positive finite number, got {x}"));
            return None;
        }
        Some(x)
    }

    fn string_set(&mut self, v: &Value, field: &str) -> Option<BTreeSet<String>> {
        let Value::Array(items) = v else {
            self.push(field, format!("expected an array of strings, found {}", v.type_str()));
            return None;
        };
        let mut out = BTreeSet::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            match self.string(item, &format!("{field}[{i}]")) {
                Some(s) => {
                    out.insert(s.to_string());
                }
                None => ok = false,
            }
        }
        ok.then_some(out)
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Parses and validates a configuration. Relative treebank paths are
/// resolved against `base_dir` and must exist.
pub fn validate_config(raw: &str, base_dir: &Path) -> Result<RunConfig> {
    let root: Table = raw.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![ConfigIssue {
            field: "<syntax>".into(),
            message: e.message().to_string(),
        }])
    })?;
    let mut iss = Issues(Vec::new());
    iss.unknown_keys(
        &root,
        "",
        &["treebanks", "out_dir", "name", "scope", "response", "jobs", "features", "path", "solver", "report"],
    );

    let mut treebanks = Vec::new();
    let mut treebank_paths = Vec::new();
    match root.get("treebanks") {
        None => iss.push("treebanks", "missing: at least one CoNLL-U file is required"),
        Some(v) => {
            let list: Vec<Value> = match v {
                Value::String(_) => vec![v.clone()],
                Value::Array(a) => a.clone(),
                other => {
                    iss.push("treebanks", format!("expected an array of paths, found {}", other.type_str()));
                    Vec::new()
                }
            };
            if matches!(v, Value::Array(a) if a.is_empty()) {
                iss.push("treebanks", "must list at least one file");
            }
            for (i, item) in list.iter().enumerate() {
                let field = format!("treebanks[{i}]");
                if let Some(p) = iss.string(item, &field) {
                    let resolved = base_dir.join(p);
                    if !resolved.is_file() {
                        iss.push(field, format!("file not found: {}", resolved.display()));
                    }
                    treebanks.push(p.to_string());
                    treebank_paths.push(resolved);
                }
            }
        }
    }

    let out_dir = root
        .get("out_dir")
        .and_then(|v| iss.string(v, "out_dir"))
        .map(|p| base_dir.join(p));

    let mut jobs = Vec::new();
    let top_level = root.contains_key("scope") || root.contains_key("response") || root.contains_key("name");
    match (top_level, root.get("jobs")) {
        (true, Some(_)) => iss.push("jobs", "declare either [[jobs]] or top-level scope/response, not both"),
        (true, None) => {
            if let Some(job) = parse_job(&root, "", &mut iss, true) {
                jobs.push(job);
            }
        }
        (false, None) => iss.push("response", "missing: no job declared"),
        (false, Some(Value::Array(items))) => {
            if items.is_empty() {
                iss.push("jobs", "must declare at least one job");
            }
            for (i, item) in items.iter().enumerate() {
                let prefix = format!("jobs[{i}]");
                if let Some(t) = iss.table(item, &prefix) {
                    iss.unknown_keys(t, &prefix, &["name", "scope", "response"]);
                    if let Some(job) = parse_job(t, &prefix, &mut iss, false) {
                        jobs.push(job);
                    }
                }
            }
        }
        (false, Some(other)) => iss.push("jobs", format!("expected an array of tables, found {}", other.type_str())),
    }
    let mut seen = BTreeSet::new();
    for (i, job) in jobs.iter().enumerate() {
        if !seen.insert(job.name.clone()) {
            iss.push(format!("jobs[{i}].name"), format!("duplicate job name {:?}", job.name));
        }
    }

    let features = root
        .get("features")
        .and_then(|v| iss.table(v, "features"))
        .map(|t| parse_features(t, &mut iss))
        .unwrap_or_default();
    let path = root
        .get("path")
        .and_then(|v| iss.table(v, "path"))
        .map(|t| parse_path(t, &mut iss))
        .unwrap_or_default();
    let solver = root
        .get("solver")
        .and_then(|v| iss.table(v, "solver"))
        .map(|t| parse_solver(t, &mut iss))
        .unwrap_or_default();
    let report = root
        .get("report")
        .and_then(|v| iss.table(v, "report"))
        .map(|t| parse_report(t, &mut iss))
        .unwrap_or_default();

    if !iss.0.is_empty() {
        return Err(Error::Config(iss.0));
    }
    Ok(RunConfig {
        treebanks,
        treebank_paths,
        out_dir,
        jobs,
        features,
        path,
        solver,
        report,
    })
}

fn valid_job_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.')
}

fn parse_job(t: &Table, prefix: &str, iss: &mut Issues, top_level: bool) -> Option<JobConfig> {
    let name = match t.get("name") {
        Some(v) => iss.string(v, &join(prefix, "name")).map(str::to_string),
        None if top_level => Some("rules".to_string()),
        None => {
            iss.push(join(prefix, "name"), "missing");
            None
        }
    };
    if let Some(n) = &name {
        if !valid_job_name(n) {
            iss.push(join(prefix, "name"), format!("{n:?} must use only letters, digits, '_', '-' or '.'"));
        }
    }
    let scope = match t.get("scope") {
        None => Some(ScopePattern::default()),
        Some(v) => iss
            .table(v, &join(prefix, "scope"))
            .and_then(|s| parse_scope(s, &join(prefix, "scope"), iss)),
    };
    let response = match t.get("response") {
        None => {
            iss.push(join(prefix, "response"), "missing");
            None
        }
        Some(v) => iss
            .table(v, &join(prefix, "response"))
            .and_then(|r| parse_response(r, &join(prefix, "response"), iss)),
    };
    Some(JobConfig {
        name: name?,
        scope: scope?,
        response: response?,
    })
}

fn parse_scope(t: &Table, prefix: &str, iss: &mut Issues) -> Option<ScopePattern> {
    iss.unknown_keys(t, prefix, &["dep", "gov", "edge"]);
    let before = iss.0.len();
    let mut constraints = Vec::new();
    for (key, role) in [("dep", NodeRole::Dep), ("gov", NodeRole::Gov)] {
        let field = join(prefix, key);
        if let Some(node) = t.get(key).and_then(|v| iss.table(v, &field)) {
            for (attr, value) in node {
                let f = join(&field, attr);
                if attr == "form" {
                    iss.push(f, "the form attribute is not supported");
                    continue;
                }
                if let Some(v) = iss.string(value, &f) {
                    constraints.push(ScopeConstraint::node(role, attr, v));
                }
            }
        }
    }
    let field = join(prefix, "edge");
    if let Some(edge) = t.get("edge").and_then(|v| iss.table(v, &field)) {
        iss.unknown_keys(edge, &field, &["deprel"]);
        if let Some(v) = edge.get("deprel").and_then(|v| iss.string(v, &join(&field, "deprel"))) {
            constraints.push(ScopeConstraint::edge_deprel(v));
        }
    }
    (iss.0.len() == before).then(|| ScopePattern::new(constraints).expect("roles restricted to dep/gov"))
}

fn parse_response(t: &Table, prefix: &str, iss: &mut Issues) -> Option<ResponsePattern> {
    iss.unknown_keys(t, prefix, &["order", "agreement"]);
    match (t.get("order"), t.get("agreement")) {
        (Some(_), Some(_)) => {
            iss.push(prefix, "two responses declared; use exactly one of order or agreement");
            None
        }
        (None, None) => {
            if t.is_empty() {
                iss.push(prefix, "must declare one of order or agreement");
            }
            None
        }
        (Some(v), None) => {
            let f = join(prefix, "order");
            match iss.string(v, &f)? {
                "gov_before_dep" => Some(ResponsePattern::Order(OrderDirection::GovBeforeDep)),
                "gov_after_dep" => Some(ResponsePattern::Order(OrderDirection::GovAfterDep)),
                other => {
                    iss.push(f, format!("unknown order {other:?}, expected gov_before_dep or gov_after_dep"));
                    None
                }
            }
        }
        (None, Some(v)) => {
            let key = iss.string(v, &join(prefix, "agreement"))?;
            Some(ResponsePattern::Agreement(key.to_string()))
        }
    }
}

fn parse_features(t: &Table, iss: &mut Issues) -> FeatureConfig {
    let p = "features";
    iss.unknown_keys(
        t,
        p,
        &[
            "min_count",
            "closed_class_pos",
            "upos_groups",
            "pairing",
            "extra_leak",
            "exclude_deprels",
            "max_features",
        ],
    );
    let mut c = FeatureConfig::default();
    if let Some(v) = t.get("min_count").and_then(|v| iss.uint(v, "features.min_count", 1)) {
        c.min_count = v;
    }
    if let Some(v) = t.get("closed_class_pos").and_then(|v| iss.string_set(v, "features.closed_class_pos")) {
        c.closed_class_pos = v;
    }
    if let Some(groups) = t.get("upos_groups").and_then(|v| iss.table(v, "features.upos_groups")) {
        let mut out = BTreeMap::new();
        for (name, tags) in groups {
            let f = format!("features.upos_groups.{name}");
            if let Some(set) = iss.string_set(tags, &f) {
                out.insert(name.clone(), set);
            }
        }
        c.upos_groups = out;
    }
    if let Some(v) = t.get("pairing").and_then(|v| iss.bool(v, "features.pairing")) {
        c.pairing = v;
    }
    if let Some(v) = t.get("extra_leak").and_then(|v| iss.string_set(v, "features.extra_leak")) {
        c.extra_leak = v;
    }
    if let Some(v) = t.get("exclude_deprels").and_then(|v| iss.string_set(v, "features.exclude_deprels")) {
        c.exclude_deprels = v;
    }
    if let Some(v) = t.get("max_features").and_then(|v| iss.uint(v, "features.max_features", 1)) {
        c.max_features = Some(v);
    }
    c
}

fn parse_path(t: &Table, iss: &mut Issues) -> PathConfig {
    iss.unknown_keys(t, "path", &["k", "lambda_start", "lambda_end", "spacing", "warm_start"]);
    let mut c = PathConfig::default();
    if let Some(v) = t.get("k").and_then(|v| iss.uint(v, "path.k", 1)) {
        c.k = v;
    }
    let start = t.get("lambda_start").and_then(|v| iss.positive_f64(v, "path.lambda_start"));
    let end = t.get("lambda_end").and_then(|v| iss.positive_f64(v, "path.lambda_end"));
    if let Some(v) = start {
        c.lambda_start = v;
    }
    if let Some(v) = end {
        c.lambda_end = v;
    }
    if c.lambda_start <= c.lambda_end {
        iss.push(
            "path.lambda_end",
            format!("must be smaller than lambda_start ({} <= {})", c.lambda_start, c.lambda_end),
        );
    }
    if let Some(v) = t.get("spacing").and_then(|v| iss.string(v, "path.spacing")) {
        match v {
            "linear" => c.spacing = Spacing::Linear,
            "log" => c.spacing = Spacing::Log,
            other => iss.push("path.spacing", format!("unknown spacing {other:?}, expected linear or log")),
        }
    }
    if let Some(v) = t.get("warm_start").and_then(|v| iss.bool(v, "path.warm_start")) {
        c.warm_start = v;
    }
    c
}

fn parse_solver(t: &Table, iss: &mut Issues) -> SolverConfig {
    iss.unknown_keys(t, "solver", &["tolerance", "max_iters"]);
    let mut c = SolverConfig::default();
    if let Some(v) = t.get("tolerance").and_then(|v| iss.positive_f64(v, "solver.tolerance")) {
        c.tolerance = v;
    }
    if let Some(v) = t.get("max_iters").and_then(|v| iss.uint(v, "solver.max_iters", 1)) {
        c.max_iters = v;
    }
    c
}

fn parse_report(t: &Table, iss: &mut Issues) -> ReportOptions {
    iss.unknown_keys(t, "report", &["significant_only", "sort", "top_k"]);
    let mut c = ReportOptions::default();
    if let Some(v) = t.get("significant_only").and_then(|v| iss.bool(v, "report.significant_only")) {
        c.significant_only = v;
    }
    if let Some(v) = t.get("sort").and_then(|v| iss.string(v, "report.sort")) {
        match v.parse() {
            Ok(s) => c.sort = s,
            Err(m) => iss.push("report.sort", m),
        }
    }
    if let Some(v) = t.get("top_k").and_then(|v| iss.uint(v, "report.top_k", 0)) {
        c.top_k = Some(v);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir_with_treebank() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("tb.conllu"), "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n").unwrap();
        dir
    }

    fn issues(raw: &str, base: &Path) -> Vec<ConfigIssue> {
        match validate_config(raw, base) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = dir_with_treebank();
        let raw = r#"
treebanks = ["tb.conllu"]
scope = { dep = { upos = "ADJ" }, gov = { upos = "NOUN" } }
response = { order = "gov_after_dep" }
"#;
        let c = validate_config(raw, dir.path()).unwrap();
        assert_eq!(c.jobs.len(), 1);
        assert_eq!(c.jobs[0].name, "rules");
        assert_eq!(c.jobs[0].scope.constraints.len(), 2);
        assert_eq!(c.jobs[0].response, ResponsePattern::Order(OrderDirection::GovAfterDep));
        assert_eq!(c.path.k, 100);
        assert_eq!(c.path.lambda_start, 0.1);
        assert_eq!(c.path.lambda_end, 0.001);
        assert_eq!(c.path.spacing, Spacing::Linear);
        assert_eq!(c.features.min_count, 5);
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.report, ReportOptions::default());
        assert_eq!(c.treebank_paths[0], dir.path().join("tb.conllu"));
    }

    #[test]
    fn jobs_and_sections() {
        let dir = dir_with_treebank();
        let raw = r#"
treebanks = ["tb.conllu"]
[[jobs]]
name = "subj_order"
scope = { edge = { deprel = "subj" } }
response = { order = "gov_before_dep" }
[[jobs]]
name = "number"
response = { agreement = "Number" }
[features]
min_count = 3
pairing = false
extra_leak = ["Gender"]
upos_groups = { nominal = ["NOUN", "PRON"] }
[path]
k = 10
lambda_start = 1
lambda_end = 0.01
spacing = "log"
[solver]
tolerance = 1e-8
[report]
sort = "gtest"
top_k = 0
"#;
        let c = validate_config(raw, dir.path()).unwrap();
        assert_eq!(c.jobs.len(), 2);
        assert_eq!(c.jobs[1].response, ResponsePattern::Agreement("Number".into()));
        assert!(c.jobs[1].scope.constraints.is_empty());
        assert_eq!(c.features.min_count, 3);
        assert!(!c.features.pairing);
        assert_eq!(c.features.upos_groups.len(), 1);
        assert_eq!((c.path.k, c.path.lambda_start, c.path.spacing), (10, 1.0, Spacing::Log));
        assert_eq!(c.solver.tolerance, 1e-8);
        assert_eq!(c.report.sort, SortKey::Gtest);
        assert_eq!(c.report.top_k, Some(0));
    }

    #[test]
    fn misspelled_response_kind_names_field() {
        let dir = dir_with_treebank();
        let raw = "treebanks = [\"tb.conllu\"]\nresponse = { ordre = \"gov_after_dep\" }\n";
        let v = issues(raw, dir.path());
        assert!(v.iter().any(|i| i.field == "response.ordre"), "{v:?}");
    }

    #[test]
    fn two_responses_rejected() {
        let dir = dir_with_treebank();
        let raw = "treebanks = [\"tb.conllu\"]\nresponse = { order = \"gov_after_dep\", agreement = \"Number\" }\n";
        let v = issues(raw, dir.path());
        assert!(v.iter().any(|i| i.message.contains("two responses")), "{v:?}");
    }

    #[test]
    fn collects_all_errors() {
        let dir = dir_with_treebank();
        let raw = r#"
treebanks = ["tb.conllu", "missing.conllu"]
colour = "blue"
response = { order = "sideways" }
[path]
k = 0
lambda_start = 0.001
lambda_end = 0.1
spacing = "cubic"
[report]
sort = "alpha"
"#;
        let v = issues(raw, dir.path());
        let fields: BTreeSet<&str> = v.iter().map(|i| i.field.as_str()).collect();
        for f in ["treebanks[1]", "colour", "response.order", "path.k", "path.lambda_end", "path.spacing", "report.sort"] {
            assert!(fields.contains(f), "missing {f} in {v:?}");
        }
    }

    #[test]
    fn job_structure_errors() {
        let dir = dir_with_treebank();
        let raw = r#"
treebanks = ["tb.conllu"]
[[jobs]]
name = "a b"
scope = { dep = { form = "x" }, edge = { upos = "X" } }
response = { agreement = "Number" }
[[jobs]]
name = "ok"
[[jobs]]
name = "ok"
response = { order = "gov_after_dep" }
"#;
        let v = issues(raw, dir.path());
        let fields: Vec<&str> = v.iter().map(|i| i.field.as_str()).collect();
        for f in ["jobs[0].name", "jobs[0].scope.dep.form", "jobs[0].scope.edge.upos", "jobs[1].response"] {
            assert!(fields.contains(&f), "missing {f} in {v:?}");
        }
        // jobs[1] is invalid so the duplicate is reported against the third
        assert!(v.iter().all(|i| !i.message.contains("duplicate")) || fields.contains(&"jobs[1].name"));
    }

    #[test]
    fn syntax_error() {
        let v = issues("treebanks = [", Path::new("."));
        assert_eq!(v[0].field, "<syntax>");
    }
}
