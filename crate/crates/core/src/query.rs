//! Scope (S), response (Q) and labeled instance extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treebank::{Sentence, Token, Treebank};

/// Position of a node relative to the dependency edge under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Dep,
    Gov,
    Grandparent,
    Codep,
    Grandchild,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Dep => "dep",
            NodeRole::Gov => "gov",
            NodeRole::Grandparent => "grandparent",
            NodeRole::Codep => "codep",
            NodeRole::Grandchild => "grandchild",
        }
    }
}

impl std::fmt::Display for NodeRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A token attribute usable in a scope constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeAttribute {
    Upos,
    Lemma,
    Deprel,
    Feat(String),
}

impl ScopeAttribute {
    pub fn parse(name: &str) -> Self {
        match name {
            "upos" => ScopeAttribute::Upos,
            "lemma" => ScopeAttribute::Lemma,
            "deprel" => ScopeAttribute::Deprel,
            other => ScopeAttribute::Feat(other.to_string()),
        }
    }

    fn value<'t>(&self, tok: &'t Token) -> Option<&'t str> {
        match self {
            ScopeAttribute::Upos => Some(&tok.upos),
            ScopeAttribute::Lemma => Some(&tok.lemma),
            ScopeAttribute::Deprel => Some(&tok.deprel),
            ScopeAttribute::Feat(k) => tok.feat(k),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ScopeAttribute::Upos => "upos",
            ScopeAttribute::Lemma => "lemma",
            ScopeAttribute::Deprel => "deprel",
            ScopeAttribute::Feat(k) => k,
        }
    }
}

/// What a single scope constraint looks at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeTarget {
    /// An attribute of the dependent or the governor.
    Node(NodeRole, ScopeAttribute),
    /// The relation label of the edge itself.
    EdgeDeprel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeConstraint {
    pub target: ScopeTarget,
    pub value: String,
}

impl ScopeConstraint {
    pub fn node(role: NodeRole, attribute: &str, value: &str) -> Self {
        Self {
            target: ScopeTarget::Node(role, ScopeAttribute::parse(attribute)),
            value: value.to_string(),
        }
    }

    pub fn edge_deprel(value: &str) -> Self {
        Self {
            target: ScopeTarget::EdgeDeprel,
            value: value.to_string(),
        }
    }
}

impl std::fmt::Display for ScopeConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.target {
            ScopeTarget::Node(role, attr) => write!(f, "{role}.{}={}", attr.name(), self.value),
            ScopeTarget::EdgeDeprel => write!(f, "edge.deprel={}", self.value),
        }
    }
}

/// Conjunction of constraints on a dependency edge and its two endpoints.
/// The empty pattern matches every edge.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopePattern {
    pub constraints: Vec<ScopeConstraint>,
}

impl ScopePattern {
    pub fn new(constraints: Vec<ScopeConstraint>) -> Result<Self> {
        for c in &constraints {
            if let ScopeTarget::Node(role, _) = c.target {
                if !matches!(role, NodeRole::Dep | NodeRole::Gov) {
                    return Err(Error::InvalidArgument(format!(
                        "scope constraints may only use dep or gov, not {role}"
                    )));
                }
            }
        }
        Ok(Self { constraints })
    }

    pub fn matches(&self, gov: &Token, dep: &Token) -> bool {
        self.constraints.iter().all(|c| {
            let actual = match &c.target {
                ScopeTarget::Node(NodeRole::Gov, attr) => attr.value(gov),
                ScopeTarget::Node(_, attr) => attr.value(dep),
                ScopeTarget::EdgeDeprel => Some(dep.deprel.as_str()),
            };
            actual == Some(c.value.as_str())
        })
    }
}

impl std::fmt::Display for ScopePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.constraints.is_empty() {
            return f.write_str("*");
        }
        let parts: Vec<String> = self.constraints.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderDirection {
    GovBeforeDep,
    GovAfterDep,
}

impl OrderDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderDirection::GovBeforeDep => "gov_before_dep",
            OrderDirection::GovAfterDep => "gov_after_dep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponsePattern {
    /// Both endpoints carry the FEATS key and the values are identical strings.
    Agreement(String),
    Order(OrderDirection),
}

impl ResponsePattern {
    /// `None` when the edge is outside the response's domain (agreement on a
    /// feature one endpoint lacks).
    pub fn label(&self, gov: &Token, dep: &Token) -> Option<bool> {
        match self {
            ResponsePattern::Agreement(key) => {
                let g = gov.feat(key)?;
                let d = dep.feat(key)?;
                Some(g == d)
            }
            ResponsePattern::Order(OrderDirection::GovBeforeDep) => Some(gov.id < dep.id),
            ResponsePattern::Order(OrderDirection::GovAfterDep) => Some(gov.id > dep.id),
        }
    }
}

impl std::fmt::Display for ResponsePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResponsePattern::Agreement(k) => write!(f, "gov.{k}=dep.{k}"),
            ResponsePattern::Order(d) => write!(f, "gov.position={}", match d {
                OrderDirection::GovBeforeDep => "before_dep",
                OrderDirection::GovAfterDep => "after_dep",
            }),
        }
    }
}

/// One in-scope dependency edge with its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instance {
    /// Index into [`Treebank::sentences`].
    pub sentence: usize,
    pub gov: u32,
    pub dep: u32,
    pub label: bool,
}

impl Instance {
    pub fn sentence<'t>(&self, treebank: &'t Treebank) -> &'t Sentence {
        &treebank.sentences()[self.sentence]
    }
}

/// All edges matching `scope` (and inside the response's domain), in corpus
/// order: sentence by sentence, dependents by id.
pub fn extract_instances(
    treebank: &Treebank,
    scope: &ScopePattern,
    response: &ResponsePattern,
) -> Vec<Instance> {
    let mut out = Vec::new();
    for (si, sentence) in treebank.sentences().iter().enumerate() {
        for dep in sentence.tokens() {
            let Some(gov) = sentence.token(dep.head) else {
                continue;
            };
            if !scope.matches(gov, dep) {
                continue;
            }
            if let Some(label) = response.label(gov, dep) {
                out.push(Instance {
                    sentence: si,
                    gov: gov.id,
                    dep: dep.id,
                    label,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScopeCounts {
    pub n_scope: usize,
    pub n_positive: usize,
    pub mu: f64,
}

pub fn scope_counts(instances: &[Instance]) -> Result<ScopeCounts> {
    if instances.is_empty() {
        return Err(Error::EmptyScope);
    }
    let n_positive = instances.iter().filter(|i| i.label).count();
    Ok(ScopeCounts {
        n_scope: instances.len(),
        n_positive,
        mu: n_positive as f64 / instances.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{parse_conllu, ParseOptions};

    fn tb(text: &str) -> Treebank {
        parse_conllu(text.as_bytes(), &ParseOptions::default()).unwrap()
    }

    const ADJ_NOUN: &str = "\
1\tun\tun\tDET\t_\t_\t3\tdet\t_\t_
2\tsexto\tsexto\tADJ\t_\tNumType=Ord\t3\tmod\t_\t_
3\tpiso\tpiso\tNOUN\t_\tNumber=Sing\t0\troot\t_\t_
4\talto\talto\tADJ\t_\tNumber=Sing\t3\tmod\t_\t_

1\tcasa\tcasa\tNOUN\t_\t_\t0\troot\t_\t_
2\tblanca\tblanco\tADJ\t_\t_\t1\tmod\t_\t_
";

    #[test]
    fn adjective_order_scope() {
        let tb = tb(ADJ_NOUN);
        let scope = ScopePattern::new(vec![
            ScopeConstraint::node(NodeRole::Dep, "upos", "ADJ"),
            ScopeConstraint::node(NodeRole::Gov, "upos", "NOUN"),
        ])
        .unwrap();
        let inst = extract_instances(&tb, &scope, &ResponsePattern::Order(OrderDirection::GovAfterDep));
        let got: Vec<(usize, u32, u32, bool)> =
            inst.iter().map(|i| (i.sentence, i.gov, i.dep, i.label)).collect();
        assert_eq!(got, vec![(0, 3, 2, true), (0, 3, 4, false), (1, 1, 2, false)]);
        let c = scope_counts(&inst).unwrap();
        assert_eq!((c.n_scope, c.n_positive), (3, 1));
    }

    #[test]
    fn agreement_requires_both_endpoints() {
        let tb = tb(ADJ_NOUN);
        let inst = extract_instances(
            &tb,
            &ScopePattern::default(),
            &ResponsePattern::Agreement("Number".into()),
        );
        assert_eq!(inst.len(), 1);
        assert!(inst[0].label);
        assert_eq!((inst[0].gov, inst[0].dep), (3, 4));
    }

    #[test]
    fn agreement_multi_valued_exact() {
        let text = "1\ta\ta\tADJ\t_\tGender=Fem\t2\tmod\t_\t_\n2\tb\tb\tNOUN\t_\tGender=Fem,Masc\t0\troot\t_\t_\n";
        let inst = extract_instances(&tb(text), &ScopePattern::default(), &ResponsePattern::Agreement("Gender".into()));
        assert_eq!(inst.len(), 1);
        assert!(!inst[0].label);
    }

    #[test]
    fn edge_deprel_scope_and_roots() {
        let text = "1\tit\tit\tPRON\t_\t_\t2\tsubj\t_\t_\n2\trains\train\tVERB\t_\t_\t0\troot\t_\t_\n3\tx\tx\tX\t_\t_\t0\troot\t_\t_\n";
        let tb = tb(text);
        let scope = ScopePattern::new(vec![ScopeConstraint::edge_deprel("subj")]).unwrap();
        let inst = extract_instances(&tb, &scope, &ResponsePattern::Order(OrderDirection::GovBeforeDep));
        assert_eq!(inst.len(), 1);
        assert!(!inst[0].label);
        // the empty scope covers every non-root token
        let all = extract_instances(&tb, &ScopePattern::default(), &ResponsePattern::Order(OrderDirection::GovBeforeDep));
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn scope_rejects_context_roles() {
        assert!(ScopePattern::new(vec![ScopeConstraint::node(NodeRole::Codep, "upos", "X")]).is_err());
    }

    #[test]
    fn counts() {
        let mk = |label| Instance { sentence: 0, gov: 1, dep: 2, label };
        let ten: Vec<Instance> = (0..10).map(|i| mk(i < 4)).collect();
        let c = scope_counts(&ten).unwrap();
        assert_eq!((c.n_scope, c.n_positive, c.mu), (10, 4, 0.4));
        let all: Vec<Instance> = (0..3).map(|_| mk(true)).collect();
        assert_eq!(scope_counts(&all).unwrap().mu, 1.0);
        assert!(matches!(scope_counts(&[]), Err(Error::EmptyScope)));
    }
}
