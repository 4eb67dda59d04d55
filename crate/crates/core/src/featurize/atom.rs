use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::query::NodeRole;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attribute {
    Upos,
    Lemma,
    Deprel,
    /// Relative position: gov vs. dep, grandparent vs. gov.
    Position,
    /// Membership of the node's upos in a named tag list.
    UposGroup(String),
    /// A FEATS key.
    Feat(String),
}

impl Attribute {
    pub fn name(&self) -> String {
        match self {
            Attribute::Upos => "upos".into(),
            Attribute::Lemma => "lemma".into(),
            Attribute::Deprel => "deprel".into(),
            Attribute::Position => "position".into(),
            Attribute::UposGroup(g) => format!("upos_group:{g}"),
            Attribute::Feat(k) => k.clone(),
        }
    }
}

/// `role.attribute=value`, the unit from which features are built.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureAtom {
    pub role: NodeRole,
    pub attribute: Attribute,
    pub value: String,
}

pub const UPOS_GROUP_MEMBER: &str = "yes";

impl FeatureAtom {
    pub fn new(role: NodeRole, attribute: Attribute, value: impl Into<String>) -> Self {
        Self {
            role,
            attribute,
            value: value.into(),
        }
    }

    /// Whether a leak-filter entry removes this atom. Entries are either a
    /// bare attribute name (`Number`, any role) or `role.attribute`.
    pub fn is_filtered_by(&self, leak_filter: &BTreeSet<String>) -> bool {
        let name = self.attribute.name();
        leak_filter.contains(&name) || leak_filter.contains(&format!("{}.{}", self.role, name))
    }
}

impl fmt::Display for FeatureAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}={}", self.role, self.attribute.name(), self.value)
    }
}

impl Serialize for FeatureAtom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
