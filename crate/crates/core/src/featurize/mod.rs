//! Boolean features over the neighbourhood of a dependency edge.
//!
//! For an edge gov → dep the search space covers both endpoints, the
//! grandparent (governor of gov), the codependents (other dependents of gov)
//! and the grandchildren (dependents of dep). Codependent and grandchild
//! atoms are existential: an atom is present when at least one such node
//! carries it. Features are single atoms or unordered pairs of atoms, kept
//! when they occur at least `min_count` times in the scope.

mod atom;
mod matrix;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

pub use atom::{Attribute, FeatureAtom, UPOS_GROUP_MEMBER};
pub use matrix::DesignMatrix;

use crate::error::{Error, Result};
use crate::query::{Instance, NodeRole, ResponsePattern};
use crate::treebank::{Token, Treebank};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureConfig {
    pub min_count: usize,
    /// POS tags whose lemma is used as an attribute.
    pub closed_class_pos: BTreeSet<String>,
    pub upos_groups: BTreeMap<String, BTreeSet<String>>,
    /// Generate two-atom features.
    pub pairing: bool,
    /// Attributes removed on top of those implied by the response.
    pub extra_leak: BTreeSet<String>,
    /// Codependents and grandchildren with these relations are ignored.
    pub exclude_deprels: BTreeSet<String>,
    /// Keep at most this many features (highest support first).
    pub max_features: Option<usize>,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let upos_groups = [
            ("det_num", &["DET", "NUM"][..]),
            ("noun_propn", &["NOUN", "PROPN"][..]),
            ("verb_aux", &["VERB", "AUX"][..]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), set(v)))
        .collect();
        Self {
            min_count: 5,
            closed_class_pos: set(&["ADP", "AUX", "CCONJ", "SCONJ", "DET", "PART", "PRON"]),
            upos_groups,
            pairing: true,
            extra_leak: BTreeSet::new(),
            exclude_deprels: BTreeSet::new(),
            max_features: None,
        }
    }
}

impl FeatureConfig {
    /// Attributes that would reveal the label of `response`.
    pub fn leak_filter(&self, response: &ResponsePattern) -> BTreeSet<String> {
        let mut out = self.extra_leak.clone();
        match response {
            ResponsePattern::Agreement(key) => {
                out.insert(key.clone());
            }
            ResponsePattern::Order(_) => {
                out.insert("gov.position".into());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Feature {
    pub id: usize,
    /// One or two atoms in canonical order.
    pub atoms: Vec<FeatureAtom>,
    pub support: usize,
}

impl Feature {
    pub fn pattern(&self) -> String {
        self.atoms
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" & ")
    }

    pub fn mentions_attribute(&self, name: &str) -> bool {
        self.atoms.iter().any(|a| a.attribute.name() == name)
    }
}

#[derive(Debug, Clone)]
pub struct FeatureSpace {
    features: Vec<Feature>,
    pub leak_filter: BTreeSet<String>,
    pub closed_class_pos: BTreeSet<String>,
    pub upos_groups: BTreeMap<String, BTreeSet<String>>,
    atom_index: HashMap<FeatureAtom, u32>,
    single: Vec<Option<u32>>,
    /// For atom `a`: pair features `(a, b)` with `b > a`, as `(b, feature id)`.
    partners: Vec<Vec<(u32, u32)>>,
}

impl FeatureSpace {
    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, id: usize) -> &Feature {
        &self.features[id]
    }

    fn from_features(mut features: Vec<Feature>, featurizer: &Featurizer) -> Self {
        features.sort_by(|a, b| a.atoms.cmp(&b.atoms));
        let mut atom_index: HashMap<FeatureAtom, u32> = HashMap::new();
        for f in &features {
            for a in &f.atoms {
                let next = atom_index.len() as u32;
                atom_index.entry(a.clone()).or_insert(next);
            }
        }
        let mut single = vec![None; atom_index.len()];
        let mut partners = vec![Vec::new(); atom_index.len()];
        for (id, f) in features.iter_mut().enumerate() {
            f.id = id;
            match f.atoms.as_slice() {
                [a] => single[atom_index[a] as usize] = Some(id as u32),
                [a, b] => {
                    let (ia, ib) = (atom_index[a], atom_index[b]);
                    let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
                    partners[lo as usize].push((hi, id as u32));
                }
                _ => unreachable!("features have one or two atoms"),
            }
        }
        Self {
            features,
            leak_filter: featurizer.leak_filter.clone(),
            closed_class_pos: featurizer.config.closed_class_pos.clone(),
            upos_groups: featurizer.config.upos_groups.clone(),
            atom_index,
            single,
            partners,
        }
    }

    /// Sorted feature ids active for an atom set.
    pub fn active_features(&self, atoms: &BTreeSet<FeatureAtom>) -> Vec<u32> {
        let mut idx: Vec<u32> = atoms.iter().filter_map(|a| self.atom_index.get(a).copied()).collect();
        idx.sort_unstable();
        let mut out = Vec::new();
        for &a in &idx {
            if let Some(f) = self.single[a as usize] {
                out.push(f);
            }
            for &(b, f) in &self.partners[a as usize] {
                if idx.binary_search(&b).is_ok() {
                    out.push(f);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Feature configuration bound to a response (which fixes the leak filter).
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub config: FeatureConfig,
    pub leak_filter: BTreeSet<String>,
}

impl Featurizer {
    pub fn new(config: FeatureConfig, response: &ResponsePattern) -> Self {
        let leak_filter = config.leak_filter(response);
        Self {
            config,
            leak_filter,
        }
    }

    fn node_atoms(&self, role: NodeRole, tok: &Token, out: &mut BTreeSet<FeatureAtom>) {
        out.insert(FeatureAtom::new(role, Attribute::Upos, &tok.upos));
        if self.config.closed_class_pos.contains(&tok.upos) {
            out.insert(FeatureAtom::new(role, Attribute::Lemma, &tok.lemma));
        }
        out.insert(FeatureAtom::new(role, Attribute::Deprel, &tok.deprel));
        for (k, v) in &tok.feats {
            out.insert(FeatureAtom::new(role, Attribute::Feat(k.clone()), v));
        }
        for (group, tags) in &self.config.upos_groups {
            if tags.contains(&tok.upos) {
                out.insert(FeatureAtom::new(
                    role,
                    Attribute::UposGroup(group.clone()),
                    UPOS_GROUP_MEMBER,
                ));
            }
        }
    }

    /// Every atom observed around the instance's edge, leak-filtered.
    pub fn enumerate_atoms(&self, treebank: &Treebank, instance: &Instance) -> BTreeSet<FeatureAtom> {
        let sentence = instance.sentence(treebank);
        let mut out = BTreeSet::new();
        let (Some(dep), Some(gov)) = (sentence.token(instance.dep), sentence.token(instance.gov)) else {
            return out;
        };
        self.node_atoms(NodeRole::Dep, dep, &mut out);
        self.node_atoms(NodeRole::Gov, gov, &mut out);
        let side = |before: bool, yes: &str, no: &str| if before { yes.to_string() } else { no.to_string() };
        out.insert(FeatureAtom::new(
            NodeRole::Gov,
            Attribute::Position,
            side(gov.id < dep.id, "before_dep", "after_dep"),
        ));
        if let Some(gp) = sentence.token(gov.head) {
            self.node_atoms(NodeRole::Grandparent, gp, &mut out);
            out.insert(FeatureAtom::new(
                NodeRole::Grandparent,
                Attribute::Position,
                side(gp.id < gov.id, "before_gov", "after_gov"),
            ));
        }
        let keep = |t: &&Token| !self.config.exclude_deprels.contains(&t.deprel);
        for &c in sentence.child_ids(gov.id) {
            if c == dep.id {
                continue;
            }
            let t = sentence.token(c).expect("child ids are valid");
            if keep(&t) {
                self.node_atoms(NodeRole::Codep, t, &mut out);
            }
        }
        for &c in sentence.child_ids(dep.id) {
            let t = sentence.token(c).expect("child ids are valid");
            if keep(&t) {
                self.node_atoms(NodeRole::Grandchild, t, &mut out);
            }
        }
        out.retain(|a| !a.is_filtered_by(&self.leak_filter));
        out
    }

    fn all_atoms(&self, treebank: &Treebank, instances: &[Instance]) -> Vec<BTreeSet<FeatureAtom>> {
        instances
            .par_iter()
            .map(|inst| self.enumerate_atoms(treebank, inst))
            .collect()
    }

    pub fn build_feature_space(&self, treebank: &Treebank, instances: &[Instance]) -> Result<FeatureSpace> {
        let atoms = self.all_atoms(treebank, instances);
        self.space_from_atoms(&atoms)
    }

    fn space_from_atoms(&self, atom_sets: &[BTreeSet<FeatureAtom>]) -> Result<FeatureSpace> {
        if atom_sets.is_empty() {
            return Err(Error::NoInstances);
        }
        let min_count = self.config.min_count.max(1);

        // Intern atoms; ids are only used for counting, order comes later.
        let mut interner: HashMap<&FeatureAtom, u32> = HashMap::new();
        let mut atoms: Vec<&FeatureAtom> = Vec::new();
        let mut support: Vec<usize> = Vec::new();
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(atom_sets.len());
        for set in atom_sets {
            let mut row = Vec::with_capacity(set.len());
            for a in set {
                let id = *interner.entry(a).or_insert_with(|| {
                    atoms.push(a);
                    support.push(0);
                    atoms.len() as u32 - 1
                });
                support[id as usize] += 1;
                row.push(id);
            }
            rows.push(row);
        }

        let mut features: Vec<Feature> = atoms
            .iter()
            .zip(&support)
            .filter(|(_, &s)| s >= min_count)
            .map(|(a, &s)| Feature {
                id: 0,
                atoms: vec![(*a).clone()],
                support: s,
            })
            .collect();

        if self.config.pairing {
            // A pair cannot be more frequent than its rarest atom.
            let frequent: Vec<bool> = support.iter().map(|&s| s >= min_count).collect();
            let pair_counts = rows
                .par_iter()
                .fold(HashMap::<(u32, u32), usize>::new, |mut acc, row| {
                    let kept: Vec<u32> = row.iter().copied().filter(|&a| frequent[a as usize]).collect();
                    for (i, &a) in kept.iter().enumerate() {
                        for &b in &kept[i + 1..] {
                            let key = if a < b { (a, b) } else { (b, a) };
                            *acc.entry(key).or_insert(0) += 1;
                        }
                    }
                    acc
                })
                .reduce(HashMap::new, |mut a, b| {
                    if a.len() < b.len() {
                        return merge_counts(b, a);
                    }
                    merge_counts(std::mem::take(&mut a), b)
                });
            for ((a, b), s) in pair_counts {
                // Equal support means the pair column duplicates one of its
                // atoms' columns.
                if s < min_count || s == support[a as usize] || s == support[b as usize] {
                    continue;
                }
                let mut pair = vec![atoms[a as usize].clone(), atoms[b as usize].clone()];
                pair.sort();
                features.push(Feature {
                    id: 0,
                    atoms: pair,
                    support: s,
                });
            }
        }

        if let Some(cap) = self.config.max_features {
            if features.len() > cap {
                features.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.atoms.cmp(&b.atoms)));
                features.truncate(cap);
            }
        }
        Ok(FeatureSpace::from_features(features, self))
    }

    pub fn vectorize(&self, treebank: &Treebank, instances: &[Instance], space: &FeatureSpace) -> Result<DesignMatrix> {
        let rows: Vec<Vec<u32>> = instances
            .par_iter()
            .map(|inst| space.active_features(&self.enumerate_atoms(treebank, inst)))
            .collect();
        let labels = instances.iter().map(|i| i.label).collect();
        DesignMatrix::from_rows(space.len(), rows, labels)
    }

    /// Feature space and design matrix in one pass over the atoms.
    pub fn featurize(&self, treebank: &Treebank, instances: &[Instance]) -> Result<(FeatureSpace, DesignMatrix)> {
        let atoms = self.all_atoms(treebank, instances);
        let space = self.space_from_atoms(&atoms)?;
        let rows: Vec<Vec<u32>> = atoms.par_iter().map(|a| space.active_features(a)).collect();
        let labels = instances.iter().map(|i| i.label).collect();
        let matrix = DesignMatrix::from_rows(space.len(), rows, labels)?;
        Ok((space, matrix))
    }
}

fn merge_counts(mut into: HashMap<(u32, u32), usize>, from: HashMap<(u32, u32), usize>) -> HashMap<(u32, u32), usize> {
    for (k, v) in from {
        *into.entry(k).or_insert(0) += v;
    }
    into
}
