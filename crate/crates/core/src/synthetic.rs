//! Seeded generators of small CoNLL-U corpora with known structure, used by
//! the test suites and to build the bundled demo treebank.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Node {
    lemma: String,
    upos: &'static str,
    feats: Vec<(String, String)>,
    /// Index into the sentence's node list, `None` for the root.
    head: Option<usize>,
    deprel: &'static str,
}

impl Node {
    fn new(lemma: impl Into<String>, upos: &'static str, head: Option<usize>, deprel: &'static str) -> Self {
        Self {
            lemma: lemma.into(),
            upos,
            feats: Vec::new(),
            head,
            deprel,
        }
    }

    fn feat(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.feats.push((k.into(), v.into()));
        self
    }
}

fn write_sentence(out: &mut String, sent_id: &str, nodes: &[Node]) {
    let _ = writeln!(out, "# sent_id = {sent_id}");
    for (i, n) in nodes.iter().enumerate() {
        let mut feats: Vec<String> = n.feats.iter().map(|(k, v)| format!("{k}={v}")).collect();
        feats.sort();
        let feats = if feats.is_empty() { "_".to_string() } else { feats.join("|") };
        let head = n.head.map_or(0, |h| h + 1);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t_",
            i + 1,
            n.lemma,
            n.lemma,
            n.upos,
            feats,
            head,
            n.deprel
        );
    }
    out.push('\n');
}

/// A noun–adjective corpus with one planted word-order trigger.
///
/// Every sentence holds a NOUN root, an ADJ `mod` dependent and optionally a
/// DET. The response of interest is "adjective before noun"
/// (`gov_after_dep`). The adjective carries `Trig=Yes` with probability
/// `trigger_rate`; given the trigger the adjective precedes with probability
/// `trigger_precision`, otherwise with the probability that makes the overall
/// rate `base_rate`. `noise_atoms` features `NoiseNN=Yes`, each present with
/// probability `noise_rate`, are independent of the order.
#[derive(Debug, Clone)]
pub struct PlantedOrderSpec {
    pub instances: usize,
    pub base_rate: f64,
    pub trigger_rate: f64,
    pub trigger_precision: f64,
    pub noise_atoms: usize,
    pub noise_rate: f64,
}

impl Default for PlantedOrderSpec {
    fn default() -> Self {
        Self {
            instances: 2000,
            base_rate: 0.5,
            trigger_rate: 0.2,
            trigger_precision: 0.97,
            noise_atoms: 30,
            noise_rate: 0.3,
        }
    }
}

/// Parameters of the bundled demo treebank (`data/mini.conllu`).
pub fn mini_spec() -> PlantedOrderSpec {
    PlantedOrderSpec {
        instances: 400,
        noise_atoms: 10,
        ..PlantedOrderSpec::default()
    }
}

pub const MINI_SEED: u64 = 2024;

pub const TRIGGER_FEAT: &str = "Trig";

pub fn noise_feat(j: usize) -> String {
    format!("Noise{j:02}")
}

pub fn planted_order_corpus(spec: &PlantedOrderSpec, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest_rate = (spec.base_rate - spec.trigger_precision * spec.trigger_rate) / (1.0 - spec.trigger_rate);
    let mut out = String::new();
    for s in 0..spec.instances {
        let trigger = rng.gen_bool(spec.trigger_rate);
        let before = rng.gen_bool(if trigger { spec.trigger_precision } else { rest_rate });
        let mut adj = Node::new("adj", "ADJ", None, "mod");
        if trigger {
            adj = adj.feat(TRIGGER_FEAT, "Yes");
        }
        for j in 0..spec.noise_atoms {
            if rng.gen_bool(spec.noise_rate) {
                adj = adj.feat(noise_feat(j), "Yes");
            }
        }
        let with_det = rng.gen_bool(0.5);
        let mut nodes = Vec::new();
        if with_det {
            nodes.push(Node::new("the", "DET", None, "det"));
        }
        let (noun_idx, adj_idx) = if before {
            (nodes.len() + 1, nodes.len())
        } else {
            (nodes.len(), nodes.len() + 1)
        };
        let noun = Node::new("noun", "NOUN", None, "root").feat("Number", "Sing");
        adj.head = Some(noun_idx);
        if before {
            nodes.push(adj);
            nodes.push(noun);
        } else {
            nodes.push(noun);
            nodes.push(adj);
        }
        debug_assert_eq!(nodes[adj_idx].upos, "ADJ");
        if with_det {
            nodes[0].head = Some(noun_idx);
        }
        write_sentence(&mut out, &format!("planted-{seed}-{s}"), &nodes);
    }
    out
}

/// Agreement corpus where the dependent's `Number` fully determines whether
/// it agrees with its governor: singular adjectives agree with their
/// (singular) noun, plural ones do not. Other features are noise.
pub fn number_leak_corpus(instances: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let genders = ["Fem", "Masc"];
    for s in 0..instances {
        let agree = rng.gen_bool(0.5);
        let mut adj = Node::new("adj", "ADJ", Some(0), "mod")
            .feat("Number", if agree { "Sing" } else { "Plur" })
            .feat("Gender", *genders.choose(&mut rng).unwrap());
        for j in 0..6 {
            if rng.gen_bool(0.4) {
                adj = adj.feat(noise_feat(j), "Yes");
            }
        }
        let noun = Node::new("noun", "NOUN", None, "root")
            .feat("Number", "Sing")
            .feat("Gender", *genders.choose(&mut rng).unwrap());
        write_sentence(&mut out, &format!("leak-{seed}-{s}"), &[noun, adj]);
    }
    out
}

/// Parameters for random dependency trees with random annotations.
#[derive(Debug, Clone)]
pub struct RandomTreebankSpec {
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Distinct lemmas per open-class tag.
    pub open_lemmas: usize,
}

impl Default for RandomTreebankSpec {
    fn default() -> Self {
        Self {
            sentences: 500,
            min_len: 6,
            max_len: 16,
            open_lemmas: 50,
        }
    }
}

const UPOS: &[&str] = &[
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "AUX", "CCONJ", "PROPN", "NUM", "PUNCT",
];
const DEPRELS: &[&str] = &["subj", "comp:obj", "mod", "det", "udep", "cc", "conj", "punct", "comp:aux"];
const CLOSED_LEMMAS: &[&str] = &["a", "de", "le", "que", "il", "et", "se", "en"];

fn random_node(rng: &mut ChaCha8Rng, spec: &RandomTreebankSpec) -> Node {
    let upos = *UPOS.choose(rng).unwrap();
    let lemma = match upos {
        "PRON" | "DET" | "ADP" | "AUX" | "CCONJ" => CLOSED_LEMMAS.choose(rng).unwrap().to_string(),
        "PUNCT" => ".".to_string(),
        other => format!("{}{}", other.to_lowercase(), rng.gen_range(0..spec.open_lemmas)),
    };
    let mut node = Node::new(lemma, upos, None, "root");
    if matches!(upos, "NOUN" | "ADJ" | "DET" | "PRON" | "VERB" | "AUX" | "PROPN") {
        node = node.feat("Number", if rng.gen_bool(0.6) { "Sing" } else { "Plur" });
        if rng.gen_bool(0.7) {
            node = node.feat("Gender", if rng.gen_bool(0.5) { "Fem" } else { "Masc" });
        }
    }
    if matches!(upos, "VERB" | "AUX") {
        node = node.feat("Tense", *["Pres", "Past", "Fut"].choose(rng).unwrap());
        node = node.feat("Person", *["1", "2", "3"].choose(rng).unwrap());
    }
    if upos == "PRON" && rng.gen_bool(0.5) {
        node = node.feat("PronType", *["Prs", "Rel", "Dem", "Int"].choose(rng).unwrap());
    }
    node
}

/// Random trees: nodes are attached in a random order, each to a uniformly
/// chosen node already in the tree, so trees are generally non-projective.
pub fn random_treebank(spec: &RandomTreebankSpec, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for s in 0..spec.sentences {
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let mut nodes: Vec<Node> = (0..len).map(|_| random_node(&mut rng, spec)).collect();
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        for k in 1..len {
            let parent = order[rng.gen_range(0..k)];
            let node = &mut nodes[order[k]];
            node.head = Some(parent);
            node.deprel = DEPRELS.choose(&mut rng).unwrap();
        }
        write_sentence(&mut out, &format!("random-{seed}-{s}"), &nodes);
    }
    out
}
