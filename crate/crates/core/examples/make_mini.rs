//! Regenerates the bundled demo treebank:
//! `cargo run -p treerules --example make_mini > crates/core/data/mini.conllu`

use treerules::synthetic::{mini_spec, planted_order_corpus, MINI_SEED};

fn main() {
    print!("{}", planted_order_corpus(&mini_spec(), MINI_SEED));
}
