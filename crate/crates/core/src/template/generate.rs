use std::collections::{BTreeMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{instantiate_excluding, Instantiation, OpType, TemplatePair};
use crate::sql::TableView;
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Upper bound on sentences per table; the effective cap is
    /// `min(max_per_table, 2 * rows)`.
    pub max_per_table: usize,
    /// Relative sampling weight of each operation type.
    pub weights: BTreeMap<OpType, f64>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_per_table: 100,
            weights: [
                (OpType::Filter, 0.06),
                (OpType::Superlative, 0.27),
                (OpType::Aggregation, 0.30),
                (OpType::Comparative, 0.27),
                (OpType::Ordinal, 0.08),
                (OpType::Unique, 0.02),
            ]
            .into(),
        }
    }
}

impl GenerationConfig {
    pub fn cap_for(&self, table: &Table) -> usize {
        self.max_per_table.min(2 * table.num_rows())
    }
}

/// Per-table RNG seed derived from the run seed and the table id, so a
/// table's output does not depend on which worker handles it.
pub fn table_seed(global_seed: u64, table_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update(table_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Generates up to `config.cap_for(table)` distinct sentences.
///
/// Each draw picks an operation type by weight, then a template of that type
/// uniformly. A template that fails to yield a new valid sentence is retired
/// for this table; a type is retired with its last template, and later draws
/// renormalize over the remaining types.
pub fn generate_for_table(
    table: &Table,
    catalog: &[TemplatePair],
    config: &GenerationConfig,
    seed: u64,
) -> Vec<Instantiation> {
    let cap = config.cap_for(table);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: BTreeMap<OpType, Vec<usize>> = BTreeMap::new();
    for (i, t) in catalog.iter().enumerate() {
        if config.weights.get(&t.op_type).is_some_and(|w| *w > 0.0) {
            live.entry(t.op_type).or_default().push(i);
        }
    }
    let view = TableView::new(table);
    let mut tried = HashSet::new();
    let mut emitted = HashSet::new();
    let mut out = Vec::new();
    while out.len() < cap && !live.is_empty() {
        let types: Vec<OpType> = live.keys().copied().collect();
        let dist =
            WeightedIndex::new(types.iter().map(|t| config.weights[t])).expect("positive weights");
        let op = types[dist.sample(&mut rng)];
        let pool = live.get_mut(&op).unwrap();
        let &index = pool.choose(&mut rng).unwrap();
        match instantiate_excluding(&catalog[index], &view, &mut rng, &mut tried, &emitted) {
            Some(inst) => {
                emitted.insert(inst.sentence.clone());
                out.push(inst);
            }
            None => {
                pool.retain(|&i| i != index);
                if pool.is_empty() {
                    live.remove(&op);
                }
            }
        }
    }
    out
}
