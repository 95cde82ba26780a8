//! Ordered candidate sets of selections and the two pruning rules of the
//! binary search.

use crate::exec::Execution;
use crate::model::{LogisticConstraint, ModelError, Selection};
use thiserror::Error;

/// Default limit on `2^{2N}`, the number of raw bit patterns scanned.
pub const DEFAULT_MAX_PATTERNS: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error(
        "{nodes} nodes give 2^{bits} patterns, above the limit of {limit}; \
         raise the limit or use the mixed-integer method"
    )]
    Capacity {
        nodes: usize,
        bits: usize,
        limit: u64,
    },
    #[error("candidate set is empty")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerateOptions {
    pub max_patterns: u64,
    pub execution: Execution,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            max_patterns: DEFAULT_MAX_PATTERNS,
            execution: Execution::default(),
        }
    }
}

/// Selections in canonical order: by cardinality, then by the
/// lexicographic order of their ascending active-position lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    nodes: usize,
    items: Vec<u64>,
}

/// Sort key realising the canonical order. Among words of equal popcount,
/// the one whose lowest differing position is active comes first, which is
/// the larger bit-reversed word.
pub fn canonical_key(bits: u64) -> (u32, u64) {
    (bits.count_ones(), !bits.reverse_bits())
}

impl CandidateSet {
    pub fn from_selections(nodes: usize, items: &[Selection]) -> Result<Self, CandidateError> {
        if let Some(bad) = items.iter().find(|s| s.node_count() != nodes) {
            return Err(ModelError::Dimension(format!(
                "selection {bad} does not cover {nodes} nodes"
            ))
            .into());
        }
        let mut bits: Vec<u64> = items.iter().map(Selection::bits).collect();
        bits.sort_unstable_by_key(|&b| canonical_key(b));
        bits.dedup();
        Ok(Self { nodes, items: bits })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// `σ`.
    pub fn sigma(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// 0-based access.
    pub fn get(&self, index: usize) -> Option<Selection> {
        self.items
            .get(index)
            .map(|&b| Selection::from_bits(self.nodes, b))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Selection> + '_ {
        self.items
            .iter()
            .map(move |&b| Selection::from_bits(self.nodes, b))
    }

    pub fn to_vec(&self) -> Vec<Selection> {
        self.iter().collect()
    }

    pub fn contains(&self, s: &Selection) -> bool {
        s.node_count() == self.nodes
            && self
                .items
                .binary_search_by_key(&canonical_key(s.bits()), |&b| canonical_key(b))
                .is_ok()
    }

    pub fn bit_strings(&self) -> Vec<String> {
        self.iter().map(|s| s.bit_string()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.bit_strings()).expect("strings serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, CandidateError> {
        let strings: Vec<String> = serde_json::from_str(s)?;
        let sel = strings
            .iter()
            .map(|t| t.parse::<Selection>())
            .collect::<Result<Vec<_>, _>>()?;
        let nodes = sel.first().map_or(0, Selection::node_count);
        Self::from_selections(nodes, &sel)
    }

    fn retain(&self, exec: Execution, keep: impl Fn(u64) -> bool + Sync + Send) -> Self {
        Self {
            nodes: self.nodes,
            items: exec.retain(self.items.clone(), |&b| keep(b)),
        }
    }
}

pub fn enumerate(nodes: usize, lc: &LogisticConstraint) -> Result<CandidateSet, CandidateError> {
    enumerate_with(nodes, lc, &EnumerateOptions::default())
}

pub fn enumerate_with(
    nodes: usize,
    lc: &LogisticConstraint,
    opts: &EnumerateOptions,
) -> Result<CandidateSet, CandidateError> {
    lc.check_nodes(nodes)?;
    let bits = 2 * nodes;
    if bits >= 64 || (1u64 << bits) > opts.max_patterns {
        return Err(CandidateError::Capacity {
            nodes,
            bits,
            limit: opts.max_patterns,
        });
    }
    let mut items = opts.execution.filter_range(1u64 << bits, |b| {
        lc.satisfied_unchecked(&Selection::from_bits(nodes, b))
    });
    opts.execution
        .sort_by_key(&mut items, |&b| canonical_key(b));
    Ok(CandidateSet { nodes, items })
}

/// Element at 1-based position `⌈σ/2⌉`, returned with that position.
pub fn pick_median(cs: &CandidateSet) -> Result<(usize, Selection), CandidateError> {
    if cs.is_empty() {
        return Err(CandidateError::Empty);
    }
    let q = cs.sigma().div_ceil(2);
    Ok((q, cs.get(q - 1).expect("q within range")))
}

/// Drop every selection with `H(S) ≥ H(S_q)`.
pub fn prune_on_feasible(cs: &CandidateSet, sq: &Selection) -> CandidateSet {
    prune_on_feasible_with(cs, sq, Execution::default())
}

pub fn prune_on_feasible_with(cs: &CandidateSet, sq: &Selection, exec: Execution) -> CandidateSet {
    let h = sq.cardinality() as u32;
    cs.retain(exec, |b| b.count_ones() < h)
}

/// Drop every selection whose active set lies inside that of `S_q`.
pub fn prune_on_infeasible(cs: &CandidateSet, sq: &Selection) -> CandidateSet {
    prune_on_infeasible_with(cs, sq, Execution::default())
}

pub fn prune_on_infeasible_with(
    cs: &CandidateSet,
    sq: &Selection,
    exec: Execution,
) -> CandidateSet {
    let q = sq.bits();
    cs.retain(exec, |b| b | q != q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(s: &str) -> Selection {
        s.parse().unwrap()
    }

    #[test]
    fn single_node_without_constraint() {
        let cs = enumerate(1, &LogisticConstraint::none()).unwrap();
        assert_eq!(cs.bit_strings(), ["00", "10", "01", "11"]);
    }

    #[test]
    fn high_cardinality_filter() {
        let lc = LogisticConstraint::cardinality_between(3, 5, 6);
        let cs = enumerate(3, &lc).unwrap();
        assert_eq!(cs.sigma(), 7);
        assert_eq!(cs.get(0).unwrap(), sel("111110"));
        assert_eq!(cs.get(6).unwrap(), sel("111111"));
    }

    #[test]
    fn median_positions() {
        let cs = CandidateSet::from_selections(1, &[sel("10")]).unwrap();
        assert_eq!(pick_median(&cs).unwrap(), (1, sel("10")));
        let empty = CandidateSet::from_selections(1, &[]).unwrap();
        assert!(matches!(pick_median(&empty), Err(CandidateError::Empty)));
    }

    #[test]
    fn uniform_cardinality_feasible_prune_empties() {
        let lc = LogisticConstraint::cardinality_between(2, 2, 2);
        let cs = enumerate(2, &lc).unwrap();
        assert!(prune_on_feasible(&cs, &cs.get(3).unwrap()).is_empty());
    }

    #[test]
    fn full_probe_infeasible_prune_empties() {
        let cs = enumerate(2, &LogisticConstraint::none()).unwrap();
        assert!(prune_on_infeasible(&cs, &Selection::full(2)).is_empty());
    }

    #[test]
    fn singleton_infeasible_prune() {
        let cs = enumerate(2, &LogisticConstraint::none()).unwrap();
        let out = prune_on_infeasible(&cs, &sel("0010"));
        assert_eq!(out.sigma(), cs.sigma() - 2);
        assert!(!out.contains(&sel("0000")) && !out.contains(&sel("0010")));
    }

    #[test]
    fn capacity_limit() {
        let opts = EnumerateOptions {
            max_patterns: 1 << 8,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_with(5, &LogisticConstraint::none(), &opts),
            Err(CandidateError::Capacity { bits: 10, .. })
        ));
    }

    #[test]
    fn json_round_trip_keeps_order() {
        let cs = enumerate(2, &LogisticConstraint::cardinality_between(2, 1, 3)).unwrap();
        assert_eq!(CandidateSet::from_json(&cs.to_json()).unwrap(), cs);
    }

    #[test]
    fn sequential_matches_parallel() {
        let lc = LogisticConstraint::at_least(4, 1, 2);
        let par = enumerate(4, &lc).unwrap();
        let seq = enumerate_with(
            4,
            &lc,
            &EnumerateOptions {
                execution: Execution::Sequential,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(par, seq);
    }
}
