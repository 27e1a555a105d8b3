//! Ground truth by exhaustive enumeration over bitmask subsets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Instance;

/// Enumeration is bounded to keep the oracle honest about its budget.
pub const MAX_ORACLE_VERTICES: u32 = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub exists: bool,
    /// Smallest bitmask among independent sets of maximum size.
    pub witness: Option<u32>,
    pub max_independent_size: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("n={0} exceeds the enumeration budget of {MAX_ORACLE_VERTICES}")]
    OverBudget(u32),
}

/// Adjacency bitmasks: bit `v-1` of `adj[u-1]` is set iff `(u, v)` is an edge.
fn adjacency(inst: &Instance) -> Vec<u32> {
    let mut adj = vec![0u32; inst.n() as usize];
    for &(a, b) in &inst.graph.edges {
        adj[(a - 1) as usize] |= 1 << (b - 1);
        adj[(b - 1) as usize] |= 1 << (a - 1);
    }
    adj
}

fn is_independent(adj: &[u32], subset: u32) -> bool {
    let mut rest = subset;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if adj[v] & subset != 0 {
            return false;
        }
    }
    true
}

/// Exact decision by enumerating all 2^n subsets in ascending bitmask order.
pub fn independent_set_exists(inst: &Instance) -> Result<OracleVerdict, OracleError> {
    let n = inst.n();
    if n > MAX_ORACLE_VERTICES {
        return Err(OracleError::OverBudget(n));
    }
    let adj = adjacency(inst);
    let mut best_size = 0u32;
    let mut witness: Option<u32> = None;
    for subset in 0u64..(1u64 << n) {
        let subset = subset as u32;
        if is_independent(&adj, subset) {
            let size = subset.count_ones();
            if size > best_size {
                best_size = size;
                witness = Some(subset);
            }
        }
    }
    Ok(OracleVerdict {
        exists: best_size >= inst.k,
        witness,
        max_independent_size: best_size,
    })
}

/// Edge violations inside `subset` plus the cardinality deficit flag.
pub fn violations(inst: &Instance, subset: u32) -> (u32, bool) {
    let v = inst
        .graph
        .edges
        .iter()
        .filter(|&&(a, b)| subset & (1 << (a - 1)) != 0 && subset & (1 << (b - 1)) != 0)
        .count() as u32;
    let deficit = subset.count_ones() < inst.k;
    (v, deficit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn p4(k: u32) -> Instance {
        Instance::new(Graph::new(4, vec![(1, 2), (2, 3), (3, 4)]).unwrap(), k).unwrap()
    }

    fn k3(k: u32) -> Instance {
        Instance::new(Graph::new(3, vec![(1, 2), (1, 3), (2, 3)]).unwrap(), k).unwrap()
    }

    #[test]
    fn path_graph_has_size_two_witness() {
        let v = independent_set_exists(&p4(2)).unwrap();
        assert!(v.exists);
        assert_eq!(v.max_independent_size, 2);
        // {v1, v3} is the smallest maximum witness by bitmask value.
        assert_eq!(v.witness, Some(0b0101));
    }

    #[test]
    fn complete_graph_maxes_at_one() {
        let v = independent_set_exists(&k3(2)).unwrap();
        assert!(!v.exists);
        assert_eq!(v.max_independent_size, 1);
    }

    #[test]
    fn any_singleton_works_on_edgeless() {
        let inst = Instance::new(Graph::new(2, vec![]).unwrap(), 1).unwrap();
        let v = independent_set_exists(&inst).unwrap();
        assert!(v.exists);
        assert_eq!(v.witness, Some(0b01));
    }

    #[test]
    fn violation_counts() {
        assert_eq!(violations(&p4(2), 0b0111), (2, false));
        assert_eq!(violations(&p4(2), 0), (0, true));
        assert_eq!(violations(&k3(2), 0b111), (3, false));
    }

    #[test]
    fn budget_enforced() {
        let inst = Instance::new(Graph::new(25, vec![]).unwrap(), 1).unwrap();
        assert_eq!(
            independent_set_exists(&inst).unwrap_err(),
            OracleError::OverBudget(25)
        );
    }
}
