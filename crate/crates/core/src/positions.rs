use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latent node coordinates, every entry strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePositions(Vec<f64>);

impl NodePositions {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = u.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Domain(format!("position {x} of node {i} not in (0, 1)")));
        }
        Ok(NodePositions(u))
    }

    /// The equidistant grid `i / (n + 1)` in node order.
    pub fn grid(n: usize) -> Self {
        NodePositions((1..=n).map(|r| r as f64 / (n + 1) as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Mean absolute coordinate change against `other`.
    pub fn mean_abs_change(&self, other: &NodePositions) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.len() as f64
    }

    /// Positions reordered so node `i` of the result is node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        NodePositions(perm.iter().map(|&p| self.0[p]).collect())
    }
}

impl std::ops::Index<usize> for NodePositions {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Map values to `rank / (n + 1)`, ranking from smallest to largest. Ties are
/// broken by ascending node index.
pub fn rank_adjust(values: &[f64]) -> NodePositions {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; n];
    for (rank0, &i) in order.iter().enumerate() {
        out[i] = (rank0 + 1) as f64 / (n + 1) as f64;
    }
    NodePositions(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank_adjust(&[0.5, 0.1, 0.9]).as_slice(), &[0.5, 0.25, 0.75]);
        assert_eq!(rank_adjust(&[0.2, 0.2, 0.7]).as_slice(), &[0.25, 0.5, 0.75]);
        assert_eq!(rank_adjust(&[0.1, 0.2, 0.3]).as_slice(), NodePositions::grid(3).as_slice());
    }

    #[test]
    fn rejects_closed_boundary() {
        assert!(NodePositions::new(vec![0.0, 0.5]).is_err());
        assert!(NodePositions::new(vec![0.5, 1.0]).is_err());
        assert!(NodePositions::new(vec![0.5, f64::NAN]).is_err());
        assert!(NodePositions::new(vec![0.5, 0.2]).is_ok());
    }

    proptest! {
        #[test]
        fn rank_adjust_is_grid_permutation_and_idempotent(
            x in proptest::collection::vec(0.0f64..1.0, 2..40)
        ) {
            let r = rank_adjust(&x);
            let mut sorted = r.as_slice().to_vec();
            sorted.sort_by(f64::total_cmp);
            let grid = NodePositions::grid(x.len());
            prop_assert_eq!(&sorted[..], grid.as_slice());
            prop_assert_eq!(rank_adjust(r.as_slice()), r.clone());
            for i in 0..x.len() {
                for j in 0..x.len() {
                    if x[i] < x[j] {
                        prop_assert!(r[i] < r[j]);
                    }
                }
            }
        }
    }
}
