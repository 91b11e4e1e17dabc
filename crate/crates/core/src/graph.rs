use std::collections::HashSet;

use crate::error::{Error, Result};

/// Undirected simple binary network stored as a dense symmetric adjacency
/// matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u8>,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Empty graph on `n` nodes.
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("a graph needs at least 2 nodes, got {n}")));
        }
        Ok(Graph {
            n,
            adj: vec![0; n * n],
            labels: None,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for i in 0..n {
            for j in (i + 1)..n {
                g.set_edge(i, j, true);
            }
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Usage(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::Usage(format!("self-loop at node {i}")));
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    /// Build from a row-major binary matrix, validating every invariant.
    pub fn from_adjacency(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut g = Graph::empty(n)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Usage(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::Usage(format!("entry ({i}, {j}) = {v} is not binary")));
                }
                if v != rows[j][i] {
                    return Err(Error::Usage(format!("adjacency not symmetric at ({i}, {j})")));
                }
                if i == j && v != 0 {
                    return Err(Error::Usage(format!("nonzero diagonal at node {i}")));
                }
            }
        }
        for (i, row) in rows.iter().enumerate() {
            g.adj[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(g)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Usage(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n
            )));
        }
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Usage("node labels are not unique".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub(crate) fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        debug_assert!(i != j);
        let v = u8::from(present);
        self.adj[i * self.n + j] = v;
        self.adj[j * self.n + i] = v;
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j] == 1
    }

    /// Entry `y_ij` as 0/1.
    #[inline]
    pub fn y(&self, i: usize, j: usize) -> u8 {
        self.adj[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.adj[i * self.n..(i + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of node `i`, falling back to its index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|&v| v as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|&v| v as usize).sum::<usize>() / 2
    }

    pub fn dyad_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn density(&self) -> f64 {
        self.edge_count() as f64 / self.dyad_count() as f64
    }

    /// Unordered edge list `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Relabel nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Usage("permutation length mismatch".into()));
        }
        let mut g = Graph::empty(self.n)?;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(perm[i], perm[j]) {
                    g.set_edge(i, j, true);
                }
            }
        }
        if let Some(l) = &self.labels {
            g.labels = Some(perm.iter().map(|&p| l[p].clone()).collect());
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_and_invalid() {
        assert!(Graph::empty(1).is_err());
        assert!(Graph::from_edges(3, &[(1, 1)]).is_err());
        assert!(Graph::from_adjacency(&[vec![0, 1], vec![0, 0]]).is_err());
        assert!(Graph::from_adjacency(&[vec![1, 0], vec![0, 0]]).is_err());
    }

    #[test]
    fn counts_and_symmetry() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 0), (2, 3)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(1, 0) && g.has_edge(3, 2));
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
        assert_eq!(Graph::complete(5).unwrap().edge_count(), 10);
    }

    #[test]
    fn labels_must_be_unique() {
        let g = Graph::empty(2).unwrap();
        assert!(g.clone().with_labels(vec!["a".into(), "a".into()]).is_err());
        assert!(g.with_labels(vec!["a".into()]).is_err());
    }
}
