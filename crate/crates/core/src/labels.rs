use crate::error::{invalid, Result};

/// Community assignment of `n` nodes into `k` communities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CommunityLabels {
    labels: Vec<usize>,
    k: usize,
}

impl CommunityLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("number of communities must be at least 1"));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(invalid(format!("label {l} of node {i} is outside [0, {k})")));
        }
        Ok(Self { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// `n × k` one-hot membership matrix, row-major.
    pub fn one_hot(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len() * self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[i * self.k + l] = 1;
        }
        out
    }

    /// Number of nodes whose label differs.
    pub fn hamming(&self, other: &Self) -> usize {
        self.labels.iter().zip(&other.labels).filter(|(a, b)| a != b).count()
    }

    pub(crate) fn set(&mut self, i: usize, label: usize) {
        debug_assert!(label < self.k);
        self.labels[i] = label;
    }

    /// Labels of the node-permuted graph: node `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut labels = vec![0; self.len()];
        for (i, &p) in perm.iter().enumerate() {
            labels[p] = self.labels[i];
        }
        Self { labels, k: self.k }
    }

    /// Community `c` renamed to `map[c]`; `map` must be a permutation of `0..k`.
    pub fn relabelled(&self, map: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.k];
        if map.len() != self.k || !map.iter().all(|&c| c < self.k && !std::mem::replace(&mut seen[c], true)) {
            return Err(invalid(format!("relabelling {map:?} is not a permutation of 0..{}", self.k)));
        }
        Ok(Self { labels: self.labels.iter().map(|&c| map[c]).collect(), k: self.k })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(CommunityLabels::new(vec![0, 1, 2], 2).is_err());
        assert!(CommunityLabels::new(vec![0], 0).is_err());
        assert!(CommunityLabels::new(vec![], 3).is_ok());
    }

    #[test]
    fn sizes_and_one_hot() {
        let l = CommunityLabels::new(vec![0, 2, 2, 1], 3).unwrap();
        assert_eq!(l.sizes(), vec![1, 1, 2]);
        assert_eq!(l.one_hot(), vec![1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1, 0]);
    }
}
