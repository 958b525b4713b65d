use std::collections::HashMap;

use super::{DataError, EnrollmentTable};

pub type Triple = [u32; 3];

fn sorted_triple(a: usize, b: usize, c: usize) -> Triple {
    let mut t = [a as u32, b as u32, c as u32];
    t.sort_unstable();
    t
}

/// Exam sizes plus sparse pair and triple co-enrollment counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoenrollmentStats {
    sizes: Vec<u32>,
    // neighbors[e] = sorted (other exam, count) with count >= 1
    neighbors: Vec<Vec<(usize, u32)>>,
    triples: HashMap<Triple, u32>,
}

pub fn compute_stats(t: &EnrollmentTable) -> CoenrollmentStats {
    let n = t.num_exams();
    let mut pairs: HashMap<(usize, usize), u32> = HashMap::new();
    let mut triples: HashMap<Triple, u32> = HashMap::new();
    for roster in t.rosters() {
        // rosters are sorted, so (a, b, c) below are already ordered
        for (x, &a) in roster.iter().enumerate() {
            for (y, &b) in roster.iter().enumerate().skip(x + 1) {
                *pairs.entry((a, b)).or_insert(0) += 1;
                for &c in &roster[y + 1..] {
                    *triples.entry([a as u32, b as u32, c as u32]).or_insert(0) += 1;
                }
            }
        }
    }
    CoenrollmentStats::assemble(t.exam_sizes(), n, pairs, triples)
}

impl CoenrollmentStats {
    fn assemble(
        sizes: Vec<u32>,
        n: usize,
        pairs: HashMap<(usize, usize), u32>,
        triples: HashMap<Triple, u32>,
    ) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for ((a, b), c) in pairs {
            if c > 0 {
                neighbors[a].push((b, c));
                neighbors[b].push((a, c));
            }
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
        }
        let triples = triples.into_iter().filter(|&(_, c)| c > 0).collect();
        Self { sizes, neighbors, triples }
    }

    /// Build stats directly from counts. Pairs and triples may be listed in
    /// any orientation; each unordered key must appear at most once.
    pub fn from_counts(
        sizes: Vec<u32>,
        pairs: impl IntoIterator<Item = ((usize, usize), u32)>,
        triples: impl IntoIterator<Item = ((usize, usize, usize), u32)>,
    ) -> Result<Self, DataError> {
        let n = sizes.len();
        let mut pmap = HashMap::new();
        for ((a, b), c) in pairs {
            if a == b || a >= n || b >= n {
                return Err(DataError::Stats(format!("invalid pair ({a}, {b})")));
            }
            if c > sizes[a].min(sizes[b]) {
                return Err(DataError::Stats(format!("pair ({a}, {b}) count {c} exceeds exam size")));
            }
            if pmap.insert((a.min(b), a.max(b)), c).is_some() {
                return Err(DataError::Stats(format!("pair ({a}, {b}) listed twice")));
            }
        }
        let mut tmap = HashMap::new();
        for ((a, b, c), v) in triples {
            if a == b || b == c || a == c || a >= n || b >= n || c >= n {
                return Err(DataError::Stats(format!("invalid triple ({a}, {b}, {c})")));
            }
            let key = sorted_triple(a, b, c);
            let [x, y, z] = key.map(|v| v as usize);
            let bound = [(x, y), (x, z), (y, z)]
                .iter()
                .map(|p| pmap.get(p).copied().unwrap_or(0))
                .min()
                .unwrap_or(0);
            if v > bound {
                return Err(DataError::Stats(format!("triple ({a}, {b}, {c}) count {v} exceeds a pair count")));
            }
            if tmap.insert(key, v).is_some() {
                return Err(DataError::Stats(format!("triple ({a}, {b}, {c}) listed twice")));
            }
        }
        Ok(Self::assemble(sizes, n, pmap, tmap))
    }

    pub fn num_exams(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, e: usize) -> u32 {
        self.sizes[e]
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn total_enrollment(&self) -> u64 {
        self.sizes.iter().map(|&q| q as u64).sum()
    }

    /// c_ij; zero for `i == j` or unrelated exams.
    pub fn pair(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return 0;
        }
        let list = &self.neighbors[i];
        match list.binary_search_by_key(&j, |&(f, _)| f) {
            Ok(pos) => list[pos].1,
            Err(_) => 0,
        }
    }

    /// Exams co-enrolled with `e`, with counts, sorted by exam index.
    pub fn neighbors(&self, e: usize) -> &[(usize, u32)] {
        &self.neighbors[e]
    }

    /// Positive pair counts as `(i, j, c)` with `i < j`, in index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&(j, _)| j > i).map(move |&(j, c)| (i, j, c)))
    }

    pub fn num_pairs(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn triple(&self, i: usize, j: usize, l: usize) -> u32 {
        if i == j || j == l || i == l {
            return 0;
        }
        self.triples.get(&sorted_triple(i, j, l)).copied().unwrap_or(0)
    }

    /// Positive triple counts keyed by sorted exam triple (unordered iteration).
    pub fn triples(&self) -> impl Iterator<Item = (Triple, u32)> + '_ {
        self.triples.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }
}

/// Co-enrollment graph with non-neighbor counts `h_e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    adjacency: Vec<Vec<usize>>,
}

pub fn build_conflict_graph(stats: &CoenrollmentStats) -> ConflictGraph {
    let adjacency = (0..stats.num_exams())
        .map(|e| stats.neighbors(e).iter().map(|&(f, _)| f).collect())
        .collect();
    ConflictGraph { adjacency }
}

impl ConflictGraph {
    /// Graph on `n` vertices from an undirected edge list.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n && a != b, "invalid edge ({a}, {b})");
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, e: usize) -> &[usize] {
        &self.adjacency[e]
    }

    pub fn degree(&self, e: usize) -> usize {
        self.adjacency[e].len()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// h_e = |E| - 1 - deg(e).
    pub fn non_neighbor_count(&self, e: usize) -> usize {
        self.num_vertices() - 1 - self.degree(e)
    }

    /// NN_e, in index order.
    pub fn non_neighbors(&self, e: usize) -> Vec<usize> {
        let adj = &self.adjacency[e];
        (0..self.num_vertices()).filter(|&f| f != e && adj.binary_search(&f).is_err()).collect()
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &a)| vertices[i + 1..].iter().all(|&b| a != b && self.is_adjacent(a, b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &str)]) -> EnrollmentTable {
        EnrollmentTable::from_records(rows.iter().copied())
    }

    #[test]
    fn pair_counts_by_definition() {
        let t = table(&[("A", "e1"), ("A", "e2"), ("B", "e1"), ("B", "e2"), ("C", "e2"), ("C", "e3")]);
        let s = compute_stats(&t);
        let (e1, e2, e3) = (0, 1, 2);
        assert_eq!(s.pair(e1, e2), 2);
        assert_eq!(s.pair(e2, e3), 1);
        assert_eq!(s.pair(e1, e3), 0);
        assert_eq!(s.num_triples(), 0);
        assert_eq!(s.sizes(), &[2, 3, 1]);
    }

    #[test]
    fn single_triple() {
        let t = table(&[("A", "e1"), ("A", "e2"), ("A", "e3")]);
        let s = compute_stats(&t);
        assert_eq!(s.triple(2, 0, 1), 1);
        assert_eq!(s.pair(0, 1), 1);
        assert_eq!(s.pair(0, 2), 1);
        assert_eq!(s.pair(1, 2), 1);
    }

    #[test]
    fn edgeless_and_complete_graphs() {
        let s = CoenrollmentStats::from_counts(vec![5; 4], [], []).unwrap();
        let g = build_conflict_graph(&s);
        assert!((0..4).all(|e| g.non_neighbor_count(e) == 3 && g.degree(e) == 0));

        let pairs = (0..4).flat_map(|i| (i + 1..4).map(move |j| ((i, j), 1)));
        let s = CoenrollmentStats::from_counts(vec![5; 4], pairs, []).unwrap();
        let g = build_conflict_graph(&s);
        assert!((0..4).all(|e| g.non_neighbor_count(e) == 0));
        assert!(g.is_clique(&[0, 1, 2, 3]));
    }

    #[test]
    fn from_counts_validates() {
        assert!(CoenrollmentStats::from_counts(vec![1, 1], [((0, 1), 2)], []).is_err());
        assert!(CoenrollmentStats::from_counts(vec![3, 3, 3], [((0, 1), 1)], [((0, 1, 2), 1)]).is_err());
        assert!(CoenrollmentStats::from_counts(vec![3, 3], [((0, 1), 1), ((1, 0), 1)], []).is_err());
    }
}
