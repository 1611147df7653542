//! Disjoint-set forest with path compression and union by rank.
//!
//! Blocking and subcluster detection both reduce to connected components over
//! an edge relation; this is the structure that computes them.

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Joins the sets holding `a` and `b`. Returns `true` if they were apart.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return false;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] = self.rank[ra].saturating_add(1);
        }
        true
    }

    /// Unions every element of `items` with the first one.
    pub fn union_all(&mut self, items: &[usize]) {
        if let Some((&first, rest)) = items.split_first() {
            for &other in rest {
                self.union(first, other);
            }
        }
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Components as sorted index lists, ordered by their smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        let mut first_of_root = vec![usize::MAX; n];
        for i in 0..n {
            let r = self.find(i);
            if first_of_root[r] == usize::MAX {
                first_of_root[r] = i;
            }
            by_root.entry(first_of_root[r]).or_default().push(i);
        }
        by_root.into_values().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_until_joined() {
        let mut uf = UnionFind::new(4);
        assert_eq!(uf.components().len(), 4);
        assert!(uf.union(0, 2));
        assert!(!uf.union(2, 0));
        assert!(uf.connected(0, 2));
        assert!(!uf.connected(1, 3));
        assert_eq!(uf.components(), vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn transitive_chain() {
        let mut uf = UnionFind::new(6);
        uf.union(0, 1);
        uf.union(4, 5);
        uf.union(1, 5);
        assert_eq!(uf.components(), vec![vec![0, 1, 4, 5], vec![2], vec![3]]);
    }

    #[test]
    fn union_all_groups() {
        let mut uf = UnionFind::new(5);
        uf.union_all(&[4, 1, 3]);
        uf.union_all(&[]);
        assert_eq!(uf.components(), vec![vec![0], vec![1, 3, 4], vec![2]]);
    }
}
