//! Finite partially ordered sets.
//!
//! The order relation is stored as one bitset row per element: bit `j` of
//! row `i` is set iff `i ⪯ j`. Chains skip the bitsets entirely and compare
//! indices. The generating arcs passed at construction are
//! kept as well, since flow networks only need a relation whose
//! reflexive-transitive closure is the order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of up-sets produced by [`Poset::enumerate_upsets`].
pub const DEFAULT_UPSET_CAP: usize = 1_000_000;

/// Default limit on the element count of a product poset.
pub const DEFAULT_PRODUCT_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(n: usize) -> Self {
        BitRow(vec![0; n.div_ceil(64)])
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.0[j >> 6] >> (j & 63)) & 1 == 1
    }

    #[inline]
    fn set(&mut self, j: usize) {
        self.0[j >> 6] |= 1 << (j & 63);
    }

    fn or_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + tz)
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Relation {
    Dense {
        up: Vec<BitRow>,
        down: Vec<BitRow>,
    },
    /// Index order `0 < 1 < ... < n-1`; avoids the quadratic bitsets on long grids.
    Total,
}

/// A finite partial order over labelled elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    /// Deduplicated generating arcs `(i, j)`, `i != j`, meaning `i ⪯ j`.
    covers: Vec<(usize, usize)>,
    relation: Relation,
    /// A linear extension: `x ⪯ y` implies `x` comes no later than `y`.
    topo: Vec<usize>,
}

enum Members<I> {
    Bits(I),
    Range(std::ops::Range<usize>),
}

impl<I: Iterator<Item = usize>> Iterator for Members<I> {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        match self {
            Members::Bits(it) => it.next(),
            Members::Range(r) => r.next(),
        }
    }
}

/// Membership vector over the elements of a poset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementSet(pub Vec<bool>);

impl ElementSet {
    pub fn empty(n: usize) -> Self {
        ElementSet(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        ElementSet(vec![true; n])
    }

    pub fn from_indices(n: usize, idx: &[usize]) -> Self {
        let mut s = Self::empty(n);
        for &i in idx {
            s.0[i] = true;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        ElementSet(self.0.iter().map(|b| !b).collect())
    }
}

/// JSON representation: `{"labels": [...], "covers": [[i, j], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PosetSpec {
    pub labels: Vec<String>,
    #[serde(default)]
    pub covers: Vec<[usize; 2]>,
}

impl Poset {
    /// Builds the reflexive-transitive closure of `covers`.
    pub fn new(labels: Vec<String>, covers: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(covers.len());
        for &(i, j) in covers {
            for k in [i, j] {
                if k >= n {
                    return Err(Error::Index { index: k, len: n });
                }
            }
            if i != j {
                arcs.push((i, j));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();

        let mut succ = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for &(i, j) in &arcs {
            succ[i].push(j);
            indeg[j] += 1;
        }
        // Kahn's algorithm, smallest index first so the extension is deterministic.
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            topo.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
            return Err(Error::Cycle(stuck));
        }

        let mut up: Vec<BitRow> = (0..n).map(|_| BitRow::zeros(n)).collect();
        for &i in topo.iter().rev() {
            let mut row = BitRow::zeros(n);
            row.set(i);
            for &j in &succ[i] {
                row.or_assign(&up[j]);
            }
            up[i] = row;
        }
        let mut down: Vec<BitRow> = (0..n).map(|_| BitRow::zeros(n)).collect();
        for (i, row) in up.iter().enumerate() {
            for j in row.iter_ones() {
                down[j].set(i);
            }
        }
        Ok(Poset {
            labels,
            covers: arcs,
            relation: Relation::Dense { up, down },
            topo,
        })
    }

    /// Chain `0 < 1 < ... < n-1` labelled by index.
    pub fn chain(n: usize) -> Self {
        Self::chain_labelled(index_labels(n))
    }

    /// Chain with the given labels, ordered as listed.
    pub fn chain_labelled(labels: Vec<String>) -> Self {
        let n = labels.len();
        Poset {
            labels,
            covers: (1..n).map(|i| (i - 1, i)).collect(),
            relation: Relation::Total,
            topo: (0..n).collect(),
        }
    }

    /// Identity order on `n` elements.
    pub fn antichain(n: usize) -> Self {
        Poset::new(index_labels(n), &[]).expect("no arcs")
    }

    pub fn from_spec(spec: &PosetSpec) -> Result<Self> {
        let covers: Vec<_> = spec.covers.iter().map(|c| (c[0], c[1])).collect();
        Poset::new(spec.labels.clone(), &covers)
    }

    pub fn to_spec(&self) -> PosetSpec {
        PosetSpec {
            labels: self.labels.clone(),
            covers: self.covers.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Generating arcs, each meaning `i ⪯ j`.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    #[inline]
    pub fn leq(&self, i: usize, j: usize) -> bool {
        match &self.relation {
            Relation::Dense { up, .. } => up[i].get(j),
            Relation::Total => i <= j,
        }
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.leq(i, j) || self.leq(j, i)
    }

    /// Elements `j` with `i ⪯ j`.
    pub fn above(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        match &self.relation {
            Relation::Dense { up, .. } => Members::Bits(up[i].iter_ones()),
            Relation::Total => Members::Range(i..self.len()),
        }
    }

    /// Elements `j` with `j ⪯ i`.
    pub fn below(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        match &self.relation {
            Relation::Dense { down, .. } => Members::Bits(down[i].iter_ones()),
            Relation::Total => Members::Range(0..i + 1),
        }
    }

    /// True iff only the diagonal of the relation is set.
    pub fn is_identity_order(&self) -> bool {
        self.covers.is_empty()
    }

    pub fn is_total_order(&self) -> bool {
        match self.relation {
            Relation::Total => true,
            Relation::Dense { .. } => {
                (0..self.len()).all(|i| (i + 1..self.len()).all(|j| self.comparable(i, j)))
            }
        }
    }

    /// Index of the least element, if there is one.
    pub fn least(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.above(i).count() == self.len())
    }

    /// Index of the greatest element, if there is one.
    pub fn greatest(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.below(i).count() == self.len())
    }

    pub fn is_increasing(&self, s: &ElementSet) -> bool {
        (0..self.len())
            .filter(|&i| s.contains(i))
            .all(|i| self.above(i).all(|j| s.contains(j)))
    }

    pub fn is_decreasing(&self, s: &ElementSet) -> bool {
        (0..self.len())
            .filter(|&i| s.contains(i))
            .all(|i| self.below(i).all(|j| s.contains(j)))
    }

    /// Smallest increasing set containing `b`.
    pub fn increase_closure(&self, b: &ElementSet) -> ElementSet {
        let mut out = ElementSet::empty(self.len());
        for i in b.indices() {
            for j in self.above(i) {
                out.0[j] = true;
            }
        }
        out
    }

    /// Smallest decreasing set containing `b`.
    pub fn decrease_closure(&self, b: &ElementSet) -> ElementSet {
        let mut out = ElementSet::empty(self.len());
        for i in b.indices() {
            for j in self.below(i) {
                out.0[j] = true;
            }
        }
        out
    }

    /// Every increasing set, including the empty set and the whole space.
    ///
    /// Elements are decided from the top of a linear extension downwards;
    /// an element may join only once all its strict successors are in, so
    /// every leaf of the recursion is a distinct up-set.
    pub fn enumerate_upsets(&self, cap: usize) -> Result<Vec<ElementSet>> {
        let n = self.len();
        let order: Vec<usize> = self.topo.iter().rev().copied().collect();
        let mut out = Vec::new();
        let mut current = vec![false; n];
        self.upsets_rec(&order, 0, &mut current, &mut out, cap)?;
        Ok(out)
    }

    fn upsets_rec(
        &self,
        order: &[usize],
        k: usize,
        current: &mut Vec<bool>,
        out: &mut Vec<ElementSet>,
        cap: usize,
    ) -> Result<()> {
        if k == order.len() {
            if out.len() >= cap {
                return Err(Error::CapExceeded(cap));
            }
            out.push(ElementSet(current.clone()));
            return Ok(());
        }
        let x = order[k];
        self.upsets_rec(order, k + 1, current, out, cap)?;
        if self.above(x).all(|y| y == x || current[y]) {
            current[x] = true;
            self.upsets_rec(order, k + 1, current, out, cap)?;
            current[x] = false;
        }
        Ok(())
    }

    /// Pointwise product order; element `(a, b)` has index `a * other.len() + b`.
    pub fn product(&self, other: &Poset) -> Result<Poset> {
        self.product_with_limit(other, DEFAULT_PRODUCT_LIMIT)
    }

    pub fn product_with_limit(&self, other: &Poset, limit: usize) -> Result<Poset> {
        let (n1, n2) = (self.len(), other.len());
        match n1.checked_mul(n2) {
            Some(n) if n <= limit => {}
            _ => return Err(Error::Size(n1, n2, limit)),
        }
        let mut labels = Vec::with_capacity(n1 * n2);
        for a in &self.labels {
            for b in &other.labels {
                labels.push(format!("({a},{b})"));
            }
        }
        let mut covers = Vec::new();
        for &(i, j) in &self.covers {
            for b in 0..n2 {
                covers.push((i * n2 + b, j * n2 + b));
            }
        }
        for a in 0..n1 {
            for &(i, j) in &other.covers {
                covers.push((a * n2 + i, a * n2 + j));
            }
        }
        Poset::new(labels, &covers)
    }

    /// True iff every pair of elements has a common lower bound.
    pub fn pairs_have_lower_bounds(&self) -> bool {
        let n = self.len();
        match &self.relation {
            Relation::Total => true,
            Relation::Dense { down, .. } => (0..n)
                .all(|x| (x..n).all(|y| down[x].0.iter().zip(&down[y].0).any(|(a, b)| a & b != 0))),
        }
    }
}

pub(crate) fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, idx: &[usize]) -> ElementSet {
        ElementSet::from_indices(n, idx)
    }

    #[test]
    fn chain_closure() {
        let p = Poset::new(index_labels(3), &[(0, 1), (1, 2)]).unwrap();
        assert!(p.leq(0, 2));
        assert!(p.leq(1, 1));
        assert!(!p.leq(2, 0));
    }

    #[test]
    fn antichain_is_diagonal() {
        let p = Poset::new(vec!["a".into(), "b".into()], &[]).unwrap();
        assert!(p.leq(0, 0) && p.leq(1, 1));
        assert!(!p.leq(0, 1) && !p.leq(1, 0));
        assert!(p.is_identity_order());
    }

    #[test]
    fn cycle_rejected() {
        let err = Poset::new(index_labels(2), &[(0, 1), (1, 0)]).unwrap_err();
        assert!(matches!(err, Error::Cycle(_)));
    }

    #[test]
    fn bad_index_rejected() {
        let err = Poset::new(index_labels(2), &[(0, 5)]).unwrap_err();
        assert_eq!(err, Error::Index { index: 5, len: 2 });
    }

    #[test]
    fn increasing_sets() {
        let p = Poset::chain(3);
        assert!(p.is_increasing(&set(3, &[2])));
        assert!(!p.is_increasing(&set(3, &[0])));
        let a = Poset::antichain(3);
        for mask in 0..8u32 {
            let s = ElementSet((0..3).map(|i| mask >> i & 1 == 1).collect());
            assert!(a.is_increasing(&s));
        }
    }

    #[test]
    fn closures() {
        let p = Poset::chain(3);
        assert_eq!(p.increase_closure(&set(3, &[1])), set(3, &[1, 2]));
        assert_eq!(p.decrease_closure(&set(3, &[1])), set(3, &[0, 1]));
        assert_eq!(p.increase_closure(&set(3, &[])), set(3, &[]));
        let a = Poset::antichain(3);
        assert_eq!(a.increase_closure(&set(3, &[0, 2])), set(3, &[0, 2]));
        assert_eq!(a.decrease_closure(&set(3, &[1])), set(3, &[1]));
    }

    #[test]
    fn enumerate_chain_and_antichain() {
        let mut ups = Poset::chain(3).enumerate_upsets(100).unwrap();
        ups.sort();
        let mut expected = vec![
            set(3, &[]),
            set(3, &[2]),
            set(3, &[1, 2]),
            set(3, &[0, 1, 2]),
        ];
        expected.sort();
        assert_eq!(ups, expected);
        assert_eq!(Poset::antichain(3).enumerate_upsets(100).unwrap().len(), 8);
        for n in 1..8 {
            assert_eq!(Poset::chain(n).enumerate_upsets(1000).unwrap().len(), n + 1);
            assert_eq!(
                Poset::antichain(n).enumerate_upsets(1000).unwrap().len(),
                1 << n
            );
        }
    }

    #[test]
    fn enumerate_cap() {
        let err = Poset::antichain(20).enumerate_upsets(1000).unwrap_err();
        assert_eq!(err, Error::CapExceeded(1000));
    }

    #[test]
    fn product_diamond() {
        let c2 = Poset::chain(2);
        let d = c2.product(&c2).unwrap();
        assert_eq!(d.len(), 4);
        // (0,1) = 1, (1,0) = 2
        assert!(!d.comparable(1, 2));
        assert!(d.leq(0, 3));
        assert!(d.leq(1, 3) && d.leq(2, 3));

        let one = Poset::antichain(1);
        let p = Poset::new(index_labels(3), &[(0, 2)]).unwrap();
        let q = p.product(&one).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.leq(i, j), q.leq(i, j));
            }
        }

        let a2 = Poset::antichain(2);
        let aa = a2.product(&a2).unwrap();
        assert!(aa.is_identity_order());
        assert_eq!(aa.len(), 4);
    }

    #[test]
    fn product_limit() {
        let c = Poset::chain(10);
        assert!(matches!(
            c.product_with_limit(&c, 50),
            Err(Error::Size(10, 10, 50))
        ));
    }

    #[test]
    fn complement_duality() {
        let p = Poset::new(index_labels(4), &[(0, 1), (0, 2), (2, 3)]).unwrap();
        for mask in 0..16u32 {
            let s = ElementSet((0..4).map(|i| mask >> i & 1 == 1).collect());
            assert_eq!(p.is_increasing(&s), p.is_decreasing(&s.complement()));
        }
    }

    #[test]
    fn poset_description_round_trip() {
        let p = Poset::new(index_labels(4), &[(0, 1), (1, 3), (2, 3)]).unwrap();
        let json = serde_json::to_string(&p.to_spec()).unwrap();
        let spec: PosetSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(Poset::from_spec(&spec).unwrap(), p);
    }
}
