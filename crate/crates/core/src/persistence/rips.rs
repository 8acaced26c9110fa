use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use super::{CycleRepresentative, FilteredEdge, MaxScale, PairwiseDistances, PersistenceDiagram, PersistencePair};
use crate::geometry::PointCloud;
use crate::{Error, Result};

const NO_EDGE: u32 = u32::MAX;

/// Triangle in filtration order: value first, then sorted vertex triple.
///
/// Filtration values are non-negative, so their bit patterns sort like the
/// values themselves; the vertices fill the low bits, 21 bits each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct TriKey(u128);

const VERTEX_BITS: u32 = 21;
const VERTEX_MASK: u128 = (1 << VERTEX_BITS) - 1;

impl TriKey {
    fn new(value: f64, x: u32, y: u32, z: u32) -> Self {
        let mut v = [x, y, z];
        v.sort_unstable();
        Self::from_sorted(value, v[0], v[1], v[2])
    }

    fn from_sorted(value: f64, a: u32, b: u32, c: u32) -> Self {
        let packed = (a as u128) << (2 * VERTEX_BITS) | (b as u128) << VERTEX_BITS | c as u128;
        Self((value.to_bits() as u128) << 64 | packed)
    }

    fn value(&self) -> f64 {
        f64::from_bits((self.0 >> 64) as u64)
    }

    fn vertices(&self) -> (u32, u32, u32) {
        let part = |shift: u32| ((self.0 >> shift) & VERTEX_MASK) as u32;
        (part(2 * VERTEX_BITS), part(VERTEX_BITS), part(0))
    }
}

pub(super) fn sorted_edges(dist: &PairwiseDistances, threshold: f64) -> Vec<FilteredEdge> {
    let n = dist.len();
    let mut edges = Vec::new();
    for u in 0..n {
        let row = dist.row(u);
        for (v, &value) in row.iter().enumerate().skip(u + 1) {
            if value <= threshold {
                edges.push(FilteredEdge { u, v, value });
            }
        }
    }
    edges.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
    edges
}

/// Rips filtration of one cloud together with its degree-1 pairing.
pub struct RipsH1 {
    source_id: String,
    dist: PairwiseDistances,
    threshold: f64,
    capped: bool,
    edges: Vec<FilteredEdge>,
    edge_rank: Vec<u32>,
    /// Per vertex, the other vertices within the threshold by increasing
    /// distance.
    neighbors: Vec<Vec<u32>>,
    /// (birth edge rank, death triangle), sorted by birth rank; includes
    /// zero-persistence pairs.
    finite: Vec<(u32, TriKey)>,
    /// Edges whose class survives the threshold.
    essential: Vec<u32>,
    death_of_edge: HashMap<u32, TriKey>,
}

impl RipsH1 {
    /// Builds the filtration and computes the pairing.
    pub fn new(cloud: &PointCloud, max_scale: MaxScale) -> Result<Self> {
        if cloud.len() < 3 {
            return Err(Error::EmptyInput(format!(
                "'{}' has {} point(s), need at least 3",
                cloud.source_id,
                cloud.len()
            )));
        }
        if cloud.len() > VERTEX_MASK as usize {
            return Err(Error::Parameter("cloud too large".into()));
        }
        let dist = PairwiseDistances::new(&cloud.points);
        let (threshold, capped) = max_scale.resolve(&dist)?;
        Ok(Self::build(cloud.source_id.clone(), dist, threshold, capped))
    }

    fn build(source_id: String, dist: PairwiseDistances, threshold: f64, capped: bool) -> Self {
        let edges = sorted_edges(&dist, threshold);
        let n = dist.len();
        let mut edge_rank = vec![NO_EDGE; n * n];
        for (r, e) in edges.iter().enumerate() {
            edge_rank[e.u * n + e.v] = r as u32;
            edge_rank[e.v * n + e.u] = r as u32;
        }
        let neighbors = (0..n)
            .map(|u| {
                let row = dist.row(u);
                let mut list: Vec<u32> = (0..n)
                    .filter(|&k| k != u && row[k] <= threshold)
                    .map(|k| k as u32)
                    .collect();
                list.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
                list
            })
            .collect();
        let mut this = Self {
            source_id,
            dist,
            threshold,
            capped,
            edges,
            edge_rank,
            neighbors,
            finite: Vec::new(),
            essential: Vec::new(),
            death_of_edge: HashMap::new(),
        };
        this.reduce();
        this
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn edges(&self) -> &[FilteredEdge] {
        &self.edges
    }

    /// Edges that merge two components; their degree-1 columns are cleared.
    fn spanning_forest(&self) -> Vec<bool> {
        let n = self.dist.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        self.edges
            .iter()
            .map(|e| {
                let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
                if a == b {
                    false
                } else {
                    parent[a.max(b)] = a.min(b);
                    true
                }
            })
            .collect()
    }

    /// Earliest cofacet of `edge`.
    ///
    /// For a fixed edge `(u, v)`, cofacets of equal value order like their
    /// third vertex `k`, so the scan keeps the first `k` of smallest value and
    /// stops at a cofacet whose value equals the edge's own.
    fn min_cofacet(&self, edge: u32) -> Option<TriKey> {
        let e = self.edges[edge as usize];
        let (ru, rv) = (self.dist.row(e.u), self.dist.row(e.v));
        let mut best_value = f64::INFINITY;
        let mut best_k = usize::MAX;
        for k in 0..self.dist.len() {
            let value = e.value.max(ru[k]).max(rv[k]);
            if value < best_value && k != e.u && k != e.v {
                best_value = value;
                best_k = k;
                if value == e.value {
                    break;
                }
            }
        }
        (best_value <= self.threshold).then(|| TriKey::new(best_value, e.u as u32, e.v as u32, best_k as u32))
    }

    /// Coboundary reduction with columns in reverse filtration order.
    ///
    /// The pivot of a column is its earliest cofacet; a column whose pivot is
    /// already owned is reduced by adding the owner's cocycle.
    fn reduce(&mut self) {
        let forest = self.spanning_forest();
        let mut pivot_owner: HashMap<TriKey, u32> = HashMap::new();
        let mut cocycles: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut finite = Vec::new();
        let mut essential = Vec::new();

        for col in (0..self.edges.len() as u32).rev() {
            if forest[col as usize] {
                continue;
            }
            let Some(first) = self.min_cofacet(col) else {
                essential.push(col);
                continue;
            };
            if let Entry::Vacant(slot) = pivot_owner.entry(first) {
                slot.insert(col);
                finite.push((col, first));
                continue;
            }

            let mut column = WorkingColumn::default();
            column.add(self, CofacetStream::new(self.edges[col as usize]));
            let mut cocycle = vec![col];
            loop {
                match column.pop_pivot(self) {
                    None => {
                        essential.push(col);
                        break;
                    }
                    Some(pivot) => match pivot_owner.get(&pivot) {
                        Some(&owner) => {
                            let added: &[u32] = match cocycles.get(&owner) {
                                Some(c) => {
                                    // The pivot was consumed; one copy goes back
                                    // so that the owner's copy cancels it.
                                    column.add(self, CofacetStream::single(pivot));
                                    for &e in c {
                                        column.add(self, CofacetStream::new(self.edges[e as usize]));
                                    }
                                    c
                                }
                                None => {
                                    // A lone edge's coboundary starts at the pivot.
                                    let mut stream = CofacetStream::new(self.edges[owner as usize]);
                                    let head = stream.next(self);
                                    debug_assert_eq!(head, Some(pivot));
                                    column.add(self, stream);
                                    std::slice::from_ref(&owner)
                                }
                            };
                            cocycle.extend_from_slice(added);
                        }
                        None => {
                            pivot_owner.insert(pivot, col);
                            finite.push((col, pivot));
                            cocycles.insert(col, cancel_pairs(cocycle));
                            break;
                        }
                    },
                }
            }
        }

        finite.sort_unstable_by_key(|&(e, _)| e);
        essential.sort_unstable();
        self.death_of_edge = finite.iter().copied().collect();
        self.finite = finite;
        self.essential = essential;
    }

    fn pair_of(&self, birth_edge: u32, death: Option<TriKey>) -> PersistencePair {
        let birth = self.edges[birth_edge as usize].value;
        match death {
            Some(t) => PersistencePair::new(birth, t.value()),
            None => PersistencePair {
                birth,
                death: self.threshold,
                censored: true,
                generator: None,
            },
        }
    }

    /// Pairs with positive persistence as (birth edge, death triangle).
    fn nonzero_pairs(&self) -> impl Iterator<Item = (u32, Option<TriKey>)> + '_ {
        let finite = self
            .finite
            .iter()
            .filter(|(e, t)| t.value() > self.edges[*e as usize].value)
            .map(|&(e, t)| (e, Some(t)));
        // Without a cap no class survives the enclosing radius.
        debug_assert!(self.capped || self.essential.is_empty());
        let censored = self
            .essential
            .iter()
            .filter(|&&e| self.edges[e as usize].value < self.threshold)
            .map(|&e| (e, None));
        finite.chain(censored)
    }

    fn sorted_diagram(&self, pairs: Vec<PersistencePair>) -> PersistenceDiagram {
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        PersistenceDiagram::new(self.source_id.clone(), pairs)
    }

    pub fn diagram(&self) -> PersistenceDiagram {
        self.sorted_diagram(self.nonzero_pairs().map(|(e, t)| self.pair_of(e, t)).collect())
    }

    /// Diagram with a cycle representative on every finite pair.
    pub fn diagram_with_generators(&self) -> PersistenceDiagram {
        let mut memo = HashMap::new();
        let pairs = self
            .nonzero_pairs()
            .map(|(e, t)| {
                let mut p = self.pair_of(e, t);
                if let Some(t) = t {
                    p.generator = Some(self.cycle_from(self.reduced_boundary(t, &mut memo)));
                }
                p
            })
            .collect();
        self.sorted_diagram(pairs)
    }

    /// Cycle representative of the pair with exactly these values.
    pub fn generator(&self, birth: f64, death: f64) -> Result<CycleRepresentative> {
        let (_, tri) = self
            .finite
            .iter()
            .find(|(e, t)| self.edges[*e as usize].value == birth && t.value() == death)
            .filter(|_| birth < death)
            .ok_or(Error::UnknownPair { birth, death })?;
        Ok(self.cycle_from(self.reduced_boundary(*tri, &mut HashMap::new())))
    }

    fn cycle_from(&self, column: Vec<u32>) -> CycleRepresentative {
        CycleRepresentative::from_edges(
            column
                .iter()
                .map(|&r| {
                    let e = self.edges[r as usize];
                    (e.u, e.v)
                })
                .collect(),
        )
    }

    fn boundary(&self, t: TriKey) -> Vec<u32> {
        let n = self.dist.len();
        let (a, b, c) = t.vertices();
        let (a, b, c) = (a as usize, b as usize, c as usize);
        let mut col = vec![
            self.edge_rank[a * n + b],
            self.edge_rank[a * n + c],
            self.edge_rank[b * n + c],
        ];
        col.sort_unstable();
        col
    }

    /// Homology-mode reduced boundary column of a death triangle.
    ///
    /// Standard left-to-right reduction, except that only triangles which
    /// kill a class are visited: all other columns reduce to zero and never
    /// act as pivots. The result is a cycle whose latest edge is the birth
    /// edge, so every edge enters no later than the birth.
    fn reduced_boundary(&self, target: TriKey, memo: &mut HashMap<TriKey, Vec<u32>>) -> Vec<u32> {
        let mut working: HashMap<TriKey, Vec<u32>> = HashMap::new();
        let mut stack = vec![target];
        while let Some(&t) = stack.last() {
            if memo.contains_key(&t) {
                stack.pop();
                continue;
            }
            let mut col = working.remove(&t).unwrap_or_else(|| self.boundary(t));
            loop {
                let low = *col.last().expect("a death column never reduces to zero");
                if self.death_of_edge.get(&low) == Some(&t) {
                    memo.insert(t, col);
                    stack.pop();
                    break;
                }
                let earlier = *self
                    .death_of_edge
                    .get(&low)
                    .filter(|&&k| k < t)
                    .expect("boundary pivot must be owned by an earlier death triangle");
                match memo.get(&earlier) {
                    Some(other) => col = symmetric_difference(&col, other),
                    None => {
                        working.insert(t, col);
                        stack.push(earlier);
                        break;
                    }
                }
            }
        }
        memo[&target].clone()
    }
}

/// Cofacets of one edge, generated lazily in filtration order.
///
/// A third vertex `k` enters at `max(d(u,k), d(v,k))`, which is reached by
/// merging the distance-sorted neighbour lists of `u` and `v`. Vertices of
/// equal value are buffered and released by increasing `k`.
#[derive(Default)]
struct CofacetStream {
    u: u32,
    v: u32,
    value: f64,
    iu: usize,
    iv: usize,
    exhausted: bool,
    lookahead: Option<(f64, u32)>,
    /// Keys of the current value, largest first.
    pending: Vec<TriKey>,
}

impl CofacetStream {
    fn new(e: FilteredEdge) -> Self {
        Self {
            u: e.u as u32,
            v: e.v as u32,
            value: e.value,
            ..Self::default()
        }
    }

    fn single(key: TriKey) -> Self {
        Self {
            exhausted: true,
            pending: vec![key],
            ..Self::default()
        }
    }

    fn key(&self, value: f64, k: u32) -> TriKey {
        let (u, v) = (self.u, self.v);
        if k < u {
            TriKey::from_sorted(value, k, u, v)
        } else if k < v {
            TriKey::from_sorted(value, u, k, v)
        } else {
            TriKey::from_sorted(value, u, v, k)
        }
    }

    fn next_vertex(&mut self, rips: &RipsH1) -> Option<(f64, u32)> {
        if self.exhausted {
            return None;
        }
        let (u, v) = (self.u as usize, self.v as usize);
        let (lu, lv) = (&rips.neighbors[u], &rips.neighbors[v]);
        let (ru, rv) = (rips.dist.row(u), rips.dist.row(v));
        loop {
            let du = lu.get(self.iu).map(|&k| ru[k as usize]);
            let dv = lv.get(self.iv).map(|&k| rv[k as usize]);
            match (du, dv) {
                (None, None) => {
                    self.exhausted = true;
                    return None;
                }
                (Some(x), _) if dv.is_none_or(|y| x <= y) => {
                    let k = lu[self.iu];
                    self.iu += 1;
                    if k != self.v && rv[k as usize] <= x {
                        return Some((self.value.max(x), k));
                    }
                }
                (_, Some(y)) => {
                    let k = lv[self.iv];
                    self.iv += 1;
                    if k != self.u && ru[k as usize] < y {
                        return Some((self.value.max(y), k));
                    }
                }
                (Some(_), None) => unreachable!(),
            }
        }
    }

    fn next(&mut self, rips: &RipsH1) -> Option<TriKey> {
        if let Some(key) = self.pending.pop() {
            return Some(key);
        }
        let (value, k) = self.lookahead.take().or_else(|| self.next_vertex(rips))?;
        let key = self.key(value, k);
        match self.next_vertex(rips) {
            Some((w, k)) if w == value => {
                self.pending.push(key);
                self.pending.push(self.key(value, k));
            }
            other => {
                self.lookahead = other;
                return Some(key);
            }
        }
        loop {
            match self.next_vertex(rips) {
                Some((w, k)) if w == value => self.pending.push(self.key(value, k)),
                other => {
                    self.lookahead = other;
                    break;
                }
            }
        }
        self.pending.sort_unstable_by(|a, b| b.cmp(a));
        self.pending.pop()
    }
}

/// Z/2 sum of cofacet streams, merged through a heap of stream heads.
#[derive(Default)]
struct WorkingColumn {
    streams: Vec<CofacetStream>,
    heads: BinaryHeap<Reverse<(TriKey, u32)>>,
}

impl WorkingColumn {
    fn add(&mut self, rips: &RipsH1, mut stream: CofacetStream) {
        if let Some(key) = stream.next(rips) {
            self.heads.push(Reverse((key, self.streams.len() as u32)));
            self.streams.push(stream);
        }
    }

    fn advance(&mut self, rips: &RipsH1, id: u32) {
        if let Some(key) = self.streams[id as usize].next(rips) {
            self.heads.push(Reverse((key, id)));
        }
    }

    /// Removes and returns the smallest key of odd multiplicity.
    fn pop_pivot(&mut self, rips: &RipsH1) -> Option<TriKey> {
        while let Some(Reverse((key, id))) = self.heads.pop() {
            let mut count = 1;
            self.advance(rips, id);
            while let Some(&Reverse((next, other))) = self.heads.peek() {
                if next != key {
                    break;
                }
                self.heads.pop();
                count += 1;
                self.advance(rips, other);
            }
            if count % 2 == 1 {
                return Some(key);
            }
        }
        None
    }
}

fn cancel_pairs(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    for run in v.chunk_by(|a, b| a == b) {
        if run.len() % 2 == 1 {
            out.push(run[0]);
        }
    }
    out
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
