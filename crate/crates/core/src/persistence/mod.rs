//! Degree-1 persistent homology of Vietoris-Rips filtrations over Z/2.
//!
//! [`RipsH1`] holds the filtration of one cloud and its persistence pairing.
//! Pairs are found by reducing the coboundary matrix with clearing; cycle
//! representatives come from a homology-mode reduction restricted to the
//! triangles that kill a class. [`brute_force_ph`] is an independent textbook
//! reduction over every simplex, used to validate the fast path.
//!
//! Simplices are totally ordered by (filtration value, dimension,
//! lexicographic vertex tuple). Filtration values are read from one shared
//! [`PairwiseDistances`] table, so both routes see bit-identical inputs.

mod oracle;
mod rips;

pub use oracle::{brute_force_ph, BRUTE_FORCE_MAX_POINTS};
pub use rips::RipsH1;

use std::fmt::Write as _;

use crate::geometry::{euclidean, KnotAnnotation, Point3, PointCloud};
use crate::{Error, Result};

/// Symmetric table of Euclidean distances.
#[derive(Debug, Clone)]
pub struct PairwiseDistances {
    n: usize,
    values: Vec<f64>,
}

impl PairwiseDistances {
    pub fn new(points: &[Point3]) -> Self {
        let n = points.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&points[i], &points[j]);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Smallest over points of the largest distance to any other point.
    ///
    /// At this scale some vertex is adjacent to all others, so the Rips
    /// complex is a cone and has no degree-1 homology left.
    pub fn enclosing_radius(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().copied().fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Upper end of the filtration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MaxScale {
    /// Enclosing radius of the cloud; no class survives it.
    #[default]
    Auto,
    Fixed(f64),
}

impl MaxScale {
    pub(crate) fn resolve(&self, dist: &PairwiseDistances) -> Result<(f64, bool)> {
        let auto = dist.enclosing_radius();
        match *self {
            MaxScale::Auto => Ok((auto, false)),
            MaxScale::Fixed(s) if !(s > 0.0) || s.is_nan() => {
                Err(Error::Parameter(format!("max_scale must be positive, got {s}")))
            }
            MaxScale::Fixed(s) => Ok((s, s < auto)),
        }
    }
}

impl std::str::FromStr for MaxScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("auto") {
            return Ok(MaxScale::Auto);
        }
        t.parse::<f64>()
            .map(MaxScale::Fixed)
            .map_err(|_| Error::Parameter(format!("max_scale must be 'auto' or a number, got '{s}'")))
    }
}

impl std::fmt::Display for MaxScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxScale::Auto => f.write_str("auto"),
            MaxScale::Fixed(s) => write!(f, "{s}"),
        }
    }
}

/// An edge `u < v` of the Rips filtration entering at `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredEdge {
    pub u: usize,
    pub v: usize,
    pub value: f64,
}

/// A Z/2 1-cycle given by its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRepresentative {
    pub edges: Vec<(usize, usize)>,
    /// `true` where the edge joins consecutive cloud points.
    pub on_backbone: Vec<bool>,
}

impl CycleRepresentative {
    pub fn from_edges(mut edges: Vec<(usize, usize)>) -> Self {
        for e in &mut edges {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        let on_backbone = edges.iter().map(|&(u, v)| v == u + 1).collect();
        Self { edges, on_backbone }
    }

    /// Distinct vertices in ascending order.
    pub fn vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Every vertex meets an even number of edges.
    pub fn is_cycle(&self) -> bool {
        let mut vs: Vec<usize> = self.edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        vs.sort_unstable();
        vs.chunk_by(|a, b| a == b).all(|run| run.len() % 2 == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    /// Set when the class was still alive at an explicit `max_scale`; `death`
    /// is then that scale.
    pub censored: bool,
    pub generator: Option<CycleRepresentative>,
}

impl PersistencePair {
    pub fn new(birth: f64, death: f64) -> Self {
        Self {
            birth,
            death,
            censored: false,
            generator: None,
        }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub degree: usize,
    pub pairs: Vec<PersistencePair>,
    pub source_id: String,
}

impl PersistenceDiagram {
    pub fn new(source_id: impl Into<String>, pairs: Vec<PersistencePair>) -> Self {
        Self {
            degree: 1,
            pairs,
            source_id: source_id.into(),
        }
    }

    /// Builds a diagram from bare (birth, death) points.
    pub fn from_points(source_id: impl Into<String>, points: &[(f64, f64)]) -> Self {
        Self::new(
            source_id,
            points.iter().map(|&(b, d)| PersistencePair::new(b, d)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// (birth, death) points sorted ascending; the multiset view.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.pairs.iter().map(|p| (p.birth, p.death)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts
    }

    /// CSV with header `birth,death`, rows sorted by (birth, death).
    ///
    /// Values use the shortest representation that parses back to the same
    /// `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("birth,death\n");
        for (b, d) in self.points() {
            let _ = writeln!(out, "{b},{d}");
        }
        out
    }

    pub fn from_csv(source_id: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "birth,death" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected header 'birth,death'".into(),
                })
            }
        }
        let mut pts = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse {
                line: i + 1,
                msg: format!("malformed row '{line}'"),
            };
            let (b, d) = line.split_once(',').ok_or_else(bad)?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if !(b < d) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("birth {b} >= death {d}"),
                });
            }
            pts.push((b, d));
        }
        Ok(Self::from_points(source_id, &pts))
    }
}

/// All edges of length at most `max_scale`, sorted by (value, u, v).
pub fn build_vr_edges(cloud: &PointCloud, max_scale: MaxScale) -> Result<Vec<FilteredEdge>> {
    if cloud.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "'{}' has {} point(s), need at least 2",
            cloud.source_id,
            cloud.len()
        )));
    }
    let dist = PairwiseDistances::new(&cloud.points);
    let (threshold, _) = max_scale.resolve(&dist)?;
    Ok(rips::sorted_edges(&dist, threshold))
}

/// Degree-1 persistence diagram of the Rips filtration of `cloud`.
pub fn compute_ph1(cloud: &PointCloud, max_scale: MaxScale) -> Result<PersistenceDiagram> {
    Ok(RipsH1::new(cloud, max_scale)?.diagram())
}

/// Cycle representative for `pair`, a pair of the (auto-scaled) diagram of
/// `cloud`.
pub fn compute_generator(cloud: &PointCloud, pair: &PersistencePair) -> Result<CycleRepresentative> {
    RipsH1::new(cloud, MaxScale::Auto)?.generator(pair.birth, pair.death)
}

/// Fraction of the cycle's distinct vertices that come from the knot core.
///
/// A cloud point maps back to the Cα atom starting its segment.
pub fn cycle_core_overlap(cycle: &CycleRepresentative, cloud: &PointCloud, annotation: &KnotAnnotation) -> f64 {
    let vertices = cycle.vertices();
    if vertices.is_empty() {
        return 0.0;
    }
    let inside = vertices
        .iter()
        .filter(|&&i| annotation.contains(cloud.backbone_index(i)))
        .count();
    inside as f64 / vertices.len() as f64
}

/// CSV with header `u,v,on_backbone`.
pub fn generator_to_csv(cycle: &CycleRepresentative) -> String {
    let mut out = String::from("u,v,on_backbone\n");
    for (&(u, v), &b) in cycle.edges.iter().zip(&cycle.on_backbone) {
        let _ = writeln!(out, "{u},{v},{b}");
    }
    out
}
