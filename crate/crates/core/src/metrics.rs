//! Wasserstein distances between persistence diagrams and the labelled
//! distance matrices built from them.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::format::fmt_g;
use crate::par;
use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

/// An exponent that is either a real number >= 1 or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    fn validate(&self, name: &str) -> Result<()> {
        match *self {
            Exponent::Finite(p) if !(p >= 1.0) || !p.is_finite() => {
                Err(Error::Parameter(format!("{name} must be >= 1 or infinity, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "Inf" | "INF") {
            return Ok(Exponent::Infinity);
        }
        let p: f64 = t.parse().map_err(|_| Error::Parameter(format!("bad exponent '{s}'")))?;
        let e = Exponent::Finite(p);
        e.validate("exponent")?;
        Ok(e)
    }
}

/// `W_p[L_q]`; the default is `p = 1`, `q = infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WassersteinParams {
    pub p: Exponent,
    pub q: Exponent,
}

impl Default for WassersteinParams {
    fn default() -> Self {
        Self {
            p: Exponent::Finite(1.0),
            q: Exponent::Infinity,
        }
    }
}

/// L_q distance between two diagram points.
pub fn ground_cost(a: (f64, f64), b: (f64, f64), q: Exponent) -> f64 {
    let db = (a.0 - b.0).abs();
    let dd = (a.1 - b.1).abs();
    match q {
        Exponent::Infinity => db.max(dd),
        Exponent::Finite(1.0) => db + dd,
        Exponent::Finite(2.0) => db.hypot(dd),
        Exponent::Finite(q) => (db.powf(q) + dd.powf(q)).powf(1.0 / q),
    }
}

/// L_q distance from a point to its orthogonal projection on the diagonal.
pub fn diagonal_cost(a: (f64, f64), q: Exponent) -> f64 {
    let half = (a.1 - a.0).abs() / 2.0;
    match q {
        Exponent::Infinity => half,
        Exponent::Finite(1.0) => 2.0 * half,
        Exponent::Finite(q) => half * 2f64.powf(1.0 / q),
    }
}

/// Sum of already exponentiated costs, added in ascending order so the
/// total does not depend on the order the matching was found in.
fn canonical_sum(mut costs: Vec<f64>) -> f64 {
    costs.sort_by(f64::total_cmp);
    costs.iter().sum()
}

fn finish(total: f64, p: f64) -> f64 {
    if p == 1.0 {
        total
    } else {
        total.powf(1.0 / p)
    }
}

/// Wasserstein distance between two diagrams.
pub fn wasserstein(d1: &PersistenceDiagram, d2: &PersistenceDiagram, params: WassersteinParams) -> Result<f64> {
    wasserstein_points(&d1.points(), &d2.points(), params)
}

/// Wasserstein distance between two multisets of (birth, death) points.
///
/// The partial matching problem becomes a perfect matching on `n1 + n2`
/// nodes per side: each point gets a diagonal proxy on the opposite side,
/// proxies match each other for free, and a point may only use its own
/// proxy.
pub fn wasserstein_points(a: &[(f64, f64)], b: &[(f64, f64)], params: WassersteinParams) -> Result<f64> {
    params.p.validate("p")?;
    params.q.validate("q")?;
    if a.iter().chain(b).any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Parameter("diagram points must be finite".into()));
    }
    if a.is_empty() && b.is_empty() {
        return Ok(0.0);
    }
    // Sorting both sides and fixing which goes first makes the result
    // bit-identical under swapping and reordering, even when several
    // optimal matchings tie.
    let (a, b) = canonical_order(a, b);
    let (a, b) = (a.as_slice(), b.as_slice());
    let q = params.q;
    let n = a.len() + b.len();
    let mut cost = vec![vec![f64::INFINITY; n]; n];
    for (i, &pa) in a.iter().enumerate() {
        for (j, &pb) in b.iter().enumerate() {
            cost[i][j] = ground_cost(pa, pb, q);
        }
        cost[i][b.len() + i] = diagonal_cost(pa, q);
    }
    for (j, &pb) in b.iter().enumerate() {
        cost[a.len() + j][j] = diagonal_cost(pb, q);
        for k in 0..a.len() {
            cost[a.len() + j][b.len() + k] = 0.0;
        }
    }
    match params.p {
        Exponent::Finite(p) => {
            let powered: Vec<Vec<f64>> = cost
                .iter()
                .map(|row| row.iter().map(|&c| if p == 1.0 { c } else { c.powf(p) }).collect())
                .collect();
            let assignment = hungarian(&powered);
            let chosen = assignment.iter().enumerate().map(|(i, &j)| powered[i][j]).collect();
            Ok(finish(canonical_sum(chosen), p))
        }
        Exponent::Infinity => Ok(bottleneck(&cost)),
    }
}

type Points = Vec<(f64, f64)>;

fn canonical_order(a: &[(f64, f64)], b: &[(f64, f64)]) -> (Points, Points) {
    let key = |x: &(f64, f64), y: &(f64, f64)| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1));
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(key);
    b.sort_by(key);
    let a_first = a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(&b)
            .map(|(x, y)| key(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if a_first.is_gt() {
        (b, a)
    } else {
        (a, b)
    }
}

/// Minimum-cost perfect matching on a square matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns the column assigned to each row.
///
/// Entries may be `INFINITY` to forbid a pairing, as long as some perfect
/// matching of finite cost exists.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based, column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            assert!(delta.is_finite(), "no finite perfect matching exists");
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// Smallest threshold admitting a perfect matching among entries at or
/// below it, by binary search over the distinct finite costs.
fn bottleneck(cost: &[Vec<f64>]) -> f64 {
    let mut candidates: Vec<f64> = cost.iter().flatten().copied().filter(|c| c.is_finite()).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(cost, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

fn has_perfect_matching(cost: &[Vec<f64>], limit: f64) -> bool {
    let n = cost.len();
    let mut match_col: Vec<Option<usize>> = vec![None; n];
    fn augment(row: usize, cost: &[Vec<f64>], limit: f64, seen: &mut [bool], match_col: &mut [Option<usize>]) -> bool {
        for col in 0..cost.len() {
            if cost[row][col] <= limit && !seen[col] {
                seen[col] = true;
                let free = match match_col[col] {
                    None => true,
                    Some(r) => augment(r, cost, limit, seen, match_col),
                };
                if free {
                    match_col[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|row| {
        let mut seen = vec![false; n];
        augment(row, cost, limit, &mut seen, &mut match_col)
    })
}

/// Symmetric matrix of nonnegative dissimilarities over labelled items.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates labels, shape, symmetry (within 1e-12), nonnegativity and a
    /// zero diagonal.
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::Parameter(format!(
                "matrix has {} entries, expected {n}x{n}",
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::IdCollision(id.clone()));
            }
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Parameter(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let x = values[i * n + j];
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::Parameter(format!(
                        "entry ({i},{j}) = {x} is not a finite nonnegative value"
                    )));
                }
                if (x - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::Parameter(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { ids, values })
    }

    /// Fills the matrix from a function on unordered pairs `i < j`.
    pub fn from_pairs(ids: Vec<String>, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> Result<Self> {
        let n = ids.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let computed = par::map_slice(&pairs, |&(i, j)| f(i, j));
        let mut values = vec![0.0; n * n];
        for (&(i, j), &x) in pairs.iter().zip(&computed) {
            values[i * n + j] = x;
            values[j * n + i] = x;
        }
        Self::new(ids, values)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Restriction to the given rows/columns, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let ids = indices.iter().map(|&i| self.ids[i].clone()).collect();
        let values = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self::new(ids, values)
    }

    /// CSV whose first row and column hold the ids; values use 12
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        let n = self.len();
        for i in 0..n {
            out.push_str(&self.ids[i]);
            for j in 0..n {
                let _ = write!(out, ",{}", fmt_g(self.get(i, j), 12));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (ids, values) = parse_matrix_csv(text)?;
        Self::new(ids, values)
    }
}

/// Reads the labelled square CSV layout without validating its values.
pub fn parse_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty matrix".into(),
    })?;
    let ids: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let n = ids.len();
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != n + 1 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {} cells", n + 1),
            });
        }
        if rows >= n || cells[0] != ids[rows] {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("row label '{}' out of order", cells[0]),
            });
        }
        for c in &cells[1..] {
            values.push(c.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("'{c}' is not a number"),
            })?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: rows + 1,
            msg: format!("expected {n} rows, found {rows}"),
        });
    }
    Ok((ids, values))
}

/// Wasserstein distances between all pairs, keyed by `source_id`.
pub fn pairwise_wasserstein(diagrams: &[PersistenceDiagram], params: WassersteinParams) -> Result<DistanceMatrix> {
    if diagrams.len() < 2 {
        return Err(Error::EmptyInput("need at least two diagrams".into()));
    }
    params.p.validate("p")?;
    params.q.validate("q")?;
    let ids: Vec<String> = diagrams.iter().map(|d| d.source_id.clone()).collect();
    let points: Vec<Vec<(f64, f64)>> = diagrams.iter().map(|d| d.points()).collect();
    // Parameters were validated above, so the per-pair call cannot fail.
    DistanceMatrix::from_pairs(ids, |i, j| {
        wasserstein_points(&points[i], &points[j], params).expect("validated parameters")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        wasserstein_points(a, b, WassersteinParams::default()).unwrap()
    }

    #[test]
    fn single_point_to_diagonal() {
        assert_eq!(w(&[(0.0, 2.0)], &[]), 1.0);
        assert_eq!(w(&[], &[(0.0, 2.0)]), 1.0);
        assert_eq!(w(&[], &[]), 0.0);
    }

    #[test]
    fn partial_matching_example() {
        assert_eq!(w(&[(0.0, 2.0), (0.0, 4.0)], &[(0.0, 4.0)]), 1.0);
        let d = [(0.1, 0.7), (0.3, 2.5), (1.0, 1.25)];
        assert_eq!(w(&d, &d), 0.0);
    }

    #[test]
    fn other_exponents() {
        let two = WassersteinParams {
            p: Exponent::Finite(2.0),
            q: Exponent::Finite(2.0),
        };
        let x = wasserstein_points(&[(0.0, 2.0)], &[], two).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
        let bn = WassersteinParams {
            p: Exponent::Infinity,
            q: Exponent::Infinity,
        };
        let x = wasserstein_points(&[(0.0, 2.0), (0.0, 6.0)], &[(0.0, 4.0)], bn).unwrap();
        assert_eq!(x, 2.0);
        let bad = WassersteinParams {
            p: Exponent::Finite(0.5),
            q: Exponent::Infinity,
        };
        assert!(wasserstein_points(&[], &[], bad).is_err());
    }

    #[test]
    fn hungarian_small() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&c);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn pairwise_examples() {
        let d = PersistenceDiagram::from_points("a", &[(0.0, 2.0)]);
        let e = PersistenceDiagram::from_points("b", &[]);
        let m = pairwise_wasserstein(&[d.clone(), e], WassersteinParams::default()).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0, 1.0, 0.0]);
        let dup = pairwise_wasserstein(&[d.clone(), d], WassersteinParams::default());
        assert_eq!(dup.unwrap_err(), Error::IdCollision("a".into()));
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = DistanceMatrix::new(
            vec!["a".into(), "b".into()],
            vec![0.0, std::f64::consts::PI, std::f64::consts::PI, 0.0],
        )
        .unwrap();
        let csv = m.to_csv();
        assert_eq!(csv, "id,a,b\na,0,3.14159265359\nb,3.14159265359,0\n");
        let back = DistanceMatrix::from_csv(&csv).unwrap();
        assert_eq!(back.ids(), m.ids());
        assert!((back.get(0, 1) - m.get(0, 1)).abs() < 1e-11);
    }

    #[test]
    fn matrix_validation() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(DistanceMatrix::new(ids.clone(), vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(ids.clone(), vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(ids.clone(), vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(ids, vec![0.0]).is_err());
    }
}
