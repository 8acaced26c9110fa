//! Persistence landscapes stored exactly as critical points.
//!
//! Layer `k` (1-based) of the landscape of a diagram is the k-th largest tent
//! function `f_(b,d)(t)` at each `t`. Every layer is piecewise linear, so it
//! is kept as the list of its breakpoints `(t, value)` with `t` strictly
//! increasing; outside the listed range the layer is zero. Norms and
//! distances integrate each linear piece in closed form.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::format::fmt_g;
use crate::persistence::PersistenceDiagram;
use crate::{par, rng, Error, Result};

/// Default number of repartitions in [`randomization_test`].
pub const DEFAULT_PERMUTATIONS: usize = 1000;

/// Tent function of the pair `(b, d)`.
pub fn tent(b: f64, d: f64, t: f64) -> f64 {
    let mid = (b + d) / 2.0;
    if t < b || t > d {
        0.0
    } else if t <= mid {
        t - b
    } else {
        d - t
    }
}

/// One piecewise-linear layer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layer {
    points: Vec<(f64, f64)>,
}

impl Layer {
    /// Wraps breakpoints; `t` must be strictly increasing.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(i) = points.windows(2).position(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Parameter(format!("breakpoint {} does not increase in t", i + 1)));
        }
        if points.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::Parameter("breakpoints must be finite".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Linear interpolation between breakpoints, zero outside.
    pub fn eval(&self, t: f64) -> f64 {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.0 < t);
        if i == pts.len() {
            return 0.0;
        }
        let (t1, v1) = pts[i];
        if t1 == t {
            return v1;
        }
        if i == 0 {
            return 0.0;
        }
        let (t0, v0) = pts[i - 1];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn push(&mut self, t: f64, v: f64) {
        match self.points.last_mut() {
            Some(last) if last.0 >= t => last.1 = last.1.max(v),
            _ => self.points.push((t, v)),
        }
    }

    /// Largest breakpoint value, first on ties.
    pub fn global_max(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .copied()
            .fold(None, |best: Option<(f64, f64)>, p| match best {
                Some(b) if b.1 >= p.1 => Some(b),
                _ => Some(p),
            })
    }

    /// Breakpoints that are local maxima with positive value.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        let pts = &self.points;
        (0..pts.len())
            .filter(|&i| {
                let v = pts[i].1;
                let prev = if i == 0 { 0.0 } else { pts[i - 1].1 };
                let next = pts.get(i + 1).map_or(0.0, |p| p.1);
                v > 0.0 && v >= prev && v >= next && (v > prev || v > next)
            })
            .map(|i| pts[i])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Landscape {
    layers: Vec<Layer>,
}

impl Landscape {
    /// The zero landscape.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Drops trailing empty layers.
    pub fn new(mut layers: Vec<Layer>) -> Self {
        while layers.last().is_some_and(Layer::is_empty) {
            layers.pop();
        }
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Layer `k`, 1-based.
    pub fn layer(&self, k: usize) -> Option<&Layer> {
        k.checked_sub(1).and_then(|i| self.layers.get(i))
    }

    pub fn eval(&self, k: usize, t: f64) -> f64 {
        self.layer(k).map_or(0.0, |l| l.eval(t))
    }
}

/// Exact landscape of a diagram.
///
/// Sweep over pairs sorted by birth ascending and death descending. Each
/// layer starts from the first remaining pair and repeatedly jumps to the
/// next pair that dies later, recording where the tents cross; the part of a
/// tent hidden under the crossing goes back into the queue for deeper layers.
pub fn diagram_to_landscape(diagram: &PersistenceDiagram) -> Landscape {
    landscape_from_points(&diagram.points())
}

pub fn landscape_from_points(points: &[(f64, f64)]) -> Landscape {
    let mut queue: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(b, d)| b < d && b.is_finite() && d.is_finite())
        .collect();
    let order = |x: &(f64, f64), y: &(f64, f64)| x.0.total_cmp(&y.0).then(y.1.total_cmp(&x.1));
    queue.sort_by(order);

    let mut layers = Vec::new();
    while !queue.is_empty() {
        let mut layer = Layer::default();
        let (mut b, mut d) = queue.remove(0);
        layer.push(b, 0.0);
        layer.push((b + d) / 2.0, (d - b) / 2.0);
        let mut from = 0;
        loop {
            let Some(q) = (from..queue.len()).find(|&q| queue[q].1 > d) else {
                layer.push(d, 0.0);
                break;
            };
            let (b2, d2) = queue.remove(q);
            from = q;
            if b2 > d {
                layer.push(d, 0.0);
            }
            if b2 >= d {
                layer.push(b2, 0.0);
            } else {
                layer.push((b2 + d) / 2.0, (d - b2) / 2.0);
                let hidden = (b2, d);
                let pos = q + queue[q..].partition_point(|x| order(x, &hidden).is_lt());
                queue.insert(pos, hidden);
            }
            layer.push((b2 + d2) / 2.0, (d2 - b2) / 2.0);
            b = b2;
            d = d2;
        }
        let _ = b;
        layers.push(layer);
    }
    Landscape::new(layers)
}

pub fn landscape_eval(l: &Landscape, k: usize, t: f64) -> f64 {
    l.eval(k, t)
}

fn integer_exponent(p: f64) -> Result<u32> {
    if p >= 1.0 && p.fract() == 0.0 && p <= 64.0 {
        Ok(p as u32)
    } else {
        Err(Error::Unsupported(format!(
            "landscape norms need an integer p >= 1, got {p}"
        )))
    }
}

/// Integral of `|f|^p` for `f` linear from `y0` to `y1` over width `h`.
fn segment_integral(h: f64, y0: f64, y1: f64, p: u32) -> f64 {
    let pow_sum = |a: f64, b: f64| -> f64 {
        // sum_{i=0}^{p} a^i b^(p-i), the closed form of the integral
        // divided by h / (p + 1).
        (0..=p).map(|i| a.powi(i as i32) * b.powi((p - i) as i32)).sum()
    };
    if h <= 0.0 {
        return 0.0;
    }
    if (y0 >= 0.0 && y1 >= 0.0) || (y0 <= 0.0 && y1 <= 0.0) {
        h * pow_sum(y0.abs(), y1.abs()) / f64::from(p + 1)
    } else {
        let (a, b) = (y0.abs(), y1.abs());
        let h0 = h * a / (a + b);
        let h1 = h - h0;
        (h0 * a.powi(p as i32) + h1 * b.powi(p as i32)) / f64::from(p + 1)
    }
}

/// Integral of `|l1 - l2|^p` over the real line, on the merged breakpoint grid.
fn layer_difference_integral(l1: Option<&Layer>, l2: Option<&Layer>, p: u32) -> f64 {
    let empty = Layer::default();
    let (a, b) = (l1.unwrap_or(&empty), l2.unwrap_or(&empty));
    let grid = merged_grid([a, b]);
    grid.windows(2)
        .map(|w| {
            let (t0, t1) = (w[0], w[1]);
            segment_integral(t1 - t0, a.eval(t0) - b.eval(t0), a.eval(t1) - b.eval(t1), p)
        })
        .sum()
}

fn merged_grid<'a>(layers: impl IntoIterator<Item = &'a Layer>) -> Vec<f64> {
    let mut grid: Vec<f64> = layers.into_iter().flat_map(|l| l.points.iter().map(|p| p.0)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `L_p` distance between landscapes; missing layers count as zero.
pub fn landscape_distance(l1: &Landscape, l2: &Landscape, p: f64) -> Result<f64> {
    let pi = integer_exponent(p)?;
    let depth = l1.depth().max(l2.depth());
    let total: f64 = (1..=depth)
        .map(|k| layer_difference_integral(l1.layer(k), l2.layer(k), pi))
        .sum();
    Ok(if pi == 1 { total } else { total.powf(1.0 / p) })
}

/// `L_p` norm, the distance to the zero landscape.
pub fn landscape_lp_norm(l: &Landscape, p: f64) -> Result<f64> {
    landscape_distance(l, &Landscape::zero(), p)
}

/// Sum over `k` in `layers` of the `L_1` distance between layers `k`.
pub fn layer_restricted_distance(l1: &Landscape, l2: &Landscape, layers: &BTreeSet<usize>) -> Result<f64> {
    if layers.is_empty() || layers.contains(&0) {
        return Err(Error::Parameter("layer set must be nonempty with members >= 1".into()));
    }
    Ok(layers
        .iter()
        .map(|&k| layer_difference_integral(l1.layer(k), l2.layer(k), 1))
        .sum())
}

/// A labelled, nonempty collection of landscapes.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeSample {
    pub label: String,
    pub landscapes: Vec<Landscape>,
}

impl LandscapeSample {
    pub fn new(label: impl Into<String>, landscapes: Vec<Landscape>) -> Result<Self> {
        let label = label.into();
        if landscapes.is_empty() {
            return Err(Error::Parameter(format!("sample '{label}' is empty")));
        }
        Ok(Self { label, landscapes })
    }
}

/// Pointwise mean of the sample, on the union of all breakpoint grids.
pub fn average_landscape(sample: &LandscapeSample) -> Result<Landscape> {
    average_of(&sample.landscapes.iter().collect::<Vec<_>>())
}

fn average_of(members: &[&Landscape]) -> Result<Landscape> {
    if members.is_empty() {
        return Err(Error::Parameter("cannot average an empty sample".into()));
    }
    let n = members.len() as f64;
    let depth = members.iter().map(|l| l.depth()).max().unwrap_or(0);
    let layers = (1..=depth)
        .map(|k| {
            let grid = merged_grid(members.iter().filter_map(|l| l.layer(k)));
            let points = grid
                .into_iter()
                .map(|t| (t, members.iter().map(|l| l.eval(k, t)).sum::<f64>() / n))
                .collect();
            Layer { points }
        })
        .collect();
    Ok(Landscape::new(layers))
}

/// Outcome of a two-sample randomization test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub t_obs: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
}

/// Permutation test on the distance between sample averages.
///
/// Draw `i` shuffles the pooled indices (Fisher-Yates) with a generator
/// seeded from `(seed, i)` and splits them into groups of the original
/// sizes. The p-value is the fraction of draws whose statistic is at least
/// the observed one; the observed split is not added, so 0 means `< 1/k`.
pub fn randomization_test(
    a: &LandscapeSample,
    b: &LandscapeSample,
    k: usize,
    seed: u64,
    norm_p: f64,
) -> Result<TestOutcome> {
    if k == 0 {
        return Err(Error::Parameter("number of permutations must be >= 1".into()));
    }
    integer_exponent(norm_p)?;
    let t_obs = landscape_distance(&average_landscape(a)?, &average_landscape(b)?, norm_p)?;
    let pooled: Vec<&Landscape> = a.landscapes.iter().chain(&b.landscapes).collect();
    let n = a.landscapes.len();
    let hits = par::map_range(k, |draw| -> Result<bool> {
        let mut rng = rng::seeded(rng::derive_seed(seed, draw as u64));
        let mut idx: Vec<usize> = (0..pooled.len()).collect();
        idx.shuffle(&mut rng);
        let first: Vec<&Landscape> = idx[..n].iter().map(|&i| pooled[i]).collect();
        let second: Vec<&Landscape> = idx[n..].iter().map(|&i| pooled[i]).collect();
        let stat = landscape_distance(&average_of(&first)?, &average_of(&second)?, norm_p)?;
        Ok(stat >= t_obs)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let count = hits.iter().filter(|&&h| h).count();
    Ok(TestOutcome {
        t_obs,
        p_value: count as f64 / k as f64,
        permutations: k,
        seed,
    })
}

/// Peak of layer `k`: the global maximum, or the local maximum closest to
/// `near` when given.
pub fn layer_peak(l: &Landscape, k: usize, near: Option<f64>) -> Result<(f64, f64)> {
    let layer = l.layer(k).filter(|l| !l.is_empty()).ok_or(Error::NoSuchLayer(k))?;
    match near {
        None => layer.global_max().ok_or(Error::NoSuchLayer(k)),
        Some(t) => layer
            .local_maxima()
            .into_iter()
            .min_by(|x, y| (x.0 - t).abs().total_cmp(&(y.0 - t).abs()))
            .ok_or(Error::NoSuchLayer(k)),
    }
}

/// Index of the diagram point realising `lambda_k(t)`.
///
/// Among points whose tent at `t` equals the k-th largest tent value
/// (within 1e-12), the one whose apex is closest to `t` wins, then the
/// smaller (birth, death).
pub fn pair_at(points: &[(f64, f64)], k: usize, t: f64) -> Option<usize> {
    if k == 0 || k > points.len() {
        return None;
    }
    let values: Vec<f64> = points.iter().map(|&(b, d)| tent(b, d, t)).collect();
    let mut sorted = values.clone();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let target = sorted[k - 1];
    if target <= 0.0 {
        return None;
    }
    (0..points.len())
        .filter(|&i| (values[i] - target).abs() <= 1e-12)
        .min_by(|&i, &j| {
            let apex = |i: usize| ((points[i].0 + points[i].1) / 2.0 - t).abs();
            apex(i)
                .total_cmp(&apex(j))
                .then(points[i].0.total_cmp(&points[j].0))
                .then(points[i].1.total_cmp(&points[j].1))
        })
}

/// Serialises to the `.lan` text format.
///
/// The first line is `#landscape v1`; each nonempty layer follows as a
/// `#lambda <k>` line and one `t value` line per breakpoint, both printed
/// with 17 significant digits.
pub fn write_lan(l: &Landscape) -> String {
    let mut out = String::from("#landscape v1\n");
    for (i, layer) in l.layers.iter().enumerate() {
        if layer.is_empty() {
            continue;
        }
        let _ = writeln!(out, "#lambda {}", i + 1);
        for &(t, v) in &layer.points {
            let _ = writeln!(out, "{} {}", fmt_g(t, 17), fmt_g(v, 17));
        }
    }
    out
}

pub fn read_lan(text: &str) -> Result<Landscape> {
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == "#landscape v1" => {}
        _ => return Err(err(1, "expected header '#landscape v1'".into())),
    }
    let mut layers: Vec<Layer> = Vec::new();
    let mut current: Option<usize> = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#lambda") {
            let k: usize = rest
                .trim()
                .parse()
                .map_err(|_| err(lineno, format!("bad layer header '{line}'")))?;
            if k == 0 || k <= layers.len() {
                return Err(err(lineno, format!("layer {k} out of order")));
            }
            layers.resize_with(k, Layer::default);
            current = Some(k - 1);
            continue;
        }
        let Some(idx) = current else {
            return Err(err(lineno, "breakpoint before any '#lambda' header".into()));
        };
        let mut tokens = line.split_whitespace();
        let (Some(t), Some(v), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(err(lineno, format!("expected 't value', found '{line}'")));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(lineno, format!("'{s}' is not a finite number")))
        };
        let (t, v) = (parse(t)?, parse(v)?);
        let layer = &mut layers[idx];
        if layer.points.last().is_some_and(|&(prev, _)| t <= prev) {
            return Err(err(lineno, format!("t = {t} does not increase")));
        }
        layer.points.push((t, v));
    }
    Ok(Landscape::new(layers))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn land(points: &[(f64, f64)]) -> Landscape {
        landscape_from_points(points)
    }

    #[test]
    fn single_tent() {
        let l = land(&[(0.0, 2.0)]);
        assert_eq!(l.depth(), 1);
        assert_eq!(l.layers()[0].points(), &[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        assert_eq!(l.eval(1, 0.5), 0.5);
        assert_eq!(l.eval(2, 1.0), 0.0);
        assert_eq!(l.eval(1, -5.0), 0.0);
    }

    #[test]
    fn two_overlapping_tents() {
        let l = land(&[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(
            l.layers()[0].points(),
            &[(0.0, 0.0), (1.0, 1.0), (1.5, 0.5), (2.0, 1.0), (3.0, 0.0)]
        );
        assert_eq!(l.layers()[1].points(), &[(1.0, 0.0), (1.5, 0.5), (2.0, 0.0)]);
    }

    #[test]
    fn disjoint_and_nested() {
        let l = land(&[(0.0, 1.0), (2.0, 4.0)]);
        assert_eq!(
            l.layers()[0].points(),
            &[(0.0, 0.0), (0.5, 0.5), (1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 0.0)]
        );
        let l = land(&[(0.0, 4.0), (1.0, 2.0)]);
        assert_eq!(l.layers()[0].points(), &[(0.0, 0.0), (2.0, 2.0), (4.0, 0.0)]);
        assert_eq!(l.layers()[1].points(), &[(1.0, 0.0), (1.5, 0.5), (2.0, 0.0)]);
        let l = land(&[(0.0, 2.0), (2.0, 4.0)]);
        assert_eq!(l.depth(), 1);
        assert_eq!(l.layers()[0].points().len(), 5);
    }

    #[test]
    fn sqrt_two_tent_peak() {
        let s = 2f64.sqrt();
        let l = land(&[(1.0, s)]);
        let (t, v) = l.layers()[0].global_max().unwrap();
        assert_eq!(t, (1.0 + s) / 2.0);
        assert!((v - 0.20711).abs() < 1e-5);
    }

    #[test]
    fn norms() {
        let l = land(&[(0.0, 2.0)]);
        assert_eq!(landscape_lp_norm(&l, 1.0).unwrap(), 1.0);
        assert!((landscape_lp_norm(&l, 2.0).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(landscape_lp_norm(&Landscape::zero(), 3.0).unwrap(), 0.0);
        assert!(matches!(landscape_lp_norm(&l, 1.5), Err(Error::Unsupported(_))));
        assert!(matches!(landscape_lp_norm(&l, 0.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn distances() {
        let a = land(&[(0.0, 2.0)]);
        let b = land(&[(0.0, 4.0)]);
        assert_eq!(landscape_distance(&a, &a, 1.0).unwrap(), 0.0);
        assert_eq!(landscape_distance(&a, &Landscape::zero(), 1.0).unwrap(), 1.0);
        assert_eq!(landscape_distance(&a, &b, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn segment_with_sign_change() {
        // f from -1 to 1 over [0, 2]: |f| integrates to 1, f^2 to 2/3.
        assert_eq!(segment_integral(2.0, -1.0, 1.0, 1), 1.0);
        assert!((segment_integral(2.0, -1.0, 1.0, 2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn restricted_distance() {
        let a = land(&[(0.0, 4.0), (1.0, 2.0)]);
        let b = land(&[(0.0, 4.0), (1.0, 3.0)]);
        let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(layer_restricted_distance(&a, &b, &s(&[1])).unwrap(), 0.0);
        assert!(layer_restricted_distance(&a, &b, &s(&[2])).unwrap() > 0.0);
        let t = land(&[(0.0, 2.0)]);
        assert_eq!(
            layer_restricted_distance(&t, &Landscape::zero(), &s(&[2])).unwrap(),
            0.0
        );
        let d12 = layer_restricted_distance(&a, &b, &s(&[1, 2])).unwrap();
        let d1 = layer_restricted_distance(&a, &b, &s(&[1])).unwrap();
        let d2 = layer_restricted_distance(&a, &b, &s(&[2])).unwrap();
        assert_eq!(d12, d1 + d2);
        assert!(layer_restricted_distance(&a, &b, &s(&[])).is_err());
        assert!(layer_restricted_distance(&a, &b, &s(&[0, 1])).is_err());
    }

    #[test]
    fn averages() {
        let t = land(&[(0.0, 2.0)]);
        let avg = average_landscape(&LandscapeSample::new("x", vec![t.clone(), Landscape::zero()]).unwrap()).unwrap();
        assert_eq!(avg.layers()[0].points(), &[(0.0, 0.0), (1.0, 0.5), (2.0, 0.0)]);
        let three = LandscapeSample::new("y", vec![t.clone(), t.clone(), t.clone()]).unwrap();
        assert_eq!(average_landscape(&three).unwrap(), t);
        assert!(LandscapeSample::new("z", vec![]).is_err());
    }

    #[test]
    fn randomization_edge_cases() {
        let a = LandscapeSample::new("a", vec![land(&[(0.0, 2.0)]), land(&[(0.5, 3.0)])]).unwrap();
        let same = randomization_test(&a, &a, 50, 3, 1.0).unwrap();
        assert_eq!(same.p_value, 1.0);
        assert_eq!(same.t_obs, 0.0);
        let b = LandscapeSample::new("b", vec![land(&[(0.0, 9.0)])]).unwrap();
        let one = randomization_test(&a, &b, 1, 11, 1.0).unwrap();
        assert!(one.p_value == 0.0 || one.p_value == 1.0);
        assert!(randomization_test(&a, &b, 0, 1, 1.0).is_err());
    }

    #[test]
    fn lan_format() {
        let t = land(&[(0.0, 2.0)]);
        assert_eq!(write_lan(&t), "#landscape v1\n#lambda 1\n0 0\n1 1\n2 0\n");
        assert_eq!(write_lan(&Landscape::zero()), "#landscape v1\n");
        assert_eq!(read_lan("#landscape v1\n").unwrap(), Landscape::zero());
        let l = land(&[(0.1, 2.7), (1.3, 3.3), (0.2, 0.9)]);
        assert_eq!(read_lan(&write_lan(&l)).unwrap(), l);
    }

    #[test]
    fn lan_errors() {
        assert!(matches!(read_lan("#lambda 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read_lan("#landscape v1\n#lambda 1\n1 0\n0 1\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            read_lan("#landscape v1\n0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_lan("#landscape v1\n#lambda 2\n0 0\n#lambda 1\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            read_lan("#landscape v1\n#lambda 1\n0 0 0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn peaks_and_pairs() {
        let pts = [(0.0, 2.0), (1.0, 3.0)];
        let l = land(&pts);
        assert_eq!(layer_peak(&l, 2, None).unwrap(), (1.5, 0.5));
        assert_eq!(layer_peak(&l, 1, Some(2.2)).unwrap(), (2.0, 1.0));
        assert_eq!(layer_peak(&l, 7, None), Err(Error::NoSuchLayer(7)));
        assert_eq!(pair_at(&pts, 1, 2.0), Some(1));
        assert_eq!(pair_at(&pts, 1, 1.0), Some(0));
        // Crossing point: both tents at 0.5, equal apex distance, smaller birth wins.
        assert_eq!(pair_at(&pts, 2, 1.5), Some(0));
        assert_eq!(pair_at(&pts, 3, 1.5), None);
    }
}
