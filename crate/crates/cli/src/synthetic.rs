//! Seeded open trefoils with tails of controlled length.
//!
//! The knot core follows `(sin t + 2 sin 2t, cos t - 2 cos 2t, -sin 3t)` over
//! one period, opened at an outer lobe and resampled at equal arc length.
//! Tails leave both ends as slowly turning walks pointing away from the
//! core. Every chain is then rigidly rotated and lightly jittered.

use std::f64::consts::{PI, TAU};

use knotph_core::geometry::{write_xyz, DepthClass, Point3};
use knotph_core::rng::{derive_seed, seeded, Gaussian};
use rand::RngExt;

/// Distance between consecutive Cα atoms.
pub const CA_SPACING: f64 = 3.8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Inclusive range of total chain lengths.
    pub length_range: (usize, usize),
    /// Range of the core length as a fraction of the chain for deep knots.
    pub deep_core_fraction: (f64, f64),
    /// Range of the N-terminal share of the tail atoms of deep knots.
    pub deep_tail_split: (f64, f64),
    /// Longest tail at either end of shallow knots.
    pub shallow_tail_max: usize,
    /// Range of the per-step turn of tail walks.
    pub tail_turn: (f64, f64),
    /// Standard deviation of the coordinate jitter.
    pub jitter: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            length_range: (100, 120),
            deep_core_fraction: (0.16, 0.45),
            deep_tail_split: (0.3, 0.7),
            shallow_tail_max: 3,
            tail_turn: (0.08, 0.3),
            jitter: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthChain {
    pub id: String,
    pub points: Vec<Point3>,
    pub core_start: usize,
    pub core_end: usize,
    pub family: String,
    pub expected_class: DepthClass,
}

fn trefoil(t: f64) -> [f64; 3] {
    [
        t.sin() + 2.0 * (2.0 * t).sin(),
        t.cos() - 2.0 * (2.0 * t).cos(),
        -(3.0 * t).sin(),
    ]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// `count` points along the opened trefoil, `CA_SPACING` apart in arc length.
fn core_points(count: usize, mirror: bool) -> Vec<[f64; 3]> {
    // Open the loop at an outer lobe tip (t = pi/3), leaving a small gap.
    let gap = 0.2;
    let (t0, t1) = (PI / 3.0 + gap, PI / 3.0 + TAU - gap);
    let samples = 20_000;
    let fine: Vec<[f64; 3]> = (0..=samples)
        .map(|i| trefoil(t0 + (t1 - t0) * i as f64 / samples as f64))
        .collect();
    let mut arc = vec![0.0];
    for w in fine.windows(2) {
        arc.push(arc.last().unwrap() + norm(sub(w[1], w[0])));
    }
    let total = *arc.last().unwrap();
    let scale = CA_SPACING * (count - 1) as f64 / total;
    let mut out = Vec::with_capacity(count);
    let mut j = 0;
    for i in 0..count {
        let target = total * i as f64 / (count - 1) as f64;
        while j + 1 < arc.len() - 1 && arc[j + 1] < target {
            j += 1;
        }
        let f = ((target - arc[j]) / (arc[j + 1] - arc[j])).clamp(0.0, 1.0);
        let p: Vec<f64> = (0..3)
            .map(|k| (fine[j][k] + f * (fine[j + 1][k] - fine[j][k])) * scale)
            .collect();
        out.push([p[0], p[1], if mirror { -p[2] } else { p[2] }]);
    }
    out
}

/// Persistent walk of `len` steps from `start` heading along `dir`.
fn tail(start: [f64; 3], dir: [f64; 3], len: usize, turn: f64, g: &mut Gaussian) -> Vec<[f64; 3]> {
    let mut pos = start;
    let mut d = unit(dir);
    (0..len)
        .map(|_| {
            d = unit([
                d[0] + turn * g.sample(),
                d[1] + turn * g.sample(),
                d[2] + turn * g.sample(),
            ]);
            pos = [
                pos[0] + CA_SPACING * d[0],
                pos[1] + CA_SPACING * d[1],
                pos[2] + CA_SPACING * d[2],
            ];
            pos
        })
        .collect()
}

fn rotation(g: &mut Gaussian) -> [[f64; 3]; 3] {
    let q = unit4([g.sample(), g.sample(), g.sample(), g.sample()]);
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn unit4(q: [f64; 4]) -> [f64; 4] {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / n)
}

/// Direction pointing away from the core at one of its ends.
fn outward(end: [f64; 3], inner: [f64; 3], side: f64) -> [f64; 3] {
    let radial = unit([end[0], end[1], 0.0]);
    let along = unit(sub(end, inner));
    unit([radial[0] + 0.5 * along[0], radial[1] + 0.5 * along[1], 0.6 * side])
}

/// One chain of `length` atoms whose tails have `n_tail` and `c_tail` atoms.
pub fn synth_chain(
    length: usize,
    n_tail: usize,
    c_tail: usize,
    mirror: bool,
    tail_turn: f64,
    jitter: f64,
    seed: u64,
) -> Vec<Point3> {
    let mut g = Gaussian::new(seed);
    let core = core_points(length - n_tail - c_tail, mirror);
    let first = core[0];
    let last = *core.last().unwrap();
    let n_dir = outward(first, core[1], 1.0);
    let c_dir = outward(last, core[core.len() - 2], -1.0);
    let mut n_part = tail(first, n_dir, n_tail, tail_turn, &mut g);
    n_part.reverse();
    let c_part = tail(last, c_dir, c_tail, tail_turn, &mut g);
    let rot = rotation(&mut g);
    n_part
        .into_iter()
        .chain(core)
        .chain(c_part)
        .map(|p| {
            let r = |k: usize| rot[k][0] * p[0] + rot[k][1] * p[1] + rot[k][2] * p[2];
            Point3::new(
                r(0) + jitter * g.sample(),
                r(1) + jitter * g.sample(),
                r(2) + jitter * g.sample(),
            )
        })
        .collect()
}

/// `deep` chains with long tails and `shallow` chains with short ones.
/// Families alternate between the two mirror images.
pub fn synth_dataset(deep: usize, shallow: usize, seed: u64, params: &SynthParams) -> Vec<SynthChain> {
    let mut out = Vec::with_capacity(deep + shallow);
    for (i, is_deep) in (0..deep).map(|i| (i, true)).chain((0..shallow).map(|i| (i, false))) {
        let mut rng = seeded(derive_seed(seed, out.len() as u64));
        let length = rng.random_range(params.length_range.0..=params.length_range.1);
        let (n_tail, c_tail, prefix, class) = if is_deep {
            let (lo, hi) = params.deep_core_fraction;
            let core = (length as f64 * rng.random_range(lo..=hi)).round() as usize;
            let (lo, hi) = params.deep_tail_split;
            let n = ((length - core) as f64 * rng.random_range(lo..=hi)).round() as usize;
            (n, length - core - n, "deep", DepthClass::Deep)
        } else {
            let max = params.shallow_tail_max;
            (
                rng.random_range(0..=max),
                rng.random_range(0..=max),
                "shallow",
                DepthClass::Shallow,
            )
        };
        let turn = rng.random_range(params.tail_turn.0..=params.tail_turn.1);
        let mirror = i % 2 == 1;
        let points = synth_chain(length, n_tail, c_tail, mirror, turn, params.jitter, rng.random());
        out.push(SynthChain {
            id: format!("{prefix}_{i:02}"),
            points,
            core_start: n_tail,
            core_end: length - c_tail - 1,
            family: if mirror { "left".into() } else { "right".into() },
            expected_class: class,
        });
    }
    out
}

/// Annotation sidecar for a synthetic dataset.
pub fn annotation_tsv(chains: &[SynthChain]) -> String {
    let mut out = String::from("id\tlength\tcore_start\tcore_end\thomology_class\n");
    for c in chains {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            c.id,
            c.points.len(),
            c.core_start,
            c.core_end,
            c.family
        ));
    }
    out
}

/// Writes `<id>.xyz` files and `annotation.tsv` into `dir`.
pub fn write_dataset(dir: &std::path::Path, chains: &[SynthChain]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for c in chains {
        std::fs::write(dir.join(format!("{}.xyz", c.id)), write_xyz(&c.points))?;
    }
    std::fs::write(dir.join("annotation.tsv"), annotation_tsv(chains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use knotph_core::geometry::{euclidean, BackboneChain, KnotAnnotation};

    #[test]
    fn spacing_and_classes() {
        let params = SynthParams::default();
        let chains = synth_dataset(4, 4, 11, &params);
        assert_eq!(chains.len(), 8);
        for c in &chains {
            assert!((100..=120).contains(&c.points.len()));
            for w in c.points.windows(2) {
                let d = euclidean(&w[0], &w[1]);
                assert!((d - CA_SPACING).abs() < 0.8, "{}: spacing {d}", c.id);
            }
            let chain = BackboneChain::new(c.id.clone(), c.points.clone()).unwrap();
            let ann = KnotAnnotation::new(c.core_start, c.core_end, chain.len()).unwrap();
            assert_eq!(ann.depth_class, c.expected_class, "{}", c.id);
        }
        assert_eq!(synth_dataset(4, 4, 11, &params), chains);
    }

    #[test]
    fn chains_do_not_collide() {
        for c in synth_dataset(3, 3, 5, &SynthParams::default()) {
            for i in 0..c.points.len() {
                for j in (i + 2)..c.points.len() {
                    assert!(euclidean(&c.points[i], &c.points[j]) > 2.0, "{} {i} {j}", c.id);
                }
            }
        }
    }
}
