use std::collections::BTreeSet;

use knotph_core::landscape::{
    average_landscape, landscape_distance, landscape_from_points, landscape_lp_norm, layer_peak, pair_at,
    randomization_test, read_lan, tent, write_lan, Landscape, LandscapeSample,
};
use knotph_core::rng::seeded;
use proptest::prelude::*;
use rand::RngExt;

fn random_diagram(seed: u64, max_len: usize) -> Vec<(f64, f64)> {
    let mut rng = seeded(seed);
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| {
            let b: f64 = rng.random::<f64>() * 5.0;
            (b, b + rng.random::<f64>() * 3.0 + 1e-3)
        })
        .collect()
}

/// k-th largest tent value, straight from the definition.
fn kth_tent(points: &[(f64, f64)], k: usize, t: f64) -> f64 {
    let mut v: Vec<f64> = points.iter().map(|&(b, d)| tent(b, d, t)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.get(k - 1).copied().unwrap_or(0.0)
}

fn support(points: &[(f64, f64)]) -> (f64, f64) {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[test]
fn agrees_with_pointwise_definition() {
    for seed in 0..50 {
        let pts = random_diagram(seed, 12);
        let l = landscape_from_points(&pts);
        if pts.is_empty() {
            assert_eq!(l, Landscape::zero());
            continue;
        }
        let (lo, hi) = support(&pts);
        for i in 0..1000 {
            let t = lo - 0.1 + (hi - lo + 0.2) * i as f64 / 999.0;
            for k in 1..=pts.len() + 1 {
                let want = kth_tent(&pts, k, t);
                assert!((l.eval(k, t) - want).abs() <= 1e-12, "seed {seed} k {k} t {t}");
            }
        }
    }
}

#[test]
fn layers_are_ordered_and_lipschitz() {
    for seed in 100..150 {
        let pts = random_diagram(seed, 15);
        let l = landscape_from_points(&pts);
        for layer in l.layers() {
            let p = layer.points();
            assert!(p.iter().all(|&(_, v)| v >= 0.0));
            for w in p.windows(2) {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                assert!(
                    (slope.abs() - 1.0).abs() < 1e-9 || slope.abs() < 1e-9,
                    "seed {seed}: slope {slope}"
                );
            }
        }
        let (lo, hi) = support(&pts);
        for i in 0..200 {
            let t = lo + (hi - lo) * i as f64 / 199.0;
            for k in 1..l.depth() {
                assert!(l.eval(k + 1, t) <= l.eval(k, t) + 1e-12);
            }
        }
    }
}

#[test]
fn averages_are_pointwise_means() {
    for seed in 0..10u64 {
        let members: Vec<Landscape> = (0..5)
            .map(|i| landscape_from_points(&random_diagram(seed * 10 + i, 8)))
            .collect();
        let avg = average_landscape(&LandscapeSample::new("s", members.clone()).unwrap()).unwrap();
        for i in 0..500 {
            let t = -0.5 + 9.5 * i as f64 / 499.0;
            for k in 1..=avg.depth() + 1 {
                let mean = members.iter().map(|m| m.eval(k, t)).sum::<f64>() / 5.0;
                assert!((avg.eval(k, t) - mean).abs() <= 1e-12);
                if k > 1 {
                    assert!(avg.eval(k, t) <= avg.eval(k - 1, t) + 1e-12);
                }
            }
        }
        for layer in avg.layers() {
            for w in layer.points().windows(2) {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                assert!(slope.abs() <= 1.0 + 1e-9);
            }
        }
    }
}

/// Midpoint-rule quadrature of |l1 - l2|^p on a fine grid.
fn quadrature(l1: &Landscape, l2: &Landscape, p: i32, lo: f64, hi: f64) -> f64 {
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let depth = l1.depth().max(l2.depth());
    (1..=depth)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let t = lo + (i as f64 + 0.5) * h;
                    (l1.eval(k, t) - l2.eval(k, t)).abs().powi(p) * h
                })
                .sum::<f64>()
        })
        .sum()
}

#[test]
fn closed_form_integrals_match_quadrature() {
    for seed in 0..8 {
        let a = landscape_from_points(&random_diagram(300 + seed, 6));
        let b = landscape_from_points(&random_diagram(400 + seed, 6));
        for p in [1, 2, 3] {
            let exact = landscape_distance(&a, &b, p as f64).unwrap().powi(p);
            let approx = quadrature(&a, &b, p, -1.0, 10.0);
            assert!(
                (exact - approx).abs() < 1e-6 * (1.0 + exact),
                "seed {seed} p {p}: {exact} vs {approx}"
            );
        }
    }
    let tent2 = landscape_from_points(&[(0.0, 2.0)]);
    let tent4 = landscape_from_points(&[(0.0, 4.0)]);
    assert!((quadrature(&tent2, &tent4, 1, 0.0, 4.0) - 3.0).abs() < 1e-6);
    assert!((quadrature(&tent2, &Landscape::zero(), 2, 0.0, 2.0) - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn norm_is_distance_to_zero() {
    for seed in 0..30 {
        let l = landscape_from_points(&random_diagram(seed, 10));
        for p in [1.0, 2.0, 4.0] {
            assert_eq!(
                landscape_lp_norm(&l, p).unwrap(),
                landscape_distance(&l, &Landscape::zero(), p).unwrap()
            );
        }
    }
}

#[test]
fn peaks_identify_their_pairs() {
    for seed in 0..60 {
        let pts = random_diagram(seed, 10);
        let l = landscape_from_points(&pts);
        for k in 1..=l.depth() {
            let (t, height) = layer_peak(&l, k, None).unwrap();
            let i = pair_at(&pts, k, t).expect("peak has a pair");
            let (b, d) = pts[i];
            assert!((tent(b, d, t) - height).abs() <= 1e-12, "seed {seed} k {k}");
        }
    }
}

#[test]
fn randomization_results() {
    let tent = |d: f64| landscape_from_points(&[(0.0, d)]);
    let a = LandscapeSample::new("a", vec![tent(2.0); 10]).unwrap();
    let b = LandscapeSample::new("b", vec![tent(10.0); 10]).unwrap();
    let out = randomization_test(&a, &b, 1000, 1, 1.0).unwrap();
    assert_eq!(out.p_value, 0.0);
    assert_eq!(out.t_obs, 24.0);
    assert_eq!(randomization_test(&a, &a, 1000, 17, 1.0).unwrap().p_value, 1.0);

    let mixed_a: Vec<_> = (0..6).map(|s| landscape_from_points(&random_diagram(s, 6))).collect();
    let mixed_b: Vec<_> = (6..15).map(|s| landscape_from_points(&random_diagram(s, 6))).collect();
    let (ma, mb) = (
        LandscapeSample::new("x", mixed_a).unwrap(),
        LandscapeSample::new("y", mixed_b).unwrap(),
    );
    let r1 = randomization_test(&ma, &mb, 200, 5, 1.0).unwrap();
    let r2 = randomization_test(&ma, &mb, 200, 5, 1.0).unwrap();
    assert_eq!(r1, r2);
    let scaled = r1.p_value * 200.0;
    assert_eq!(scaled, scaled.round());
    assert!((0.0..=1.0).contains(&r1.p_value));
    let serial = knotph_core::par::with_lanes(Some(1), || randomization_test(&ma, &mb, 200, 5, 1.0).unwrap());
    assert_eq!(serial, r1);
}

#[test]
fn restricted_distance_adds_over_layers() {
    use knotph_core::landscape::layer_restricted_distance;
    for seed in 0..20 {
        let a = landscape_from_points(&random_diagram(seed, 10));
        let b = landscape_from_points(&random_diagram(seed + 50, 10));
        let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
        let d12 = layer_restricted_distance(&a, &b, &s(&[1, 2])).unwrap();
        let d1 = layer_restricted_distance(&a, &b, &s(&[1])).unwrap();
        let d2 = layer_restricted_distance(&a, &b, &s(&[2])).unwrap();
        assert_eq!(d12, d1 + d2);
        let all: Vec<usize> = (1..=a.depth().max(b.depth()).max(1)).collect();
        let full = layer_restricted_distance(&a, &b, &s(&all)).unwrap();
        assert_eq!(full, landscape_distance(&a, &b, 1.0).unwrap());
    }
}

#[test]
fn lan_round_trip_random_landscapes() {
    for seed in 0..100 {
        let l = landscape_from_points(&random_diagram(seed, 12));
        assert_eq!(read_lan(&write_lan(&l)).unwrap(), l, "seed {seed}");
        let avg = average_landscape(
            &LandscapeSample::new(
                "s",
                vec![l.clone(), landscape_from_points(&random_diagram(seed + 1, 5))],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(read_lan(&write_lan(&avg)).unwrap(), avg);
    }
}

proptest! {
    #[test]
    fn lan_round_trip_any_diagram(pts in prop::collection::vec((-1e3f64..1e3, 1e-6f64..1e3), 0..20)) {
        let pts: Vec<(f64, f64)> = pts.into_iter().map(|(b, l)| (b, b + l)).collect();
        let l = landscape_from_points(&pts);
        let text = write_lan(&l);
        prop_assert_eq!(read_lan(&text).unwrap(), l.clone());
        prop_assert_eq!(write_lan(&read_lan(&text).unwrap()), text);
    }

    #[test]
    fn layers_never_increase(pts in prop::collection::vec((0f64..10.0, 0.01f64..5.0), 1..15), t in -1f64..16.0) {
        let pts: Vec<(f64, f64)> = pts.into_iter().map(|(b, l)| (b, b + l)).collect();
        let l = landscape_from_points(&pts);
        for k in 1..=pts.len() {
            prop_assert!(l.eval(k + 1, t) <= l.eval(k, t) + 1e-12);
            prop_assert!((l.eval(k, t) - kth_tent(&pts, k, t)).abs() <= 1e-12);
        }
    }
}
