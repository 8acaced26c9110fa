use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use knotph_cli::manifest::Manifest;
use knotph_core::landscape::{landscape_distance, read_lan};
use knotph_core::metrics::DistanceMatrix;

fn knotph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knotph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = knotph(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn xyz(points: &[[f64; 3]]) -> String {
    points.iter().map(|p| format!("{} {} {}\n", p[0], p[1], p[2])).collect()
}

/// Closed polygon of `n` points on a circle with a little z wobble.
fn ring(n: usize, radius: f64, phase: f64) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let t = phase + std::f64::consts::TAU * i as f64 / n as f64;
            [radius * t.cos(), radius * t.sin(), 0.05 * (3.0 * t).sin()]
        })
        .collect()
}

struct Fixture {
    _tmp: tempfile::TempDir,
    input: PathBuf,
    out: PathBuf,
}

/// Three small and three large rings with homology labels and annotations.
fn rings() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    std::fs::create_dir_all(&input).unwrap();
    let mut ann = String::from("id\tlength\tcore_start\tcore_end\thomology_class\n");
    for i in 0..3 {
        for (name, radius, class) in [
            ("small", 1.0 + 0.05 * i as f64, "A"),
            ("large", 3.0 + 0.1 * i as f64, "B"),
        ] {
            let id = format!("{name}{i}");
            let pts = ring(12, radius, 0.1 * i as f64);
            std::fs::write(input.join(format!("{id}.xyz")), xyz(&pts)).unwrap();
            ann.push_str(&format!("{id}\t12\t{}\t{}\t{class}\n", 2 + i, 9));
        }
    }
    std::fs::write(input.join("annotation.tsv"), ann).unwrap();
    let out = tmp.path().join("out");
    Fixture { input, out, _tmp: tmp }
}

fn ingest(f: &Fixture, d: &str) {
    ok(&[
        "ingest",
        "--input-dir",
        s(&f.input),
        "--annotation",
        s(&f.input.join("annotation.tsv")),
        "--interp-factor",
        d,
        "--out",
        s(&f.out),
    ]);
}

#[test]
fn ingest_records_every_file_and_cloud_size() {
    let f = rings();
    ingest(&f, "5");
    let m = Manifest::load(&f.out).unwrap();
    assert_eq!(m.structures.len(), 6);
    for r in &m.structures {
        assert_eq!(r.cloud_size, 12 + 11 * 5, "{}", r.id);
        assert!(r.depth.is_some() && r.depth_class.is_some());
        assert!(f.out.join(&r.cloud).is_file());
    }
    assert_eq!(m.record("small1").unwrap().homology_class.as_deref(), Some("A"));
}

#[test]
fn similarity_clusters_replace_annotated_classes() {
    let f = rings();
    let ids = ["large0", "large1", "large2", "small0", "small1", "small2"];
    let mut csv = format!("id,{}\n", ids.join(","));
    for a in ids {
        let row: Vec<&str> = ids
            .iter()
            .map(|&b| match (a == b, a[..5] == b[..5]) {
                (true, _) => "1",
                (false, true) => "0.9",
                (false, false) => "0.1",
            })
            .collect();
        csv.push_str(&format!("{a},{}\n", row.join(",")));
    }
    let sim = f.input.join("sim.csv");
    std::fs::write(&sim, csv).unwrap();
    ok(&[
        "ingest",
        "--input-dir",
        s(&f.input),
        "--annotation",
        s(&f.input.join("annotation.tsv")),
        "--similarity",
        s(&sim),
        "--set",
        "top_classes=1",
        "--out",
        s(&f.out),
    ]);
    let m = Manifest::load(&f.out).unwrap();
    for r in &m.structures {
        let expected = if r.id.starts_with("large") { "large0" } else { "Other" };
        assert_eq!(r.homology_class.as_deref(), Some(expected), "{}", r.id);
    }
    let classes = std::fs::read_to_string(f.out.join("classes.tsv")).unwrap();
    assert_eq!(classes.lines().count(), 6);
    assert!(classes.contains("small1\tOther"));
}

#[test]
fn missing_annotation_leaves_depth_empty() {
    let f = rings();
    ok(&[
        "ingest",
        "--input-dir",
        s(&f.input),
        "--annotation",
        "/nonexistent.tsv",
        "--out",
        s(&f.out),
    ]);
    let m = Manifest::load(&f.out).unwrap();
    assert!(m
        .structures
        .iter()
        .all(|r| r.depth.is_none() && r.homology_class.is_none()));
}

#[test]
fn ingest_reports_file_and_line_of_parse_errors() {
    let f = rings();
    std::fs::write(f.input.join("broken.xyz"), "0 0 0\n1 x 0\n").unwrap();
    let o = knotph(&["ingest", "--input-dir", s(&f.input), "--out", s(&f.out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("broken.xyz") && err.contains("line 2"), "{err}");
}

#[test]
fn ph_writes_one_diagram_per_structure_and_is_repeatable() {
    let f = rings();
    ingest(&f, "1");
    ok(&["ph", "--out", s(&f.out)]);
    let m = Manifest::load(&f.out).unwrap();
    let read_all = || -> Vec<String> {
        m.structures
            .iter()
            .flat_map(|r| [r.diagram.clone().unwrap(), r.landscape.clone().unwrap()])
            .map(|p| std::fs::read_to_string(f.out.join(p)).unwrap())
            .collect()
    };
    let first = read_all();
    assert_eq!(first.len(), 12);
    assert!(first[0].starts_with("birth,death\n"));
    ok(&["ph", "--out", s(&f.out), "--lanes", "1"]);
    assert_eq!(read_all(), first);
}

#[test]
fn ph_isolates_failing_structures() {
    let f = rings();
    std::fs::write(f.input.join("tiny.xyz"), "0 0 0\n1 0 0\n").unwrap();
    ok(&[
        "ingest",
        "--input-dir",
        s(&f.input),
        "--interp-factor",
        "0",
        "--out",
        s(&f.out),
    ]);
    let o = knotph(&["ph", "--out", s(&f.out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tiny"));
    let m = Manifest::load(&f.out).unwrap();
    assert_eq!(m.failures.len(), 1);
    assert_eq!(m.failures[0].id, "tiny");
    for r in &m.structures {
        assert_eq!(r.diagram.is_some(), r.id != "tiny", "{}", r.id);
    }
}

#[test]
fn compare_matrix_matches_landscape_distances() {
    let f = rings();
    ingest(&f, "1");
    ok(&["ph", "--out", s(&f.out)]);
    let stdout = ok(&[
        "compare",
        "--out",
        s(&f.out),
        "--n-neighbors",
        "3",
        "--landscape-p",
        "1",
    ]);
    assert!(stdout.contains("silhouette by homology class"));
    let m = Manifest::load(&f.out).unwrap();
    let dm = DistanceMatrix::from_csv(&std::fs::read_to_string(f.out.join("compare/distance.csv")).unwrap()).unwrap();
    let lans: Vec<_> = m
        .structures
        .iter()
        .map(|r| read_lan(&std::fs::read_to_string(f.out.join(r.landscape.as_ref().unwrap())).unwrap()).unwrap())
        .collect();
    for i in 0..lans.len() {
        for j in 0..lans.len() {
            let want = landscape_distance(&lans[i], &lans[j], 1.0).unwrap();
            assert!((dm.get(i, j) - want).abs() <= 1e-11 * want.max(1.0), "{i} {j}");
        }
    }
    let sil = knotph_cli::commands::read_silhouettes(&f.out.join("compare/silhouette.tsv")).unwrap();
    assert!(sil.homology.unwrap() > 0.5);
    for name in ["embedding.csv", "scatter_homology.svg", "scatter_depth.svg"] {
        assert!(f.out.join("compare").join(name).is_file(), "{name}");
    }
}

#[test]
fn compare_identical_structures_warns_about_silhouette() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    std::fs::create_dir_all(&input).unwrap();
    for id in ["a", "b", "c"] {
        std::fs::write(input.join(format!("{id}.xyz")), xyz(&ring(10, 2.0, 0.0))).unwrap();
    }
    let out = tmp.path().join("out");
    ok(&[
        "ingest",
        "--input-dir",
        s(&input),
        "--interp-factor",
        "0",
        "--out",
        s(&out),
    ]);
    ok(&["ph", "--out", s(&out)]);
    let o = knotph(&["compare", "--out", s(&out), "--n-neighbors", "2"]);
    let dm = DistanceMatrix::from_csv(&std::fs::read_to_string(out.join("compare/distance.csv")).unwrap()).unwrap();
    assert!(dm.values().iter().all(|&v| v == 0.0));
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let sil = std::fs::read_to_string(out.join("compare/silhouette.tsv")).unwrap();
    assert_eq!(sil, "labeling\tsilhouette\nhomology\tNA\ndepth\tNA\n");
}

#[test]
fn compare_reports_disconnected_graph_with_hint() {
    let f = rings();
    ingest(&f, "1");
    ok(&["ph", "--out", s(&f.out)]);
    let o = knotph(&["compare", "--out", s(&f.out), "--n-neighbors", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("disconnected") && err.contains("raise n_neighbors"),
        "{err}"
    );
    assert!(f.out.join("compare/distance.csv").is_file());
}

#[test]
fn test_identical_classes_and_empty_layers() {
    let f = rings();
    ingest(&f, "1");
    ok(&["ph", "--out", s(&f.out)]);
    let stdout = ok(&["test", "A", "A", "--out", s(&f.out), "--layers", "2"]);
    assert!(stdout.contains("p = 1 (1000 permutations)"), "{stdout}");
    let dir = f.out.join("test/homology_A_vs_A");
    let tsv = std::fs::read_to_string(dir.join("randomization.tsv")).unwrap();
    assert!(tsv.starts_with("class_a\tclass_b\tt_obs\tp_value\tk\tseed\n"));
    // Rings of 12 points have a single class, so no member has a second layer.
    let heat = DistanceMatrix::from_csv(&std::fs::read_to_string(dir.join("heatmap_layers_2.csv")).unwrap()).unwrap();
    assert_eq!(heat.len(), 3);
    assert!(heat.values().iter().all(|&v| v == 0.0));
    assert!(dir.join("heatmap_layers_2.svg").is_file());
    assert!(dir.join("average_A.lan").is_file());

    let o = knotph(&["test", "A", "Z", "--out", s(&f.out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown homology class 'Z'"));
}

#[test]
fn generator_on_unit_square() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    std::fs::create_dir_all(&input).unwrap();
    std::fs::write(input.join("square.xyz"), "0 0 0\n1 0 0\n1 1 0\n0 1 0\n").unwrap();
    std::fs::write(
        input.join("annotation.tsv"),
        "id\tlength\tcore_start\tcore_end\thomology_class\nsquare\t4\t1\t2\t\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let ann = input.join("annotation.tsv");
    ok(&[
        "ingest",
        "--input-dir",
        s(&input),
        "--annotation",
        s(&ann),
        "--interp-factor",
        "0",
        "--out",
        s(&out),
    ]);
    ok(&["ph", "--out", s(&out)]);
    ok(&["generator", "square", "--k", "1", "--out", s(&out)]);
    let dir = out.join("generator/square_k1");
    let csv = std::fs::read_to_string(dir.join("cycle.csv")).unwrap();
    assert_eq!(csv, "u,v,on_backbone\n0,1,true\n0,3,false\n1,2,true\n2,3,true\n");
    assert!(std::fs::read_to_string(dir.join("backbone.svg"))
        .unwrap()
        .contains("stroke-dasharray"));
    let overlap = std::fs::read_to_string(dir.join("overlap.tsv")).unwrap();
    let row: Vec<&str> = overlap.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[6], "0.5");

    let o = knotph(&["generator", "square", "--k", "7", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no layer 7"));
}

#[test]
fn noise_at_zero_sigma_matches_base_run() {
    let f = rings();
    ingest(&f, "1");
    ok(&["ph", "--out", s(&f.out)]);
    ok(&["compare", "--out", s(&f.out), "--n-neighbors", "3"]);
    ok(&[
        "noise",
        "--out",
        s(&f.out),
        "--set",
        "n_neighbors=3",
        "--sigmas",
        "0,0.05",
    ]);
    let base = std::fs::read_to_string(f.out.join("compare/silhouette.tsv")).unwrap();
    let zero = std::fs::read_to_string(f.out.join("noise/sigma_0/silhouette.tsv")).unwrap();
    assert_eq!(base, zero);
    let report = std::fs::read_to_string(f.out.join("noise/robustness.tsv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "sigma\tsilhouette_homology\tsilhouette_depth");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0\t"));
    assert!(f.out.join("noise/robustness.svg").is_file());
    for r in &Manifest::load(&f.out).unwrap().structures {
        assert_eq!(
            std::fs::read(f.out.join(format!("noise/sigma_0/diagrams/{}.dgm.csv", r.id))).unwrap(),
            std::fs::read(f.out.join(r.diagram.as_ref().unwrap())).unwrap()
        );
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "# comment\nn_neighbors = zero\n").unwrap();
    let o = knotph(&["--config", s(&cfg), "ph"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(knotph(&["--config", s(&cfg), "ph"]).status.code(), Some(2));
    assert_eq!(knotph(&["ingest", "--out", s(tmp.path())]).status.code(), Some(2));
    assert_eq!(knotph(&["compare", "--metric", "cosine"]).status.code(), Some(2));
}

#[test]
fn config_file_drives_the_pipeline() {
    let f = rings();
    let cfg = f.out.with_extension("cfg");
    std::fs::write(
        &cfg,
        format!(
            "input_dir = {}\ninterp_factor = 1\nn_neighbors = 3\noutput_dir = {}\n",
            s(&f.input),
            s(&f.out)
        ),
    )
    .unwrap();
    ok(&["--config", s(&cfg), "ingest"]);
    ok(&["--config", s(&cfg), "ph"]);
    ok(&["--config", s(&cfg), "compare", "--metric", "wasserstein"]);
    let m = Manifest::load(&f.out).unwrap();
    assert_eq!(m.config["metric"], "wasserstein");
    assert_eq!(m.config["n_neighbors"], "3");
}

#[test]
fn synth_writes_dataset_with_annotation() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", s(tmp.path()), "--deep", "2", "--shallow", "2", "--seed", "3"]);
    let ann = std::fs::read_to_string(tmp.path().join("annotation.tsv")).unwrap();
    assert_eq!(ann.lines().count(), 5);
    assert!(tmp.path().join("deep_00.xyz").is_file() && tmp.path().join("shallow_01.xyz").is_file());
}
