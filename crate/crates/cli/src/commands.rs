//! Pipeline commands. Each one reads the manifest from the output
//! directory, writes its files there and saves the manifest last.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};

use knotph_core::analysis::{
    isomap_embed, silhouette_embedding, single_linkage_clusters, top_k_classes, ClusterLabels, Embedding,
    SimilarityMatrix,
};
use knotph_core::geometry::{
    classify_depth, interpolate, knot_depth, parse_annotation_tsv, parse_xyz, perturb, principal_projection, write_xyz,
    AnnotationRecord, KnotAnnotation, PointCloud,
};
use knotph_core::landscape::{
    average_landscape, diagram_to_landscape, landscape_lp_norm, layer_peak, layer_restricted_distance, pair_at,
    randomization_test, read_lan, write_lan, Landscape, LandscapeSample, TestOutcome,
};
use knotph_core::metrics::{pairwise_wasserstein, DistanceMatrix, Exponent, WassersteinParams};
use knotph_core::persistence::{compute_ph1, cycle_core_overlap, generator_to_csv, PersistenceDiagram, RipsH1};
use knotph_core::{landscape, par, rng, Error};

use crate::config::{Metric, PipelineConfig};
use crate::manifest::{Failure, Manifest, StructureRecord};
use crate::{svg, CliError};

type CmdResult<T> = Result<T, CliError>;

const NA: &str = "NA";

fn write_file(out: &Path, rel: &str, contents: &str) -> anyhow::Result<String> {
    let path = out.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(rel.to_string())
}

fn read_file(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |v| v.to_string())
}

/// File-name safe version of a label.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Which annotation groups the structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    Homology,
    Depth,
}

impl Labeling {
    pub const ALL: [Labeling; 2] = [Labeling::Homology, Labeling::Depth];

    pub fn as_str(&self) -> &'static str {
        match self {
            Labeling::Homology => "homology",
            Labeling::Depth => "depth",
        }
    }

    pub fn of<'a>(&self, r: &'a StructureRecord) -> Option<&'a str> {
        match self {
            Labeling::Homology => r.homology_class.as_deref(),
            Labeling::Depth => r.depth_class.as_deref(),
        }
        .filter(|s| !s.is_empty())
    }
}

impl FromStr for Labeling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "homology" | "class" => Ok(Labeling::Homology),
            "depth" => Ok(Labeling::Depth),
            other => Err(format!("unknown labeling '{other}' (expected homology or depth)")),
        }
    }
}

fn load_cloud(out: &Path, rec: &StructureRecord) -> anyhow::Result<PointCloud> {
    let chain = parse_xyz(&rec.id, &read_file(&out.join(&rec.cloud))?)?;
    Ok(PointCloud::new(
        rec.id.clone(),
        chain.points().to_vec(),
        rec.interp_factor,
    ))
}

/// Reads `.xyz` backbones, attaches annotations and writes interpolated
/// clouds. Starts a fresh manifest.
pub fn ingest(cfg: &PipelineConfig) -> CmdResult<Manifest> {
    let input = cfg
        .input_dir
        .as_ref()
        .ok_or_else(|| CliError::Config("input_dir is not set".into()))?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .with_context(|| format!("cannot list {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "xyz"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(anyhow!("no .xyz files in {}", input.display()).into());
    }

    let annotations: BTreeMap<String, AnnotationRecord> = match &cfg.annotation_path {
        Some(p) if p.is_file() => parse_annotation_tsv(&read_file(p)?)
            .with_context(|| format!("in {}", p.display()))?
            .into_iter()
            .map(|r| (r.id.clone(), r))
            .collect(),
        Some(p) => {
            warn(format!(
                "annotation file {} not found; depth fields left empty",
                p.display()
            ));
            BTreeMap::new()
        }
        None => BTreeMap::new(),
    };
    let clusters = match &cfg.similarity_path {
        Some(p) => {
            let sim = SimilarityMatrix::from_csv(&read_file(p)?).with_context(|| format!("in {}", p.display()))?;
            Some(top_k_classes(
                &single_linkage_clusters(&sim, cfg.similarity_threshold)?,
                cfg.top_classes,
            )?)
        }
        None => None,
    };

    let out = &cfg.output_dir;
    let mut manifest = Manifest {
        config: cfg.to_map(),
        ..Manifest::default()
    };
    for path in files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut chain = parse_xyz(&id, &read_file(&path)?).with_context(|| format!("in {}", path.display()))?;
        let mut rec = StructureRecord {
            id: id.clone(),
            length: chain.len(),
            cloud_size: 0,
            interp_factor: cfg.interp_factor,
            core_start: None,
            core_end: None,
            depth: None,
            depth_class: None,
            homology_class: None,
            cloud: String::new(),
            diagram: None,
            landscape: None,
        };
        if let Some(a) = annotations.get(&id) {
            if a.length != chain.len() {
                return Err(anyhow!(
                    "{}: annotation gives length {} but the file has {} atoms",
                    path.display(),
                    a.length,
                    chain.len()
                )
                .into());
            }
            if let Some((start, end)) = a.core {
                let ann =
                    KnotAnnotation::new(start, end, chain.len()).with_context(|| format!("annotation of '{id}'"))?;
                chain = chain.with_annotation(ann)?;
                let depth = knot_depth(&chain)?;
                rec.core_start = Some(start);
                rec.core_end = Some(end);
                rec.depth = Some(depth);
                rec.depth_class = Some(classify_depth(depth).as_str().to_string());
            }
            rec.homology_class = a.homology_class.clone();
        }
        if let Some(c) = &clusters {
            rec.homology_class = c.label_of(&id).map(str::to_string);
        }
        let cloud = interpolate(&chain, cfg.interp_factor);
        rec.cloud_size = cloud.len();
        rec.cloud = write_file(out, &format!("clouds/{id}.xyz"), &write_xyz(&cloud.points))?;
        manifest.structures.push(rec);
    }
    if let Some(c) = &clusters {
        let file = write_file(out, "classes.tsv", &c.to_tsv())?;
        manifest.artifacts.insert("ingest".into(), vec![file]);
    }
    manifest.save(out)?;
    Ok(manifest)
}

/// Diagram and landscape of one cloud.
fn diagram_and_landscape(
    cloud: &PointCloud,
    cfg: &PipelineConfig,
) -> knotph_core::Result<(PersistenceDiagram, Landscape)> {
    let diagram = compute_ph1(cloud, cfg.max_scale)?;
    let landscape = diagram_to_landscape(&diagram);
    Ok((diagram, landscape))
}

fn write_ph(
    out: &Path,
    dir: &str,
    id: &str,
    d: &PersistenceDiagram,
    l: &Landscape,
) -> anyhow::Result<(String, String)> {
    Ok((
        write_file(out, &format!("{dir}diagrams/{id}.dgm.csv"), &d.to_csv())?,
        write_file(out, &format!("{dir}landscapes/{id}.lan"), &write_lan(l))?,
    ))
}

/// Degree-1 diagrams and landscapes for every ingested structure. A failing
/// structure is recorded and the others still complete.
pub fn ph(cfg: &PipelineConfig) -> CmdResult<Manifest> {
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let results = par::with_lanes(cfg.lanes, || {
        par::map_slice(&manifest.structures, |rec| -> anyhow::Result<(String, String)> {
            let cloud = load_cloud(out, rec)?;
            let (d, l) = diagram_and_landscape(&cloud, cfg)?;
            write_ph(out, "", &rec.id, &d, &l)
        })
    });
    let mut failures = Vec::new();
    for (rec, res) in manifest.structures.iter_mut().zip(results) {
        match res {
            Ok((d, l)) => {
                rec.diagram = Some(d);
                rec.landscape = Some(l);
            }
            Err(e) => {
                rec.diagram = None;
                rec.landscape = None;
                failures.push(Failure {
                    id: rec.id.clone(),
                    stage: "ph".into(),
                    message: format!("{e:#}"),
                });
            }
        }
    }
    manifest.config = cfg.to_map();
    manifest.set_failures("ph", failures.clone());
    manifest.save(out)?;
    if failures.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Failures(failures))
    }
}

/// Silhouettes by homology and depth class on the embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Silhouettes {
    pub homology: Option<f64>,
    pub depth: Option<f64>,
}

impl Silhouettes {
    pub fn get(&self, l: Labeling) -> Option<f64> {
        match l {
            Labeling::Homology => self.homology,
            Labeling::Depth => self.depth,
        }
    }
}

struct Analysis {
    files: Vec<String>,
    result: anyhow::Result<Silhouettes>,
}

fn distance_matrix(
    ids: Vec<String>,
    diagrams: &[PersistenceDiagram],
    landscapes: &[Landscape],
    cfg: &PipelineConfig,
) -> anyhow::Result<DistanceMatrix> {
    let p = cfg.landscape_p;
    Ok(match cfg.metric {
        Metric::Landscape => {
            landscape_lp_norm(&Landscape::zero(), p)?;
            DistanceMatrix::from_pairs(ids, |i, j| {
                landscape::landscape_distance(&landscapes[i], &landscapes[j], p).expect("exponent checked above")
            })?
        }
        Metric::Wasserstein => {
            let params = WassersteinParams {
                p: Exponent::Finite(p),
                q: Exponent::Infinity,
            };
            let dm = pairwise_wasserstein(diagrams, params)?;
            DistanceMatrix::new(ids, dm.values().to_vec())?
        }
    })
}

/// Embedding rows that carry a label under `labeling`.
fn labelled_rows(emb: &Embedding, records: &[&StructureRecord], labeling: Labeling) -> (Embedding, ClusterLabels) {
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(l) = labeling.of(r) {
            ids.push(r.id.clone());
            coords.push(emb.coords[i].clone());
            labels.push(l.to_string());
        }
    }
    let sub = Embedding {
        ids: ids.clone(),
        coords,
        n_neighbors: emb.n_neighbors,
        dim: emb.dim,
    };
    (sub, ClusterLabels { ids, labels })
}

/// Distance matrix, Isomap embedding, silhouettes and scatter plots, written
/// under `dir`.
fn analyze(
    out: &Path,
    dir: &str,
    records: &[&StructureRecord],
    diagrams: &[PersistenceDiagram],
    landscapes: &[Landscape],
    cfg: &PipelineConfig,
) -> anyhow::Result<Analysis> {
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let dm = distance_matrix(ids, diagrams, landscapes, cfg)?;
    let mut files = vec![write_file(out, &format!("{dir}/distance.csv"), &dm.to_csv())?];
    let emb = match isomap_embed(&dm, cfg.n_neighbors, cfg.embed_dim) {
        Ok(e) => e,
        Err(e @ Error::Disconnected(_)) => {
            let result = Err(anyhow!(
                "{e}\nhint: raise n_neighbors (currently {}) until the neighbourhood graph is connected",
                cfg.n_neighbors
            ));
            return Ok(Analysis { files, result });
        }
        Err(e @ Error::Degenerate(_)) => {
            warn(format!("{dir}: no embedding ({e}); silhouettes left undefined"));
            let tsv = Labeling::ALL
                .iter()
                .fold(String::from("labeling\tsilhouette\n"), |mut acc, l| {
                    let _ = writeln!(acc, "{}\t{NA}", l.as_str());
                    acc
                });
            files.push(write_file(out, &format!("{dir}/silhouette.tsv"), &tsv)?);
            return Ok(Analysis {
                files,
                result: Ok(Silhouettes {
                    homology: None,
                    depth: None,
                }),
            });
        }
        Err(e) => return Err(e.into()),
    };
    files.push(write_file(out, &format!("{dir}/embedding.csv"), &emb.to_csv())?);

    let mut values = Vec::new();
    let mut tsv = String::from("labeling\tsilhouette\n");
    for labeling in Labeling::ALL {
        let (sub, labels) = labelled_rows(&emb, records, labeling);
        let value = match silhouette_embedding(&sub, &labels) {
            Ok(v) => Some(v),
            Err(e) => {
                warn(format!("{dir}: silhouette by {} class: {e}", labeling.as_str()));
                None
            }
        };
        let _ = writeln!(tsv, "{}\t{}", labeling.as_str(), fmt_opt(value));
        values.push(value);

        let points: Vec<(f64, f64, String)> = records
            .iter()
            .zip(&emb.coords)
            .map(|(r, c)| {
                let y = c.get(1).copied().unwrap_or(0.0);
                (c[0], y, labeling.of(r).unwrap_or("unlabelled").to_string())
            })
            .collect();
        let title = format!("Isomap embedding by {} class", labeling.as_str());
        files.push(write_file(
            out,
            &format!("{dir}/scatter_{}.svg", labeling.as_str()),
            &svg::scatter(&title, &points),
        )?);
    }
    files.push(write_file(out, &format!("{dir}/silhouette.tsv"), &tsv)?);
    Ok(Analysis {
        files,
        result: Ok(Silhouettes {
            homology: values[0],
            depth: values[1],
        }),
    })
}

/// Records with both a diagram and a landscape, loaded.
fn load_results(
    out: &Path,
    manifest: &Manifest,
) -> anyhow::Result<(Vec<StructureRecord>, Vec<PersistenceDiagram>, Vec<Landscape>)> {
    let mut recs = Vec::new();
    let mut diagrams = Vec::new();
    let mut landscapes = Vec::new();
    for r in &manifest.structures {
        let (Some(d), Some(l)) = (&r.diagram, &r.landscape) else {
            warn(format!("'{}' has no diagram; skipped", r.id));
            continue;
        };
        diagrams
            .push(PersistenceDiagram::from_csv(&r.id, &read_file(&out.join(d))?).with_context(|| format!("in {d}"))?);
        landscapes.push(read_lan(&read_file(&out.join(l))?).with_context(|| format!("in {l}"))?);
        recs.push(r.clone());
    }
    Ok((recs, diagrams, landscapes))
}

/// Pairwise distances, Isomap embedding and silhouettes of all structures.
pub fn compare(cfg: &PipelineConfig) -> CmdResult<Silhouettes> {
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let (recs, diagrams, landscapes) = load_results(out, &manifest)?;
    if recs.len() < 2 {
        return Err(anyhow!("need at least 2 structures with diagrams, found {}", recs.len()).into());
    }
    let refs: Vec<&StructureRecord> = recs.iter().collect();
    let analysis = par::with_lanes(cfg.lanes, || {
        analyze(out, "compare", &refs, &diagrams, &landscapes, cfg)
    })?;
    manifest.config = cfg.to_map();
    manifest.artifacts.insert("compare".into(), analysis.files);
    manifest.save(out)?;
    Ok(analysis.result?)
}

/// What `test` compares.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRequest {
    pub class_a: String,
    pub class_b: String,
    pub labeling: Labeling,
    /// Layers for the restricted-distance heat map.
    pub layers: Option<BTreeSet<usize>>,
}

/// Average landscapes of two classes and a randomization test between them.
pub fn test(cfg: &PipelineConfig, req: &TestRequest) -> CmdResult<TestOutcome> {
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    if let Some(layers) = &req.layers {
        if layers.is_empty() || layers.contains(&0) {
            return Err(CliError::Config(
                "layers must be a nonempty set of integers >= 1".into(),
            ));
        }
    }
    let (recs, _, landscapes) = load_results(out, &manifest)?;
    let members = |class: &str| -> CmdResult<Vec<usize>> {
        let m: Vec<usize> = (0..recs.len())
            .filter(|&i| req.labeling.of(&recs[i]) == Some(class))
            .collect();
        if m.is_empty() {
            let known: BTreeSet<&str> = recs.iter().filter_map(|r| req.labeling.of(r)).collect();
            return Err(CliError::Config(format!(
                "unknown {} class '{class}' (known: {})",
                req.labeling.as_str(),
                known.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(m)
    };
    let (ma, mb) = (members(&req.class_a)?, members(&req.class_b)?);
    let sample =
        |label: &str, m: &[usize]| LandscapeSample::new(label, m.iter().map(|&i| landscapes[i].clone()).collect());
    let (sa, sb) = (sample(&req.class_a, &ma)?, sample(&req.class_b, &mb)?);

    let dir = format!(
        "test/{}_{}_vs_{}",
        req.labeling.as_str(),
        slug(&req.class_a),
        slug(&req.class_b)
    );
    let mut files = vec![
        write_file(
            out,
            &format!("{dir}/average_{}.lan", slug(&req.class_a)),
            &write_lan(&average_landscape(&sa)?),
        )?,
        write_file(
            out,
            &format!("{dir}/average_{}.lan", slug(&req.class_b)),
            &write_lan(&average_landscape(&sb)?),
        )?,
    ];
    let outcome = par::with_lanes(cfg.lanes, || {
        randomization_test(&sa, &sb, cfg.randomization_k, cfg.seed, cfg.landscape_p)
    })?;
    let tsv = format!(
        "class_a\tclass_b\tt_obs\tp_value\tk\tseed\n{}\t{}\t{}\t{}\t{}\t{}\n",
        req.class_a, req.class_b, outcome.t_obs, outcome.p_value, outcome.permutations, outcome.seed
    );
    files.push(write_file(out, &format!("{dir}/randomization.tsv"), &tsv)?);

    if let Some(layers) = &req.layers {
        let mut idx: Vec<usize> = Vec::new();
        for &i in ma.iter().chain(&mb) {
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let ids: Vec<String> = idx.iter().map(|&i| recs[i].id.clone()).collect();
        let dm = DistanceMatrix::from_pairs(ids.clone(), |i, j| {
            layer_restricted_distance(&landscapes[idx[i]], &landscapes[idx[j]], layers).expect("layers checked above")
        })?;
        let name = layers.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
        files.push(write_file(
            out,
            &format!("{dir}/heatmap_layers_{name}.csv"),
            &dm.to_csv(),
        )?);
        let title = format!("Layer distance, layers {{{}}}", name.replace('-', ","));
        files.push(write_file(
            out,
            &format!("{dir}/heatmap_layers_{name}.svg"),
            &svg::heatmap(&title, &ids, dm.values()),
        )?);
    }
    manifest.artifacts.insert(
        format!("test:{}:{}:{}", req.labeling.as_str(), req.class_a, req.class_b),
        files,
    );
    manifest.save(out)?;
    Ok(outcome)
}

/// Result of `generator`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReport {
    pub id: String,
    pub k: usize,
    pub t_peak: f64,
    pub birth: f64,
    pub death: f64,
    pub edges: usize,
    /// Fraction of cycle vertices inside the knot core, when annotated.
    pub overlap: Option<f64>,
    pub cycle: Vec<(usize, usize)>,
}

/// Cycle representative behind the peak of layer `k` of one structure.
pub fn generator(cfg: &PipelineConfig, id: &str, k: usize, t_star: Option<f64>) -> CmdResult<GeneratorReport> {
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let rec = manifest
        .record(id)
        .ok_or_else(|| CliError::Config(format!("unknown structure '{id}'")))?
        .clone();
    let (Some(dpath), Some(lpath)) = (&rec.diagram, &rec.landscape) else {
        return Err(anyhow!("'{id}' has no diagram; run `ph` first").into());
    };
    let lan = read_lan(&read_file(&out.join(lpath))?)?;
    let (t_peak, _) = layer_peak(&lan, k, t_star)?;
    let points = PersistenceDiagram::from_csv(id, &read_file(&out.join(dpath))?)?.points();
    let (birth, death) = points
        [pair_at(&points, k, t_peak).ok_or_else(|| anyhow!("no diagram point realises layer {k} at t = {t_peak}"))?];

    let cloud = load_cloud(out, &rec)?;
    let cycle = RipsH1::new(&cloud, cfg.max_scale)?.generator(birth, death)?;
    let annotation = match (rec.core_start, rec.core_end) {
        (Some(s), Some(e)) => Some(KnotAnnotation::new(s, e, rec.length)?),
        _ => None,
    };
    let overlap = annotation.as_ref().map(|a| cycle_core_overlap(&cycle, &cloud, a));

    let dir = format!("generator/{}_k{k}", slug(id));
    let mut files = vec![write_file(out, &format!("{dir}/cycle.csv"), &generator_to_csv(&cycle))?];
    let proj = principal_projection(&cloud.points);
    let in_core: Vec<bool> = (0..cloud.len())
        .map(|i| annotation.as_ref().is_some_and(|a| a.contains(cloud.backbone_index(i))))
        .collect();
    let edges: Vec<(usize, usize, bool)> = cycle
        .edges
        .iter()
        .zip(&cycle.on_backbone)
        .map(|(&(u, v), &b)| (u, v, b))
        .collect();
    let title = format!("{id}: generator of layer {k} peak (t = {t_peak:.3})");
    files.push(write_file(
        out,
        &format!("{dir}/backbone.svg"),
        &svg::backbone(&title, &proj, &in_core, &edges),
    )?);
    let tsv = format!(
        "id\tk\tt_peak\tbirth\tdeath\tedges\toverlap\n{id}\t{k}\t{t_peak}\t{birth}\t{death}\t{}\t{}\n",
        cycle.edges.len(),
        fmt_opt(overlap)
    );
    files.push(write_file(out, &format!("{dir}/overlap.tsv"), &tsv)?);
    manifest.artifacts.insert(format!("generator:{id}:k{k}"), files);
    manifest.save(out)?;
    Ok(GeneratorReport {
        id: id.to_string(),
        k,
        t_peak,
        birth,
        death,
        edges: cycle.edges.len(),
        overlap,
        cycle: cycle.edges,
    })
}

/// One row of the robustness report.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub sigma: f64,
    pub silhouettes: Option<Silhouettes>,
}

/// Seed of the `index`-th noise level.
pub fn sigma_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Reruns `ph` and `compare` on Gaussian-perturbed clouds for every sigma.
pub fn noise(cfg: &PipelineConfig) -> CmdResult<Vec<NoiseRow>> {
    let out = &cfg.output_dir;
    let mut manifest = Manifest::load(out)?;
    let mut files = Vec::new();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (index, &sigma) in cfg.sigmas.iter().enumerate() {
        let seed = sigma_seed(cfg.seed, index);
        let stage = format!("noise sigma={sigma}");
        let dir = format!("noise/sigma_{sigma}");
        let results = par::with_lanes(cfg.lanes, || {
            par::map_slice(
                &manifest.structures,
                |rec| -> anyhow::Result<(PersistenceDiagram, Landscape)> {
                    let cloud = perturb(
                        &load_cloud(out, rec)?,
                        sigma,
                        rng::derive_seed(seed, rng::stable_hash(&rec.id)),
                    )?;
                    let (d, l) = diagram_and_landscape(&cloud, cfg)?;
                    write_ph(out, &format!("{dir}/"), &rec.id, &d, &l)?;
                    Ok((d, l))
                },
            )
        });
        let mut recs = Vec::new();
        let mut diagrams = Vec::new();
        let mut landscapes = Vec::new();
        for (rec, res) in manifest.structures.iter().zip(results) {
            match res {
                Ok((d, l)) => {
                    files.push(format!("{dir}/diagrams/{}.dgm.csv", rec.id));
                    files.push(format!("{dir}/landscapes/{}.lan", rec.id));
                    recs.push(rec);
                    diagrams.push(d);
                    landscapes.push(l);
                }
                Err(e) => failures.push(Failure {
                    id: rec.id.clone(),
                    stage: stage.clone(),
                    message: format!("{e:#}"),
                }),
            }
        }
        let silhouettes = if recs.len() < 2 {
            failures.push(Failure {
                id: "*".into(),
                stage: stage.clone(),
                message: "fewer than 2 diagrams".into(),
            });
            None
        } else {
            let a = par::with_lanes(cfg.lanes, || analyze(out, &dir, &recs, &diagrams, &landscapes, cfg))?;
            files.extend(a.files);
            match a.result {
                Ok(s) => Some(s),
                Err(e) => {
                    failures.push(Failure {
                        id: "*".into(),
                        stage: stage.clone(),
                        message: format!("{e:#}"),
                    });
                    None
                }
            }
        };
        rows.push(NoiseRow { sigma, silhouettes });
    }

    let mut tsv = String::from("sigma\tsilhouette_homology\tsilhouette_depth\n");
    for r in &rows {
        let s = |l: Labeling| fmt_opt(r.silhouettes.as_ref().and_then(|s| s.get(l)));
        let _ = writeln!(tsv, "{}\t{}\t{}", r.sigma, s(Labeling::Homology), s(Labeling::Depth));
    }
    files.push(write_file(out, "noise/robustness.tsv", &tsv)?);
    let series: Vec<svg::Series> = Labeling::ALL
        .iter()
        .map(|&l| {
            let pts = rows
                .iter()
                .map(|r| (r.sigma, r.silhouettes.as_ref().and_then(|s| s.get(l))))
                .collect();
            (format!("by {} class", l.as_str()), pts)
        })
        .collect();
    files.push(write_file(
        out,
        "noise/robustness.svg",
        &svg::line_plot("Silhouette under coordinate noise", "sigma", "silhouette", &series),
    )?);

    manifest.config = cfg.to_map();
    manifest.failures.retain(|f| !f.stage.starts_with("noise"));
    manifest.failures.extend(failures.iter().cloned());
    manifest.artifacts.insert("noise".into(), files);
    manifest.save(out)?;
    if failures.is_empty() {
        Ok(rows)
    } else {
        Err(CliError::Failures(failures))
    }
}

/// Parses a comma-separated layer set such as `2` or `1,3`.
pub fn parse_layers(s: &str) -> Result<BTreeSet<usize>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad layer '{x}'")))
        })
        .collect()
}

/// Reads a silhouette report written by `compare` or `noise`.
pub fn read_silhouettes(path: &Path) -> anyhow::Result<Silhouettes> {
    let text = read_file(path)?;
    let mut s = Silhouettes {
        homology: None,
        depth: None,
    };
    for line in text.lines().skip(1) {
        let Some((name, value)) = line.split_once('\t') else {
            bail!("malformed line '{line}'")
        };
        let v = if value == NA { None } else { Some(value.parse::<f64>()?) };
        match name.parse::<Labeling>().map_err(|e| anyhow!(e))? {
            Labeling::Homology => s.homology = v,
            Labeling::Depth => s.depth = v,
        }
    }
    Ok(s)
}
