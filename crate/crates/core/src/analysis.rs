//! Isomap embeddings, silhouette scores and similarity clustering.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::format::fmt_g;
use crate::metrics::{parse_matrix_csv, DistanceMatrix};
use crate::{par, Error, Result};

pub const DEFAULT_NEIGHBORS: usize = 5;
pub const DEFAULT_EMBED_DIM: usize = 2;
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.7;
pub const DEFAULT_TOP_CLASSES: usize = 9;
pub const OTHER_LABEL: &str = "Other";

/// Eigenvalues below this fraction of the largest count as zero.
const EIGEN_RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub ids: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub n_neighbors: usize,
    pub dim: usize,
}

impl Embedding {
    /// Euclidean distance between rows `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.coords[i]
            .iter()
            .zip(&self.coords[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// CSV with header `id,x,y[,z,c4,...]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for c in 0..self.dim {
            match c {
                0 => out.push_str(",x"),
                1 => out.push_str(",y"),
                2 => out.push_str(",z"),
                _ => {
                    let _ = write!(out, ",c{}", c + 1);
                }
            }
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.coords) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, ",{}", fmt_g(*v, 17));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabels {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
}

impl ClusterLabels {
    pub fn new(ids: Vec<String>, labels: Vec<String>) -> Result<Self> {
        if ids.len() != labels.len() {
            return Err(Error::Parameter(format!(
                "{} ids but {} labels",
                ids.len(),
                labels.len()
            )));
        }
        Ok(Self { ids, labels })
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.ids.iter().position(|x| x == id).map(|i| self.labels[i].as_str())
    }

    pub fn to_tsv(&self) -> String {
        self.ids
            .iter()
            .zip(&self.labels)
            .map(|(id, l)| format!("{id}\t{l}\n"))
            .collect()
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((id, label)) = line.split_once('\t') else {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected 'id<TAB>label'".into(),
                });
            };
            ids.push(id.trim().to_string());
            labels.push(label.trim().to_string());
        }
        Self::new(ids, labels)
    }
}

/// Symmetrised kNN graph: `i ~ j` if either lists the other among its
/// `k` nearest (distance ties broken by index).
fn knn_graph(dm: &DistanceMatrix, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = dm.len();
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dm.get(i, a).total_cmp(&dm.get(i, b)).then(a.cmp(&b)));
        for &j in others.iter().take(k) {
            adj[i].insert(j, dm.get(i, j));
            adj[j].insert(i, dm.get(i, j));
        }
    }
    adj.into_iter().map(|m| m.into_iter().collect()).collect()
}

fn components(adj: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(PartialEq)]
struct Dist(f64);
impl Eq for Dist {}
impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Dist(0.0), source)));
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    dist
}

/// Geodesic distances on the symmetrised kNN graph.
pub fn geodesic_distances(dm: &DistanceMatrix, n_neighbors: usize) -> Result<Vec<Vec<f64>>> {
    let n = dm.len();
    if n_neighbors == 0 || n_neighbors >= n {
        return Err(Error::Parameter(format!(
            "n_neighbors must be in 1..{n}, got {n_neighbors}"
        )));
    }
    let adj = knn_graph(dm, n_neighbors);
    let comps = components(&adj);
    if comps.len() > 1 {
        let named = comps
            .into_iter()
            .map(|c| c.into_iter().map(|i| dm.ids()[i].clone()).collect())
            .collect();
        return Err(Error::Disconnected(named));
    }
    Ok(par::map_range(n, |s| dijkstra(&adj, s)))
}

/// Classical MDS of a full distance table into `dim` coordinates.
pub fn classical_mds(dist: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let n = dist.len();
    if dim == 0 || dim > n {
        return Err(Error::Parameter(format!(
            "embedding dimension must be in 1..={n}, got {dim}"
        )));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| dist[i][j] * dist[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + total));
    let eigen = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let lead = eigen.eigenvalues[order[0]];
    let mut coords = vec![vec![0.0; dim]; n];
    for (c, &e) in order.iter().take(dim).enumerate() {
        let lambda = eigen.eigenvalues[e];
        if !(lead > 0.0) || lambda <= EIGEN_RELATIVE_TOLERANCE * lead {
            return Err(Error::Degenerate(format!(
                "eigenvalue {} of the centred Gram matrix is {lambda:e}, not positive",
                c + 1
            )));
        }
        let vec = eigen.eigenvectors.column(e);
        let pivot = (0..n).fold(0, |best, i| if vec[i].abs() > vec[best].abs() { i } else { best });
        let sign = if vec[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * lambda.sqrt();
        for i in 0..n {
            coords[i][c] = vec[i] * scale;
        }
    }
    Ok(coords)
}

/// Isomap: kNN graph, geodesic distances, classical MDS.
pub fn isomap_embed(dm: &DistanceMatrix, n_neighbors: usize, dim: usize) -> Result<Embedding> {
    let geo = geodesic_distances(dm, n_neighbors)?;
    let coords = classical_mds(&geo, dim)?;
    Ok(Embedding {
        ids: dm.ids().to_vec(),
        coords,
        n_neighbors,
        dim,
    })
}

fn label_indices(ids: &[String], labels: &ClusterLabels) -> Result<Vec<usize>> {
    let lookup: HashMap<&str, &str> = labels
        .ids
        .iter()
        .map(String::as_str)
        .zip(labels.labels.iter().map(String::as_str))
        .collect();
    let mut names: Vec<&str> = Vec::new();
    ids.iter()
        .map(|id| {
            let l = *lookup
                .get(id.as_str())
                .ok_or_else(|| Error::Parameter(format!("no label for '{id}'")))?;
            Ok(match names.iter().position(|&x| x == l) {
                Some(p) => p,
                None => {
                    names.push(l);
                    names.len() - 1
                }
            })
        })
        .collect()
}

fn silhouette_with(n: usize, dist: impl Fn(usize, usize) -> f64, cluster: &[usize]) -> Result<f64> {
    let n_clusters = cluster.iter().max().map_or(0, |m| m + 1);
    if n_clusters < 2 {
        return Err(Error::UndefinedSilhouette(
            "silhouette needs at least two distinct labels".into(),
        ));
    }
    let mut sizes = vec![0usize; n_clusters];
    for &c in cluster {
        sizes[c] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = cluster[i];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; n_clusters];
        for j in 0..n {
            if j != i {
                sums[cluster[j]] += dist(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..n_clusters)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

/// Mean silhouette using the matrix entries as distances.
pub fn silhouette(dm: &DistanceMatrix, labels: &ClusterLabels) -> Result<f64> {
    let cluster = label_indices(dm.ids(), labels)?;
    silhouette_with(dm.len(), |i, j| dm.get(i, j), &cluster)
}

/// Mean silhouette using Euclidean distances between embedded points.
pub fn silhouette_embedding(emb: &Embedding, labels: &ClusterLabels) -> Result<f64> {
    let cluster = label_indices(&emb.ids, labels)?;
    silhouette_with(emb.ids.len(), |i, j| emb.distance(i, j), &cluster)
}

/// Square similarity matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::Parameter(format!(
                "{n} ids need {} entries, got {}",
                n * n,
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::IdCollision(dup.clone()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Normalization(format!("similarity {v} is outside [0, 1]")));
        }
        for i in 0..n {
            for j in 0..i {
                if (values[i * n + j] - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::Parameter(format!("similarity is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { ids, values })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (ids, values) = parse_matrix_csv(text)?;
        Self::new(ids, values)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }
}

/// Flat single-linkage clusters on `1 - sim`, cutting merges above
/// `threshold`. Each cluster is named after its smallest member id.
pub fn single_linkage_clusters(sim: &SimilarityMatrix, threshold: f64) -> Result<ClusterLabels> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Parameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let n = sim.len();
    if n == 0 {
        return Err(Error::EmptyInput("similarity matrix has no entries".into()));
    }
    let mut condensed: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| 1.0 - sim.get(i, j))
        .collect();
    // Union-find over the dendrogram steps below the cut.
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    if n > 1 {
        let dendrogram = kodama::linkage(&mut condensed, n, kodama::Method::Single);
        for (s, step) in dendrogram.steps().iter().enumerate() {
            if step.dissimilarity <= threshold {
                let node = n + s;
                let (a, b) = (find(&mut parent, step.cluster1), find(&mut parent, step.cluster2));
                parent[a] = node;
                parent[b] = node;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut names: HashMap<usize, &str> = HashMap::new();
    for (i, &r) in roots.iter().enumerate() {
        let id = sim.ids[i].as_str();
        names.entry(r).and_modify(|m| *m = (*m).min(id)).or_insert(id);
    }
    let labels = roots.iter().map(|r| names[r].to_string()).collect();
    ClusterLabels::new(sim.ids.clone(), labels)
}

/// Keeps the `k` largest clusters, relabelling the rest [`OTHER_LABEL`].
/// Equal sizes are ordered by each cluster's smallest member id.
pub fn top_k_classes(labels: &ClusterLabels, k: usize) -> Result<ClusterLabels> {
    if k == 0 {
        return Err(Error::Parameter("k must be >= 1".into()));
    }
    let mut clusters: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (id, l) in labels.ids.iter().zip(&labels.labels) {
        let e = clusters.entry(l.as_str()).or_insert((0, id.as_str()));
        e.0 += 1;
        e.1 = e.1.min(id.as_str());
    }
    let mut ranked: Vec<(&str, usize, &str)> = clusters.into_iter().map(|(l, (n, m))| (l, n, m)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(b.2)));
    let keep: HashSet<&str> = ranked.iter().take(k).map(|r| r.0).collect();
    let relabelled = labels
        .labels
        .iter()
        .map(|l| {
            if keep.contains(l.as_str()) {
                l.clone()
            } else {
                OTHER_LABEL.to_string()
            }
        })
        .collect();
    ClusterLabels::new(labels.ids.clone(), relabelled)
}
