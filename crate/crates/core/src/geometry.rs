//! Backbone ingestion, point-cloud construction, knot depth and noise.

use std::fmt;
use std::str::FromStr;

use crate::rng::Gaussian;
use crate::{Error, Result};

/// Default number of interpolated points inserted between consecutive atoms.
pub const DEFAULT_INTERP_FACTOR: usize = 5;

/// Depth above which a knot is called deep.
pub const DEEP_THRESHOLD: f64 = 0.05;
/// Depth below which a knot is called shallow.
pub const SHALLOW_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn translate(&self, dx: f64, dy: f64, dz: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }
}

/// Euclidean distance. Every filtration value in the crate comes from here.
#[inline]
pub fn euclidean(a: &Point3, b: &Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepthClass {
    Deep,
    Shallow,
    Neither,
}

impl DepthClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DepthClass::Deep => "deep",
            DepthClass::Shallow => "shallow",
            DepthClass::Neither => "neither",
        }
    }
}

impl fmt::Display for DepthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DepthClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep" => Ok(DepthClass::Deep),
            "shallow" => Ok(DepthClass::Shallow),
            "neither" => Ok(DepthClass::Neither),
            other => Err(Error::Parameter(format!("unknown depth class '{other}'"))),
        }
    }
}

/// Location of the knot core on a chain. Tail lengths count Cα atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnotAnnotation {
    pub core_start: usize,
    pub core_end: usize,
    pub n_tail_len: usize,
    pub c_tail_len: usize,
    pub depth_class: DepthClass,
}

impl KnotAnnotation {
    /// Builds the annotation for a chain of `chain_len` atoms whose core spans
    /// the inclusive index range `core_start..=core_end`.
    pub fn new(core_start: usize, core_end: usize, chain_len: usize) -> Result<Self> {
        if core_start > core_end || core_end >= chain_len {
            return Err(Error::InvalidChain(format!(
                "knot core {core_start}..={core_end} does not fit a chain of length {chain_len}"
            )));
        }
        let n_tail_len = core_start;
        let c_tail_len = chain_len - 1 - core_end;
        let depth = depth_from_lengths(n_tail_len, c_tail_len, chain_len);
        Ok(Self {
            core_start,
            core_end,
            n_tail_len,
            c_tail_len,
            depth_class: classify_depth(depth),
        })
    }

    pub fn core_len(&self) -> usize {
        self.core_end - self.core_start + 1
    }

    pub fn contains(&self, backbone_index: usize) -> bool {
        (self.core_start..=self.core_end).contains(&backbone_index)
    }
}

/// Ordered Cα trace of one protein chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneChain {
    pub id: String,
    points: Vec<Point3>,
    annotation: Option<KnotAnnotation>,
}

impl BackboneChain {
    pub fn new(id: impl Into<String>, points: Vec<Point3>) -> Result<Self> {
        let id = id.into();
        if points.len() < 2 {
            return Err(Error::InvalidChain(format!(
                "'{id}' has {} point(s), need at least 2",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidChain(format!("'{id}' point {i} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidChain(format!("'{id}' points {i} and {} coincide", i + 1)));
        }
        Ok(Self {
            id,
            points,
            annotation: None,
        })
    }

    /// Attaches a knot annotation, checking it fits this chain.
    pub fn with_annotation(mut self, annotation: KnotAnnotation) -> Result<Self> {
        if annotation.core_end >= self.points.len()
            || annotation.n_tail_len != annotation.core_start
            || annotation.c_tail_len + annotation.core_end + 1 != self.points.len()
        {
            return Err(Error::InvalidChain(format!(
                "annotation does not match '{}' of length {}",
                self.id,
                self.points.len()
            )));
        }
        self.annotation = Some(annotation);
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn annotation(&self) -> Option<&KnotAnnotation> {
        self.annotation.as_ref()
    }
}

/// Points handed to the persistence computation, in backbone order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub source_id: String,
    pub points: Vec<Point3>,
    pub interp_factor: usize,
}

impl PointCloud {
    pub fn new(source_id: impl Into<String>, points: Vec<Point3>, interp_factor: usize) -> Self {
        Self {
            source_id: source_id.into(),
            points,
            interp_factor,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the Cα atom whose segment contains cloud point `i`.
    pub fn backbone_index(&self, i: usize) -> usize {
        i / (self.interp_factor + 1)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses a `.xyz` backbone file.
///
/// Lines hold `x y z` or `index x y z`; in the four-column form the index must
/// be strictly increasing and is then dropped. Blank lines and `#` comments
/// are skipped.
pub fn parse_xyz(id: &str, text: &str) -> Result<BackboneChain> {
    let mut points = Vec::new();
    let mut last_index: Option<f64> = None;
    let mut last_line = 0;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        last_line = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let numbers = tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("'{t}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let coords = match numbers.len() {
            3 => &numbers[..],
            4 => {
                let index = numbers[0];
                if let Some(prev) = last_index {
                    if index <= prev {
                        return Err(parse_err(
                            lineno,
                            format!("residue index {index} does not increase (previous {prev})"),
                        ));
                    }
                }
                last_index = Some(index);
                &numbers[1..]
            }
            n => return Err(parse_err(lineno, format!("expected 3 or 4 fields, found {n}"))),
        };
        let p = Point3::new(coords[0], coords[1], coords[2]);
        if !p.is_finite() {
            return Err(parse_err(lineno, "coordinate is not finite"));
        }
        points.push(p);
    }
    if points.len() < 2 {
        return Err(parse_err(
            last_line,
            format!("found {} point(s), need at least 2", points.len()),
        ));
    }
    BackboneChain::new(id, points)
}

/// Writes points in the three-column `.xyz` layout.
pub fn write_xyz(points: &[Point3]) -> String {
    let mut out = String::with_capacity(points.len() * 48);
    for p in points {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}

/// Extracts the Cα trace of `chain_id` from PDB text.
///
/// Reads `ATOM` records of the first model only, keeping alternate location
/// blank or `A`. Coordinates come from the fixed columns 31-54.
pub fn extract_ca_from_pdb(text: &str, chain_id: &str) -> Result<BackboneChain> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM") {
            continue;
        }
        let field = |a: usize, b: usize| line.get(a..b.min(line.len())).unwrap_or("");
        if field(12, 16).trim() != "CA" {
            continue;
        }
        let alt = field(16, 17).trim();
        if !(alt.is_empty() || alt == "A") {
            continue;
        }
        if field(21, 22).trim() != chain_id.trim() {
            continue;
        }
        let coord = |a: usize, b: usize, axis: &str| -> Result<f64> {
            let raw = line
                .get(a..b)
                .ok_or_else(|| parse_err(lineno, format!("ATOM record too short for {axis}")))?;
            raw.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("unreadable {axis} coordinate '{raw}'")))
        };
        points.push(Point3::new(
            coord(30, 38, "x")?,
            coord(38, 46, "y")?,
            coord(46, 54, "z")?,
        ));
    }
    if points.is_empty() {
        return Err(Error::EmptyChain(chain_id.to_string()));
    }
    BackboneChain::new(chain_id, points)
}

/// Inserts `d` equally spaced points between every pair of consecutive atoms.
pub fn interpolate(chain: &BackboneChain, d: usize) -> PointCloud {
    let pts = chain.points();
    let mut out = Vec::with_capacity(pts.len() + (pts.len() - 1) * d);
    let steps = (d + 1) as f64;
    for w in pts.windows(2) {
        let (p1, p2) = (w[0], w[1]);
        out.push(p1);
        for i in 1..=d {
            let f = i as f64;
            out.push(Point3::new(
                p1.x + f * (p2.x - p1.x) / steps,
                p1.y + f * (p2.y - p1.y) / steps,
                p1.z + f * (p2.z - p1.z) / steps,
            ));
        }
    }
    out.push(*pts.last().expect("chain has at least two points"));
    PointCloud::new(chain.id.clone(), out, d)
}

fn depth_from_lengths(n_tail: usize, c_tail: usize, total: usize) -> f64 {
    (n_tail as f64 * c_tail as f64) / (total as f64 * total as f64)
}

/// Knot depth: product of the tail lengths over the squared chain length.
pub fn knot_depth(chain: &BackboneChain) -> Result<f64> {
    let a = chain
        .annotation()
        .ok_or_else(|| Error::AnnotationRequired(chain.id.clone()))?;
    Ok(depth_from_lengths(a.n_tail_len, a.c_tail_len, chain.len()))
}

/// Thresholds are strict: exactly 0.05 or 0.005 is `Neither`.
pub fn classify_depth(depth: f64) -> DepthClass {
    if depth > DEEP_THRESHOLD {
        DepthClass::Deep
    } else if depth < SHALLOW_THRESHOLD {
        DepthClass::Shallow
    } else {
        DepthClass::Neither
    }
}

/// Adds independent N(0, sigma^2) noise to every coordinate.
///
/// Offsets are drawn x, y, z per point in cloud order from a
/// [`Gaussian`] stream seeded with `seed`.
pub fn perturb(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!(
            "sigma must be a finite value >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let mut g = Gaussian::new(seed);
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let dx = sigma * g.sample();
            let dy = sigma * g.sample();
            let dz = sigma * g.sample();
            p.translate(dx, dy, dz)
        })
        .collect();
    Ok(PointCloud::new(cloud.source_id.clone(), points, cloud.interp_factor))
}

/// Orthographic projection onto the plane of the two leading principal
/// axes. Each axis is oriented so its largest-magnitude coordinate is
/// positive.
pub fn principal_projection(points: &[Point3]) -> Vec<(f64, f64)> {
    if points.is_empty() {
        return Vec::new();
    }
    let n = points.len() as f64;
    let mean = points
        .iter()
        .fold([0.0; 3], |m, p| [m[0] + p.x, m[1] + p.y, m[2] + p.z])
        .map(|v| v / n);
    let centred: Vec<[f64; 3]> = points
        .iter()
        .map(|p| [p.x - mean[0], p.y - mean[1], p.z - mean[2]])
        .collect();
    let cov = nalgebra::Matrix3::from_fn(|r, c| centred.iter().map(|v| v[r] * v[c]).sum::<f64>() / n);
    let eigen = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let axis = |k: usize| {
        let v = eigen.eigenvectors.column(order[k]);
        let proj: Vec<f64> = centred
            .iter()
            .map(|c| c[0] * v[0] + c[1] * v[1] + c[2] * v[2])
            .collect();
        let pivot = proj
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        proj.into_iter().map(|x| x * sign).collect::<Vec<f64>>()
    };
    let (u, w) = (axis(0), axis(1));
    u.into_iter().zip(w).collect()
}

/// One row of the annotation sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub id: String,
    pub length: usize,
    pub core: Option<(usize, usize)>,
    pub homology_class: Option<String>,
}

/// Parses the tab-separated annotation sidecar.
///
/// The header must name the columns `id`, `length`, `core_start`, `core_end`,
/// `homology_class`. Core and class cells may be empty.
pub fn parse_annotation_tsv(text: &str) -> Result<Vec<AnnotationRecord>> {
    const COLUMNS: [&str; 5] = ["id", "length", "core_start", "core_end", "homology_class"];
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    let index_of = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| parse_err(hline + 1, format!("missing column '{name}'")))
    };
    let idx: Vec<usize> = COLUMNS.iter().map(|c| index_of(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        let cell = |k: usize| cells.get(idx[k]).copied().unwrap_or("");
        let id = cell(0);
        if id.is_empty() {
            return Err(parse_err(lineno, "empty id"));
        }
        let num = |k: usize| -> Result<Option<usize>> {
            let c = cell(k);
            if c.is_empty() {
                Ok(None)
            } else {
                c.parse::<usize>()
                    .map(Some)
                    .map_err(|_| parse_err(lineno, format!("'{c}' is not a count")))
            }
        };
        let length = num(1)?.ok_or_else(|| parse_err(lineno, "missing length"))?;
        let core = match (num(2)?, num(3)?) {
            (Some(s), Some(e)) => Some((s, e)),
            (None, None) => None,
            _ => return Err(parse_err(lineno, "core_start and core_end must both be set")),
        };
        let class = cell(4);
        out.push(AnnotationRecord {
            id: id.to_string(),
            length,
            core,
            homology_class: (!class.is_empty()).then(|| class.to_string()),
        });
    }
    Ok(out)
}
