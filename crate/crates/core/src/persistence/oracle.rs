use std::collections::HashMap;

use super::{PairwiseDistances, PersistenceDiagram, PersistencePair};
use crate::geometry::PointCloud;
use crate::{Error, Result};

/// Largest cloud accepted by [`brute_force_ph`].
pub const BRUTE_FORCE_MAX_POINTS: usize = 16;

struct Simplex {
    value: f64,
    vertices: Vec<usize>,
}

/// Degree-1 diagram by full boundary-matrix reduction.
///
/// Every simplex of dimension at most two is listed, sorted by (value,
/// dimension, vertex tuple), and the boundary matrix is reduced column by
/// column from the left. Zero-persistence pairs are dropped.
pub fn brute_force_ph(cloud: &PointCloud) -> Result<PersistenceDiagram> {
    let n = cloud.len();
    if n > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::TooLarge(n, BRUTE_FORCE_MAX_POINTS));
    }
    let dist = PairwiseDistances::new(&cloud.points);

    let mut simplices = Vec::new();
    for i in 0..n {
        simplices.push(Simplex {
            value: 0.0,
            vertices: vec![i],
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            simplices.push(Simplex {
                value: dist.get(i, j),
                vertices: vec![i, j],
            });
            for k in (j + 1)..n {
                let value = dist.get(i, j).max(dist.get(i, k)).max(dist.get(j, k));
                simplices.push(Simplex {
                    value,
                    vertices: vec![i, j, k],
                });
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });

    let index: HashMap<&[usize], usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertices.as_slice(), i))
        .collect();

    let mut low_owner: HashMap<usize, usize> = HashMap::new();
    let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(simplices.len());
    let mut pairs = Vec::new();
    for (j, s) in simplices.iter().enumerate() {
        let mut col: Vec<usize> = if s.vertices.len() == 1 {
            Vec::new()
        } else {
            (0..s.vertices.len())
                .map(|drop| {
                    let face: Vec<usize> = s
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    index[face.as_slice()]
                })
                .collect()
        };
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match low_owner.get(&low) {
                Some(&k) => col = xor(&col, &reduced[k]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            low_owner.insert(low, j);
            let birth = &simplices[low];
            if s.vertices.len() == 3 && s.value > birth.value {
                pairs.push(PersistencePair::new(birth.value, s.value));
            }
        }
        reduced.push(col);
    }
    pairs.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
    Ok(PersistenceDiagram::new(cloud.source_id.clone(), pairs))
}

fn xor(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    let mut res = Vec::with_capacity(out.len());
    for run in out.chunk_by(|x, y| x == y) {
        if run.len() % 2 == 1 {
            res.push(run[0]);
        }
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;

    #[test]
    fn square_by_hand() {
        let c = PointCloud::new(
            "sq",
            vec![
                Point3::new(0., 0., 0.),
                Point3::new(1., 0., 0.),
                Point3::new(1., 1., 0.),
                Point3::new(0., 1., 0.),
            ],
            0,
        );
        // 4 vertices + 6 edges + 4 triangles.
        let d = brute_force_ph(&c).unwrap();
        assert_eq!(d.points(), vec![(1.0, 2f64.sqrt())]);
    }

    #[test]
    fn size_guard() {
        let c = PointCloud::new("big", vec![Point3::default(); 17], 0);
        assert_eq!(brute_force_ph(&c).unwrap_err(), Error::TooLarge(17, 16));
    }
}
