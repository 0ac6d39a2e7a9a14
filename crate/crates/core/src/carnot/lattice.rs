//! Lattice windows in a Carnot group: breadth-first word-ball enumeration
//! with coordinate-hash deduplication, rescaling by dilations, and the
//! pairwise separation margin on a finite window.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{distance_d0, distance_lower_d0, path_length_d0, CarnotAlgebra, CarnotPoint, StratifiedMetric};
use crate::error::{Error, Result};
use crate::interval::DistanceEstimate;
use crate::pathopt::OptimizeOptions;

/// Dedup epsilon for ball enumeration, in canonical coordinates.
pub const DEDUP_EPS: f64 = 1e-6;

/// A finitely generated lattice in a Carnot group, given by generators in
/// exponential coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub algebra: CarnotAlgebra,
    pub generators: Vec<CarnotPoint>,
    pub description: String,
}

impl LatticeSpec {
    pub fn new(algebra: CarnotAlgebra, generators: Vec<CarnotPoint>, description: &str) -> Result<Self> {
        for g in &generators {
            if g.dim() != algebra.dim() {
                return Err(Error::DimensionMismatch(
                    "generator dimension does not match the algebra".into(),
                ));
            }
        }
        Ok(LatticeSpec { algebra, generators, description: description.to_string() })
    }

    /// The integer lattice Z^n inside the abelian group R^n.
    pub fn integer_abelian(n: usize) -> Self {
        let algebra = CarnotAlgebra::abelian(n);
        let generators = (0..n)
            .map(|i| {
                let mut c = vec![0.0; n];
                c[i] = 1.0;
                CarnotPoint::new(c)
            })
            .collect();
        LatticeSpec { algebra, generators, description: format!("Z^{n}") }
    }

    /// The integer Heisenberg lattice with its two standard generators.
    pub fn integer_heisenberg() -> Self {
        let algebra = CarnotAlgebra::heisenberg();
        let generators = vec![
            CarnotPoint::new(vec![1.0, 0.0, 0.0]),
            CarnotPoint::new(vec![0.0, 1.0, 0.0]),
        ];
        LatticeSpec { algebra, generators, description: "integer Heisenberg".to_string() }
    }
}

/// A ball element with its word length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallElement {
    pub point: CarnotPoint,
    pub word_len: usize,
}

pub(crate) fn cell_key(coords: &[f64]) -> Vec<i64> {
    coords.iter().map(|c| (c / DEDUP_EPS).round() as i64).collect()
}

/// Coordinate-hash dedup table: equal cells (or adjacent cells within the
/// epsilon) identify elements; a shared cell with distant coordinates is a
/// collision error.
struct DedupTable {
    cells: HashMap<Vec<i64>, usize>,
}

impl DedupTable {
    fn new() -> Self {
        DedupTable { cells: HashMap::new() }
    }

    fn find(&self, coords: &[f64], stored: &[BallElement]) -> Result<Option<usize>> {
        let key = cell_key(coords);
        let candidates = neighbours(&key);
        for cand in candidates {
            if let Some(&idx) = self.cells.get(&cand) {
                let other = &stored[idx].point.coords;
                let dist = coords
                    .iter()
                    .zip(other)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                if dist <= DEDUP_EPS {
                    return Ok(Some(idx));
                }
                if cand == key {
                    return Err(Error::DedupCollision(coords.to_vec(), other.clone()));
                }
            }
        }
        Ok(None)
    }

    fn insert(&mut self, coords: &[f64], idx: usize) {
        self.cells.insert(cell_key(coords), idx);
    }
}

fn neighbours(key: &[i64]) -> Vec<Vec<i64>> {
    // The exact cell first, then the 3^d - 1 adjacent cells for points that
    // straddle a cell boundary.
    let mut out = vec![key.to_vec()];
    let d = key.len();
    let count = 3usize.pow(d as u32);
    for mask in 0..count {
        let mut cand = key.to_vec();
        let mut m = mask;
        let mut moved = false;
        for item in cand.iter_mut().take(d) {
            let delta = (m % 3) as i64 - 1;
            m /= 3;
            if delta != 0 {
                moved = true;
                *item += delta;
            }
        }
        if moved {
            out.push(cand);
        }
    }
    out
}

/// Every lattice element of word length <= r, by breadth-first search over
/// generator multiplication. Output is sorted by word length, then by
/// coordinates, so enumeration order is canonical.
pub fn lattice_ball(spec: &LatticeSpec, r: usize) -> Result<Vec<BallElement>> {
    let alg = &spec.algebra;
    let mut gens: Vec<CarnotPoint> = Vec::new();
    for g in &spec.generators {
        gens.push(g.clone());
        gens.push(alg.inverse(g));
    }

    let mut elements = vec![BallElement { point: alg.identity(), word_len: 0 }];
    let mut table = DedupTable::new();
    table.insert(&elements[0].point.coords, 0);

    let mut frontier = vec![0usize];
    for len in 1..=r {
        let mut next = Vec::new();
        for &idx in &frontier {
            let base = elements[idx].point.clone();
            for g in &gens {
                let prod = alg.bch(&base, g)?;
                if table.find(&prod.coords, &elements)?.is_none() {
                    let new_idx = elements.len();
                    table.insert(&prod.coords, new_idx);
                    elements.push(BallElement { point: prod, word_len: len });
                    next.push(new_idx);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    elements.sort_by(|a, b| {
        a.word_len.cmp(&b.word_len).then_with(|| {
            a.point
                .coords
                .partial_cmp(&b.point.coords)
                .expect("finite coordinates compare")
        })
    });
    Ok(elements)
}

/// Rescale all generators by the dilation of factor s. Dilations are group
/// automorphisms, so the image generates the dilated lattice. Returns the
/// rescaled spec together with its separation margin on a radius-3 window.
pub fn rescale_lattice(
    spec: &LatticeSpec,
    s: f64,
    metric: &StratifiedMetric,
) -> Result<(LatticeSpec, DistanceEstimate)> {
    if s <= 0.0 {
        return Err(Error::InvalidArgument(format!("rescale factor {s} must be positive")));
    }
    let generators = spec
        .generators
        .iter()
        .map(|g| spec.algebra.dilate(s, g))
        .collect::<Result<Vec<_>>>()?;
    let rescaled = LatticeSpec {
        algebra: spec.algebra.clone(),
        generators,
        description: format!("{} rescaled by {s}", spec.description),
    };
    let margin = window_margin(&rescaled, metric, 3)?;
    Ok((rescaled, margin))
}

/// Minimum pairwise d0 over the radius-`radius` word ball, as an interval:
/// the lower side aggregates certified lower bounds, the upper side the
/// best path upper bounds. By left invariance only the difference set
/// {g^{-1} h} is scanned.
pub fn window_margin(
    spec: &LatticeSpec,
    metric: &StratifiedMetric,
    radius: usize,
) -> Result<DistanceEstimate> {
    let alg = &spec.algebra;
    metric.matches(alg)?;
    let ball = lattice_ball(spec, radius)?;
    if ball.len() < 2 {
        return Ok(DistanceEstimate::exact(f64::INFINITY));
    }

    // Distinct nonzero differences, deduplicated on the coordinate hash.
    let mut diffs: Vec<CarnotPoint> = Vec::new();
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    for a in &ball {
        for b in &ball {
            let d = alg.difference(&a.point, &b.point)?;
            if d.norm_inf() <= DEDUP_EPS {
                continue;
            }
            let key = cell_key(&d.coords);
            if seen.insert(key, ()).is_none() {
                diffs.push(d);
            }
        }
    }

    if alg.step() == 1 {
        let exact = diffs
            .iter()
            .map(|d| metric.norm(alg, &d.coords))
            .fold(f64::INFINITY, f64::min);
        return Ok(DistanceEstimate::exact(exact));
    }

    let origin = alg.identity();
    let mut lower = f64::INFINITY;
    let mut cheap: Vec<(f64, usize)> = Vec::with_capacity(diffs.len());
    for (i, d) in diffs.iter().enumerate() {
        lower = lower.min(distance_lower_d0(alg, metric, d));
        let straight = path_length_d0(alg, metric, &[origin.clone(), d.clone()], 8)?;
        cheap.push((straight, i));
    }
    cheap.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite lengths"));

    // Optimize only the nearest candidates; the rest keep their straight
    // upper bound, which cannot undercut the optimized minimum.
    let mut upper = f64::INFINITY;
    let opts = OptimizeOptions::fast();
    for (rank, &(straight, idx)) in cheap.iter().enumerate() {
        if rank < 8 {
            let est = distance_d0(alg, metric, &origin, &diffs[idx], &opts)?;
            upper = upper.min(est.upper);
        } else {
            upper = upper.min(straight);
        }
    }
    Ok(DistanceEstimate::new(lower.min(upper), upper, true))
}
