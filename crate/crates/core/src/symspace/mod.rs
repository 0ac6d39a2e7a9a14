//! The model R^rank x N for the homogeneous space of a split family, with
//! the warped product metric sum da_i^2 + sum_beta beta(a) g_beta: lengths,
//! two-sided distances, the leafwise compensating dilations F_a, and
//! logarithmic distortion profiles.

mod models;

pub use models::{model, Model, ModelTag, ALL_MODELS};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::carnot::{
    distance_d0, path_length_d0, CarnotAlgebra, CarnotPoint, RootBlockLayout, StratifiedMetric,
};
use crate::error::{Error, Result};
use crate::interval::DistanceEstimate;
use crate::pathopt::{OptimizeOptions, PathFunctional};

/// A point (a, n) of the model: flat coordinates plus a leaf point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorocyclicPoint {
    pub flat: Vec<f64>,
    pub leaf: CarnotPoint,
}

impl HorocyclicPoint {
    pub fn new(flat: Vec<f64>, leaf: CarnotPoint) -> Self {
        HorocyclicPoint { flat, leaf }
    }
}

/// One root block of the warped metric: the character vector on the flat
/// coordinates, the stratum it lives in, its coordinate range inside the
/// leaf algebra and the base positive form on that block.
#[derive(Debug, Clone)]
pub struct RootBlock {
    pub character: Vec<f64>,
    pub stratum: usize,
    pub offset: usize,
    pub dims: usize,
    pub form: DMatrix<f64>,
}

impl RootBlock {
    /// beta(a) = exp<beta, a>, positive with beta(0) = 1.
    pub fn char_eval(&self, a: &[f64]) -> f64 {
        self.character.iter().zip(a).map(|(b, x)| b * x).sum::<f64>().exp()
    }

    /// The compensating dilation factor f(a) = beta(a)^{-1/(2 stratum)}.
    pub fn dilation_factor(&self, a: &[f64]) -> f64 {
        self.char_eval(a).powf(-1.0 / (2.0 * self.stratum as f64))
    }
}

/// The warped metric on R^rank x N.
#[derive(Debug, Clone)]
pub struct WarpedMetric {
    rank: usize,
    algebra: CarnotAlgebra,
    blocks: Vec<RootBlock>,
}

impl WarpedMetric {
    pub fn new(rank: usize, algebra: CarnotAlgebra, blocks: Vec<RootBlock>) -> Result<Self> {
        let mut covered = vec![false; algebra.dim()];
        for b in &blocks {
            if b.character.len() != rank {
                return Err(Error::DimensionMismatch(
                    "character length does not match the rank".into(),
                ));
            }
            if b.stratum == 0 || b.stratum > algebra.step() {
                return Err(Error::InvalidArgument(format!("stratum {} out of range", b.stratum)));
            }
            let range = algebra.stratum_range(b.stratum);
            if b.offset < range.start || b.offset + b.dims > range.end {
                return Err(Error::InvariantViolation(format!(
                    "block at offset {} does not sit inside stratum {}",
                    b.offset, b.stratum
                )));
            }
            for i in b.offset..b.offset + b.dims {
                if covered[i] {
                    return Err(Error::InvariantViolation(format!("coordinate {i} covered twice")));
                }
                covered[i] = true;
            }
            if b.form.nrows() != b.dims || b.form.ncols() != b.dims {
                return Err(Error::DimensionMismatch("block form has wrong size".into()));
            }
            if (&b.form - b.form.transpose()).amax() > 1e-12
                || b.form.clone().symmetric_eigen().eigenvalues.iter().any(|e| *e <= 0.0)
            {
                return Err(Error::InvariantViolation(
                    "block form must be symmetric positive definite".into(),
                ));
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::InvariantViolation("blocks do not cover the leaf algebra".into()));
        }
        Ok(WarpedMetric { rank, algebra, blocks })
    }

    /// Build from a root datum layout, Euclidean form on each block.
    pub fn from_layout(rank: usize, algebra: CarnotAlgebra, layout: &[RootBlockLayout]) -> Result<Self> {
        let blocks = layout
            .iter()
            .map(|l| RootBlock {
                character: l.character.clone(),
                stratum: l.stratum,
                offset: l.offset,
                dims: l.dims,
                form: DMatrix::identity(l.dims, l.dims),
            })
            .collect();
        WarpedMetric::new(rank, algebra, blocks)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn algebra(&self) -> &CarnotAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[RootBlock] {
        &self.blocks
    }

    fn check_point(&self, p: &HorocyclicPoint) -> Result<()> {
        if p.flat.len() != self.rank || p.leaf.dim() != self.algebra.dim() {
            return Err(Error::DimensionMismatch("point does not match the metric".into()));
        }
        Ok(())
    }

    /// Leafwise compensating dilation: each root block is dilated by
    /// f(a) = beta(a)^{-1/(2i)}, i.e. scaled by beta(a)^{-1/2}. Because the
    /// characters add along brackets this is a group automorphism of N.
    pub fn f_map(&self, a: &[f64], n: &CarnotPoint) -> Result<CarnotPoint> {
        if a.len() != self.rank || n.dim() != self.algebra.dim() {
            return Err(Error::DimensionMismatch("f_map input mismatch".into()));
        }
        let mut coords = n.coords.clone();
        for b in &self.blocks {
            let factor = b.dilation_factor(a).powi(b.stratum as i32);
            for c in coords.iter_mut().skip(b.offset).take(b.dims) {
                *c *= factor;
            }
        }
        Ok(CarnotPoint::new(coords))
    }

    /// The induced left-invariant metric on the leaf {a} x N: each block
    /// form scaled by beta(a).
    pub fn leaf_metric_at(&self, a: &[f64]) -> Result<StratifiedMetric> {
        if a.len() != self.rank {
            return Err(Error::DimensionMismatch("flat coordinates have wrong rank".into()));
        }
        let mut strata: Vec<DMatrix<f64>> = self
            .algebra
            .strata_dims()
            .iter()
            .map(|&d| DMatrix::zeros(d, d))
            .collect();
        for b in &self.blocks {
            let beta = b.char_eval(a);
            let start = self.algebra.stratum_range(b.stratum).start;
            let local = b.offset - start;
            for i in 0..b.dims {
                for j in 0..b.dims {
                    strata[b.stratum - 1][(local + i, local + j)] = beta * b.form[(i, j)];
                }
            }
        }
        StratifiedMetric::new(strata)
    }

    /// Speed of a combined (flat, leaf) velocity at a point.
    fn speed(&self, pos: &[f64], vel: &[f64]) -> f64 {
        let a = &pos[..self.rank];
        let leaf_pos = &pos[self.rank..];
        let leaf_vel = &vel[self.rank..];
        let body = self.algebra.left_log_derivative(leaf_pos, leaf_vel);
        let mut total: f64 = vel[..self.rank].iter().map(|v| v * v).sum();
        for b in &self.blocks {
            let beta = b.char_eval(a);
            let sub = &body[b.offset..b.offset + b.dims];
            let mut quad = 0.0;
            for i in 0..b.dims {
                for j in 0..b.dims {
                    quad += sub[i] * b.form[(i, j)] * sub[j];
                }
            }
            total += beta * quad;
        }
        total.sqrt()
    }

    /// Length of a polyline under the warped metric, Simpson per segment.
    pub fn path_length(&self, path: &[HorocyclicPoint], panels: usize) -> Result<f64> {
        if path.len() < 2 {
            return Err(Error::InvalidArgument("path needs at least two nodes".into()));
        }
        for p in path {
            self.check_point(p)?;
        }
        let speed = |pos: &[f64], vel: &[f64]| self.speed(pos, vel);
        let functional = PathFunctional { dim: self.rank + self.algebra.dim(), speed: &speed };
        let nodes: Vec<Vec<f64>> = path.iter().map(pack).collect();
        Ok(functional.polyline_length(&nodes, panels))
    }

    /// Certified lower bound on the ambient distance: the flat projection
    /// |a_p - a_q|, improved by the hyperbolic shadow of each first-stratum
    /// root block. Dropping every other term of the metric and projecting
    /// the flat motion onto the character direction leaves the plane
    /// db^2 + e^{2 kappa b} |dx|^2 with kappa = |beta|/2, whose distance has
    /// the upper-half-space closed form; first-stratum body velocities
    /// agree with coordinate velocities, so the projection is exact there.
    pub fn distance_lower(&self, p: &HorocyclicPoint, q: &HorocyclicPoint) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        let flat: f64 = p
            .flat
            .iter()
            .zip(&q.flat)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let mut lower = flat;
        for b in &self.blocks {
            if b.stratum != 1 {
                continue;
            }
            let norm_beta = b.character.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm_beta == 0.0 {
                continue;
            }
            let kappa = norm_beta / 2.0;
            let sqrt_form = symmetric_sqrt(&b.form);
            let shadow = |pt: &HorocyclicPoint| -> (f64, Vec<f64>) {
                let b_coord =
                    b.character.iter().zip(&pt.flat).map(|(c, a)| c * a).sum::<f64>() / 2.0;
                let block = &pt.leaf.coords[b.offset..b.offset + b.dims];
                let x: Vec<f64> = (0..b.dims)
                    .map(|i| kappa * (0..b.dims).map(|j| sqrt_form[(i, j)] * block[j]).sum::<f64>())
                    .collect();
                (b_coord, x)
            };
            let (bp, xp) = shadow(p);
            let (bq, xq) = shadow(q);
            let d = upper_half_space_distance(bp, &xp, bq, &xq) / kappa;
            lower = lower.max(d);
        }
        Ok(lower)
    }

    /// True when the metric is a single first-stratum block in rank one, in
    /// which case the shadow bound is the exact closed-form distance.
    pub fn has_closed_form(&self) -> bool {
        self.rank == 1 && self.blocks.len() == 1 && self.blocks[0].stratum == 1
    }

    /// Two-sided ambient distance. Registered rank-one models return the
    /// closed form on both sides; otherwise the upper bound is an optimized
    /// polyline and the lower bound is the certified projection.
    pub fn distance(
        &self,
        p: &HorocyclicPoint,
        q: &HorocyclicPoint,
        opts: &OptimizeOptions,
    ) -> Result<DistanceEstimate> {
        let lower = self.distance_lower(p, q)?;
        if self.has_closed_form() {
            return Ok(DistanceEstimate::exact(lower));
        }
        let speed = |pos: &[f64], vel: &[f64]| self.speed(pos, vel);
        let functional = PathFunctional { dim: self.rank + self.algebra.dim(), speed: &speed };
        let out = functional.optimize_polyline(&pack(p), &pack(q), opts);
        Ok(DistanceEstimate::new(lower, out.length.max(lower), out.converged))
    }

    /// Intrinsic two-sided distance inside the leaf {a} x N.
    pub fn leaf_distance(
        &self,
        a: &[f64],
        x: &CarnotPoint,
        y: &CarnotPoint,
        opts: &OptimizeOptions,
    ) -> Result<DistanceEstimate> {
        let metric = self.leaf_metric_at(a)?;
        distance_d0(&self.algebra, &metric, x, y, opts)
    }

    /// Leaf length of a polyline inside {a} x N.
    pub fn leaf_path_length(&self, a: &[f64], path: &[CarnotPoint], panels: usize) -> Result<f64> {
        let metric = self.leaf_metric_at(a)?;
        path_length_d0(&self.algebra, &metric, path, panels)
    }
}

fn pack(p: &HorocyclicPoint) -> Vec<f64> {
    let mut v = Vec::with_capacity(p.flat.len() + p.leaf.dim());
    v.extend_from_slice(&p.flat);
    v.extend_from_slice(&p.leaf.coords);
    v
}

fn symmetric_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Distance in the upper half space model with coordinates (b, x), metric
/// db^2 + e^{2b} |dx|^2, i.e. z = e^{-b}:
/// cosh d = 1 + (|dx|^2 + (z_p - z_q)^2) / (2 z_p z_q).
pub fn upper_half_space_distance(bp: f64, xp: &[f64], bq: f64, xq: &[f64]) -> f64 {
    let zp = (-bp).exp();
    let zq = (-bq).exp();
    let dx2: f64 = xp.iter().zip(xq).map(|(u, v)| (u - v) * (u - v)).sum();
    let arg = 1.0 + (dx2 + (zp - zq) * (zp - zq)) / (2.0 * zp * zq);
    arg.acosh()
}

/// One row of a distortion table: a leaf pair's intrinsic distance d0, its
/// ambient distance and the ratio ambient / ln d0.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionRow {
    pub d0: DistanceEstimate,
    pub ambient: DistanceEstimate,
    pub ratio: f64,
}

/// Empirical envelope of the logarithmic distortion constants.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionProfile {
    pub rows: Vec<DistortionRow>,
    /// min and max of ambient / ln d0 over the sample.
    pub c_lower: f64,
    pub c_upper: f64,
}

/// Profile the distortion of a leaf at flat position `a`: each pair (x, y)
/// of leaf points is embedded through F_a and its ambient distance compared
/// against ln d0(x, y). Pairs must satisfy d0 > 1.
pub fn distortion_profile(
    metric: &WarpedMetric,
    a: &[f64],
    pairs: &[(CarnotPoint, CarnotPoint)],
    opts: &OptimizeOptions,
) -> Result<DistortionProfile> {
    let base = metric.leaf_metric_at(&vec![0.0; metric.rank()])?;
    let mut rows = Vec::with_capacity(pairs.len());
    let mut c_lower = f64::INFINITY;
    let mut c_upper = f64::NEG_INFINITY;
    for (x, y) in pairs {
        let d0 = distance_d0(metric.algebra(), &base, x, y, opts)?;
        if d0.lower <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "pair with d0 lower bound {:.6} <= 1: the log ratio is undefined",
                d0.lower
            )));
        }
        let px = HorocyclicPoint::new(a.to_vec(), metric.f_map(a, x)?);
        let py = HorocyclicPoint::new(a.to_vec(), metric.f_map(a, y)?);
        let ambient = metric.distance(&px, &py, opts)?;
        let ratio = ambient.estimate() / d0.estimate().ln();
        c_lower = c_lower.min(ratio);
        c_upper = c_upper.max(ratio);
        rows.push(DistortionRow { d0, ambient, ratio });
    }
    Ok(DistortionProfile { rows, c_lower, c_upper })
}
