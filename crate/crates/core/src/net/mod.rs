//! Finite windows of the dilated lattice net {(a, F_a(g))} over the
//! integer flat positions, the right-translation lattice action on them,
//! and the window reports: displacement, freeness, uniform discreteness /
//! bounded geometry, and empirical density.

use std::collections::HashMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::carnot::{cell_key, distance_d0, lattice_ball, window_margin, CarnotPoint, LatticeSpec, DEDUP_EPS};
use crate::error::{Error, Result};
use crate::interval::DistanceEstimate;
use crate::pathopt::OptimizeOptions;
use crate::symspace::{HorocyclicPoint, Model};

/// A net point: integer flat position, lattice element and the cached
/// embedding (a, F_a(g)).
#[derive(Debug, Clone, Serialize)]
pub struct NetPoint {
    pub a: Vec<i64>,
    /// Word length when the element came from the enumerated ball; `None`
    /// for points produced by the action that left the enumerated range.
    pub word_len: Option<usize>,
    pub g: CarnotPoint,
    pub embedded: HorocyclicPoint,
}

/// A finite truncation of the net: all pairs (a, g) with a in the integer
/// box and |g| at most the word radius.
#[derive(Debug, Clone)]
pub struct NetWindow {
    pub model: Model,
    pub spec: LatticeSpec,
    pub a_box: Vec<(i64, i64)>,
    pub ball_radius: usize,
    pub margin: DistanceEstimate,
    pub points: Vec<NetPoint>,
    index: HashMap<(Vec<i64>, Vec<i64>), usize>,
}

fn flat_of(a: &[i64]) -> Vec<f64> {
    a.iter().map(|&x| x as f64).collect()
}

fn box_grid(a_box: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut grid: Vec<Vec<i64>> = vec![Vec::new()];
    for &(lo, hi) in a_box {
        let mut next = Vec::new();
        for g in &grid {
            for v in lo..=hi {
                let mut g2 = g.clone();
                g2.push(v);
                next.push(g2);
            }
        }
        grid = next;
    }
    grid
}

/// Build a net window. The lattice must have a certified separation margin
/// reaching 1 on its radius-3 window (the integer lattices sit exactly at
/// 1; rescaled lattices clear it strictly); anything below is rejected
/// with an instruction to rescale.
pub fn build_net(
    model: &Model,
    spec: &LatticeSpec,
    a_box: &[(i64, i64)],
    ball_radius: usize,
) -> Result<NetWindow> {
    if a_box.len() != model.rank() {
        return Err(Error::DimensionMismatch(format!(
            "a_box rank {} does not match model rank {}",
            a_box.len(),
            model.rank()
        )));
    }
    if a_box.iter().any(|&(lo, hi)| lo > hi) {
        return Err(Error::InvalidArgument("empty a_box interval".into()));
    }
    if spec.algebra.dim() != model.metric.algebra().dim() {
        return Err(Error::DimensionMismatch(
            "lattice algebra does not match the model leaf".into(),
        ));
    }
    let zero = vec![0.0; model.rank()];
    let leaf_metric = model.metric.leaf_metric_at(&zero)?;
    let margin = window_margin(spec, &leaf_metric, 3)?;
    if margin.lower < 1.0 - 1e-6 {
        return Err(Error::MarginTooSmall { margin: margin.lower });
    }

    let ball = lattice_ball(spec, ball_radius)?;
    let mut points = Vec::new();
    let mut index = HashMap::new();
    for a in box_grid(a_box) {
        let flat = flat_of(&a);
        for elem in &ball {
            let embedded_leaf = model.metric.f_map(&flat, &elem.point)?;
            let key = (a.clone(), cell_key(&elem.point.coords));
            index.insert(key, points.len());
            points.push(NetPoint {
                a: a.clone(),
                word_len: Some(elem.word_len),
                g: elem.point.clone(),
                embedded: HorocyclicPoint::new(flat.clone(), embedded_leaf),
            });
        }
    }
    Ok(NetWindow {
        model: model.clone(),
        spec: spec.clone(),
        a_box: a_box.to_vec(),
        ball_radius,
        margin,
        points,
        index,
    })
}

/// Per-leaf displacement of one lattice element.
#[derive(Debug, Clone, Serialize)]
pub struct LeafDisplacement {
    pub a: Vec<i64>,
    pub displacement: DistanceEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisplacementProfile {
    pub per_leaf: Vec<LeafDisplacement>,
    pub sup_upper: f64,
    pub sup_lower: f64,
    pub mean_upper: f64,
    /// d0(1, delta) in the base leaf metric.
    pub d0_delta: DistanceEstimate,
    /// Smallest C with sup <= C ln d0(1, delta); `None` when d0 <= 1.
    pub admissible_c: Option<f64>,
    /// Max deviation between the leafwise value and directly computed
    /// point displacements on a sample of interior window points.
    pub sample_residual: f64,
}

impl NetWindow {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn leaves(&self) -> Vec<Vec<i64>> {
        box_grid(&self.a_box)
    }

    pub fn find(&self, a: &[i64], g: &CarnotPoint) -> Option<usize> {
        self.index.get(&(a.to_vec(), cell_key(&g.coords))).copied()
    }

    /// The right-translation action: delta sends (a, F_a(h)) to
    /// (a, F_a(h delta^{-1})). The leaf coordinate never changes.
    pub fn act(&self, delta: &CarnotPoint, p: &NetPoint) -> Result<NetPoint> {
        let alg = self.model.metric.algebra();
        let moved = alg.bch(&p.g, &alg.inverse(delta))?;
        let flat = flat_of(&p.a);
        let embedded_leaf = self.model.metric.f_map(&flat, &moved)?;
        let word_len = self.find(&p.a, &moved).and_then(|i| self.points[i].word_len);
        Ok(NetPoint {
            a: p.a.clone(),
            word_len,
            g: moved,
            embedded: HorocyclicPoint::new(flat, embedded_leaf),
        })
    }

    /// Interior points: word length at least 1 off the ball boundary and
    /// flat position at least 1 off the box boundary. Window truncation
    /// biases suprema, so sup statistics exclude the boundary shell.
    pub fn is_interior(&self, p: &NetPoint) -> bool {
        let word_ok = match p.word_len {
            Some(w) => self.ball_radius == 0 || w < self.ball_radius,
            None => false,
        };
        word_ok
            && p.a
                .iter()
                .zip(&self.a_box)
                .all(|(&x, &(lo, hi))| (lo == hi) || (x > lo && x < hi))
    }

    /// Displacement of a nontrivial lattice element over the window.
    ///
    /// The displacement d((a, F_a h), (a, F_a(h delta^{-1}))) is
    /// independent of h: translating the leaf by F_a(h)^{-1} is an ambient
    /// isometry and F_a is an automorphism, which reduces the pair to
    /// ((a, 0), (a, F_a(delta^{-1}))). The profile is computed per leaf and
    /// cross-checked against directly evaluated sample points.
    pub fn displacement_profile(&self, delta: &CarnotPoint) -> Result<DisplacementProfile> {
        if delta.norm_inf() <= DEDUP_EPS {
            return Err(Error::InvalidArgument(
                "displacement of the identity element is excluded by precondition".into(),
            ));
        }
        let alg = self.model.metric.algebra();
        let metric = &self.model.metric;
        let opts = OptimizeOptions::default();
        let inv = alg.inverse(delta);

        let mut per_leaf = Vec::new();
        let mut sup_upper = 0.0_f64;
        let mut sup_lower = 0.0_f64;
        let mut sum_upper = 0.0_f64;
        for a in self.leaves() {
            let flat = flat_of(&a);
            let origin = HorocyclicPoint::new(flat.clone(), alg.identity());
            let moved = HorocyclicPoint::new(flat.clone(), metric.f_map(&flat, &inv)?);
            let d = metric.distance(&origin, &moved, &opts)?;
            sup_upper = sup_upper.max(d.upper);
            sup_lower = sup_lower.max(d.lower);
            sum_upper += d.upper;
            per_leaf.push(LeafDisplacement { a, displacement: d });
        }
        let mean_upper = sum_upper / per_leaf.len().max(1) as f64;

        // Direct spot check on interior points.
        let mut sample_residual = 0.0_f64;
        for p in self.points.iter().filter(|p| self.is_interior(p)).take(8) {
            let q = self.act(delta, p)?;
            let direct = metric.distance(&p.embedded, &q.embedded, &opts)?;
            let leaf_value = per_leaf
                .iter()
                .find(|l| l.a == p.a)
                .map(|l| l.displacement.upper)
                .unwrap_or(f64::NAN);
            sample_residual = sample_residual.max((direct.upper - leaf_value).abs());
        }

        let zero = vec![0.0; self.model.rank()];
        let leaf_metric = metric.leaf_metric_at(&zero)?;
        let d0_delta = distance_d0(alg, &leaf_metric, &alg.identity(), delta, &opts)?;
        let admissible_c = if d0_delta.lower > 1.0 {
            Some(sup_upper / d0_delta.lower.ln())
        } else {
            None
        };
        Ok(DisplacementProfile {
            per_leaf,
            sup_upper,
            sup_lower,
            mean_upper,
            d0_delta,
            admissible_c,
            sample_residual,
        })
    }

    /// Verify freeness: no nontrivial lattice element of word length at
    /// most `max_word` fixes any window point.
    pub fn freeness_check(&self, max_word: usize) -> Result<FreenessReport> {
        if max_word == 0 {
            return Err(Error::InvalidArgument("word length bound must be at least 1".into()));
        }
        let ball = lattice_ball(&self.spec, max_word)?;
        let mut fixed = 0usize;
        let mut min_gap = f64::INFINITY;
        let mut elements = 0usize;
        for elem in ball.iter().filter(|e| e.word_len > 0) {
            elements += 1;
            for p in &self.points {
                let moved = self.act(&elem.point, p)?;
                let gap = moved
                    .g
                    .coords
                    .iter()
                    .zip(&p.g.coords)
                    .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
                min_gap = min_gap.min(gap);
                if gap <= DEDUP_EPS {
                    fixed += 1;
                }
            }
        }
        Ok(FreenessReport { elements_checked: elements, points_checked: self.points.len(), fixed_points: fixed, min_gap })
    }

    fn pair_lower(&self, i: usize, j: usize) -> Result<f64> {
        self.model.metric.distance_lower(&self.points[i].embedded, &self.points[j].embedded)
    }

    /// Ambient distance between two window points, normalized through the
    /// vertical and leaf translation isometries so that equal-offset pairs
    /// share one cache entry.
    fn pair_distance(
        &self,
        cache: &mut HashMap<(Vec<i64>, Vec<i64>), DistanceEstimate>,
        i: usize,
        j: usize,
        opts: &OptimizeOptions,
    ) -> Result<DistanceEstimate> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if i == j {
            return Ok(DistanceEstimate::exact(0.0));
        }
        let metric = &self.model.metric;
        let alg = metric.algebra();
        let (p, q) = (&self.points[i], &self.points[j]);
        let delta_a: Vec<i64> = q.a.iter().zip(&p.a).map(|(x, y)| x - y).collect();
        let delta_flat = flat_of(&delta_a);
        let shifted = metric.f_map(&delta_flat, &q.g)?;
        let normalized = alg.bch(&alg.inverse(&p.g), &shifted)?;
        let key = (delta_a, cell_key(&normalized.coords));
        if let Some(d) = cache.get(&key) {
            return Ok(*d);
        }
        let origin = HorocyclicPoint::new(vec![0.0; self.model.rank()], alg.identity());
        let target = HorocyclicPoint::new(delta_flat, normalized);
        let d = metric.distance(&origin, &target, opts)?;
        cache.insert(key, d);
        Ok(d)
    }

    /// Full matrix of ambient distance estimates (upper bounds; exact for
    /// closed-form models), symmetric with zero diagonal. Meant for small
    /// windows feeding the quotient layer.
    pub fn ambient_matrix(&self) -> Result<Vec<f64>> {
        let n = self.points.len();
        let opts = OptimizeOptions::fast();
        let mut cache = HashMap::new();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.pair_distance(&mut cache, i, j, &opts)?;
                out[i * n + j] = d.upper;
                out[j * n + i] = d.upper;
            }
        }
        Ok(out)
    }

    /// Uniform discreteness and bounded geometry report: separation bounds
    /// over all pairs and the ball-count profile with its log slope.
    pub fn udbg_report(&self, radii: &[f64]) -> Result<UdbgReport> {
        let n = self.points.len();
        if n <= 1 {
            return Ok(UdbgReport {
                num_points: n,
                min_separation_lower: None,
                min_separation_estimate: None,
                cross_leaf_min_lower: None,
                ball_profile: Vec::new(),
                log_slope: None,
                interior_centers: 0,
            });
        }
        let r_max = radii.iter().cloned().fold(0.0_f64, f64::max);
        let opts = OptimizeOptions::fast();

        // Certified lower bounds for every pair, cheap.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
        let mut min_lower = f64::INFINITY;
        let mut cross_leaf_min = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let lo = self.pair_lower(i, j)?;
                min_lower = min_lower.min(lo);
                if self.points[i].a != self.points[j].a {
                    cross_leaf_min = cross_leaf_min.min(lo);
                }
                pairs.push((lo, i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite bounds"));

        // Upper estimates in ascending lower-bound order; once the lower
        // bound clears both the running minimum and the profiling radius,
        // the remaining pairs cannot matter.
        let mut cache = HashMap::new();
        let mut estimates: HashMap<(usize, usize), f64> = HashMap::new();
        let mut min_upper = f64::INFINITY;
        for &(lo, i, j) in &pairs {
            if lo > min_upper && lo > r_max {
                break;
            }
            let d = self.pair_distance(&mut cache, i, j, &opts)?;
            min_upper = min_upper.min(d.upper);
            estimates.insert((i, j), d.upper);
        }

        let mut ball_profile = Vec::with_capacity(radii.len());
        let mut interior_centers = 0;
        for &r in radii {
            let mut max_count = 0usize;
            for (i, p) in self.points.iter().enumerate() {
                if !self.is_interior(p) {
                    continue;
                }
                let mut count = 1usize;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let key = if i < j { (i, j) } else { (j, i) };
                    if let Some(&u) = estimates.get(&key) {
                        if u <= r {
                            count += 1;
                        }
                    }
                }
                max_count = max_count.max(count);
            }
            ball_profile.push((r, max_count));
        }
        interior_centers += self.points.iter().filter(|p| self.is_interior(p)).count();

        let log_slope = fit_log_slope(&ball_profile);
        Ok(UdbgReport {
            num_points: n,
            min_separation_lower: Some(min_lower),
            min_separation_estimate: Some(min_upper),
            cross_leaf_min_lower: if cross_leaf_min.is_finite() { Some(cross_leaf_min) } else { None },
            ball_profile,
            log_slope,
            interior_centers,
        })
    }

    /// Deterministic Halton probes inside the trusted interior of the
    /// window: flat coordinates a margin of 1 off the box boundary, leaf
    /// coordinates inside one fundamental box of the lattice.
    pub fn make_probes(&self, count: usize, seed: u64) -> Vec<HorocyclicPoint> {
        let rank = self.model.rank();
        let leaf_dim = self.model.metric.algebra().dim();
        let alg = self.model.metric.algebra();
        let scale = self
            .spec
            .generators
            .iter()
            .map(|g| g.norm_inf())
            .fold(1.0_f64, f64::max);
        let mut probes = Vec::with_capacity(count);
        let offset = (seed % 8192) as usize + 1;
        for k in 0..count {
            let idx = offset + k;
            let mut flat = Vec::with_capacity(rank);
            for (d, &(lo, hi)) in self.a_box.iter().enumerate() {
                let span = ((hi - lo) as f64 - 2.0).max(0.0);
                let u = halton(idx, PRIMES[d]);
                flat.push(lo as f64 + 1.0 + u * span);
            }
            let mut leaf = Vec::with_capacity(leaf_dim);
            for d in 0..leaf_dim {
                let u = halton(idx, PRIMES[rank + d]);
                let stratum = alg.stratum_of(d);
                leaf.push(u * scale.powi(stratum as i32));
            }
            probes.push(HorocyclicPoint::new(flat, CarnotPoint::new(leaf)));
        }
        probes
    }

    /// Empirical covering radius: the max over trusted probes of the
    /// distance to the nearest net point (upper estimates).
    pub fn density_report(&self, probes: &[HorocyclicPoint]) -> Result<DensityReport> {
        let mut excluded = 0usize;
        let mut epsilon = 0.0_f64;
        let mut worst = None;
        let opts = OptimizeOptions::fast();
        for probe in probes {
            let trusted = probe
                .flat
                .iter()
                .zip(&self.a_box)
                .all(|(&x, &(lo, hi))| x >= lo as f64 + 1.0 - 1e-9 && x <= hi as f64 - 1.0 + 1e-9)
                || self.a_box.iter().all(|&(lo, hi)| lo == hi);
            if !trusted {
                excluded += 1;
                continue;
            }
            // Nearest net point: scan in ascending certified-lower order.
            let mut order: Vec<(f64, usize)> = (0..self.points.len())
                .map(|i| {
                    let lo = self
                        .model
                        .metric
                        .distance_lower(probe, &self.points[i].embedded)
                        .expect("dimensions match");
                    (lo, i)
                })
                .collect();
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            let mut best = f64::INFINITY;
            for &(lo, i) in &order {
                if lo >= best {
                    break;
                }
                let d = self.model.metric.distance(probe, &self.points[i].embedded, &opts)?;
                best = best.min(d.upper);
            }
            if best > epsilon {
                epsilon = best;
                worst = Some(probe.clone());
            }
        }
        if probes.len() == excluded {
            return Err(Error::InvalidArgument("no probe lies in the trusted interior".into()));
        }
        Ok(DensityReport { epsilon, probes_used: probes.len() - excluded, probes_excluded: excluded, worst_probe: worst })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FreenessReport {
    pub elements_checked: usize,
    pub points_checked: usize,
    pub fixed_points: usize,
    pub min_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UdbgReport {
    pub num_points: usize,
    /// Certified: min over pairs of the distance lower bounds. `None` is
    /// the sentinel for single-point windows.
    pub min_separation_lower: Option<f64>,
    /// Best estimate: min over pairs of the optimized upper bounds.
    pub min_separation_estimate: Option<f64>,
    pub cross_leaf_min_lower: Option<f64>,
    pub ball_profile: Vec<(f64, usize)>,
    pub log_slope: Option<f64>,
    pub interior_centers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub epsilon: f64,
    pub probes_used: usize,
    pub probes_excluded: usize,
    pub worst_probe: Option<HorocyclicPoint>,
}

fn fit_log_slope(profile: &[(f64, usize)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        profile.iter().map(|&(r, c)| (r, (c.max(1) as f64).ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

impl Serialize for NetWindow {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("NetWindow", 6)?;
        s.serialize_field("model", &self.model.tag)?;
        s.serialize_field("lattice", &self.spec)?;
        s.serialize_field("a_box", &self.a_box)?;
        s.serialize_field("ball_radius", &self.ball_radius)?;
        s.serialize_field("margin", &self.margin)?;
        s.serialize_field("points", &self.points)?;
        s.end()
    }
}
