//! Graded nilpotent group arithmetic in exponential coordinates of the
//! first kind: truncated (exact) BCH multiplication, dilation
//! automorphisms, lattice windows and the left-invariant distance d0.

mod lattice;
mod metric;

pub use lattice::{
    lattice_ball, rescale_lattice, window_margin, BallElement, LatticeSpec, DEDUP_EPS,
};
pub(crate) use lattice::cell_key;
pub use metric::{distance_d0, distance_lower_d0, path_length_d0, StratifiedMetric};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, RootDatum};

/// One structure constant: [e_left, e_right] contributes coeff * e_target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketTerm {
    pub left: usize,
    pub right: usize,
    pub target: usize,
    pub coeff: f64,
}

/// A stratified nilpotent Lie algebra over a graded basis. The bracket of
/// stratum i and stratum j lands in stratum i + j and stratum 1 generates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarnotAlgebra {
    strata_dims: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    /// Stored with left < right; antisymmetry fills in the rest.
    brackets: Vec<BracketTerm>,
}

/// A group element in exponential coordinates of the first kind: the point
/// exp(sum coords[k] e_k) against the graded basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarnotPoint {
    pub coords: Vec<f64>,
}

impl CarnotPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        CarnotPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_inf(&self) -> f64 {
        self.coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl CarnotAlgebra {
    /// Build from stratum dimensions and structure constants, validating the
    /// grading, the Jacobi identity and generation by the first stratum.
    /// The BCH product is implemented through step 3, which it covers
    /// exactly; higher steps are rejected.
    pub fn new(strata_dims: Vec<usize>, brackets: Vec<BracketTerm>) -> Result<Self> {
        if strata_dims.is_empty() || strata_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("strata dimensions must be nonempty".into()));
        }
        if strata_dims.len() > 3 {
            return Err(Error::UnsupportedTag(format!(
                "step {} > 3: the truncated BCH product would not be exact",
                strata_dims.len()
            )));
        }
        let mut offsets = Vec::with_capacity(strata_dims.len());
        let mut dim = 0;
        for &d in &strata_dims {
            offsets.push(dim);
            dim += d;
        }
        let mut normalized = Vec::with_capacity(brackets.len());
        for t in brackets {
            if t.left >= dim || t.right >= dim || t.target >= dim {
                return Err(Error::DimensionMismatch(format!("bracket term {t:?} out of range")));
            }
            if t.left == t.right {
                return Err(Error::InvalidArgument(format!("[e_i, e_i] term {t:?} must vanish")));
            }
            let t = if t.left < t.right {
                t
            } else {
                BracketTerm { left: t.right, right: t.left, target: t.target, coeff: -t.coeff }
            };
            normalized.push(t);
        }
        let alg = CarnotAlgebra { strata_dims, offsets, dim, brackets: normalized };
        alg.validate()?;
        Ok(alg)
    }

    /// Abelian R^n: a single stratum, trivial brackets.
    pub fn abelian(n: usize) -> Self {
        CarnotAlgebra::new(vec![n], Vec::new()).expect("abelian data is valid")
    }

    /// The 3-dimensional Heisenberg algebra: strata (2, 1), [e0, e1] = e2.
    pub fn heisenberg() -> Self {
        CarnotAlgebra::new(
            vec![2, 1],
            vec![BracketTerm { left: 0, right: 1, target: 2, coeff: 1.0 }],
        )
        .expect("Heisenberg data is valid")
    }

    fn validate(&self) -> Result<()> {
        for t in &self.brackets {
            let expect = self.stratum_of(t.left) + self.stratum_of(t.right);
            if expect > self.step() {
                return Err(Error::InvariantViolation(format!(
                    "term {t:?} should vanish: strata sum {expect} exceeds step {}",
                    self.step()
                )));
            }
            if self.stratum_of(t.target) != expect {
                return Err(Error::InvariantViolation(format!(
                    "term {t:?} violates the grading: target stratum {} != {expect}",
                    self.stratum_of(t.target)
                )));
            }
        }
        // Jacobi identity on basis triples.
        for a in 0..self.dim {
            for b in a + 1..self.dim {
                for c in b + 1..self.dim {
                    let ea = self.basis_vector(a);
                    let eb = self.basis_vector(b);
                    let ec = self.basis_vector(c);
                    let mut sum = self.bracket_vec(&ea, &self.bracket_vec(&eb, &ec));
                    for (i, v) in self.bracket_vec(&eb, &self.bracket_vec(&ec, &ea)).iter().enumerate() {
                        sum[i] += v;
                    }
                    for (i, v) in self.bracket_vec(&ec, &self.bracket_vec(&ea, &eb)).iter().enumerate() {
                        sum[i] += v;
                    }
                    let residual = sum.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                    if residual > 1e-10 {
                        return Err(Error::InvariantViolation(format!(
                            "Jacobi identity fails on basis triple ({a},{b},{c}): {residual:e}"
                        )));
                    }
                }
            }
        }
        // Stratum 1 generates: iterated brackets of the first stratum span
        // each higher stratum.
        let mut span: Vec<Vec<f64>> = (0..self.strata_dims[0]).map(|i| self.basis_vector(i)).collect();
        loop {
            let mut grew = false;
            let current = span.clone();
            for x in &current {
                for y in &current {
                    let br = self.bracket_vec(x, y);
                    if br.iter().any(|c| c.abs() > 1e-12) && !in_span(&span, &br) {
                        span.push(br);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        if rank_of(&span) != self.dim {
            return Err(Error::InvariantViolation(
                "the first stratum does not generate the algebra".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.strata_dims.len()
    }

    pub fn strata_dims(&self) -> &[usize] {
        &self.strata_dims
    }

    /// Coordinate range `offset..offset + len` of stratum s (1-based).
    pub fn stratum_range(&self, s: usize) -> std::ops::Range<usize> {
        let start = self.offsets[s - 1];
        start..start + self.strata_dims[s - 1]
    }

    /// 1-based stratum index of a basis coordinate.
    pub fn stratum_of(&self, index: usize) -> usize {
        let mut s = 1;
        for (k, &off) in self.offsets.iter().enumerate().skip(1) {
            if index >= off {
                s = k + 1;
            }
        }
        s
    }

    pub fn brackets(&self) -> &[BracketTerm] {
        &self.brackets
    }

    fn basis_vector(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[i] = 1.0;
        v
    }

    pub fn identity(&self) -> CarnotPoint {
        CarnotPoint::new(vec![0.0; self.dim])
    }

    pub fn inverse(&self, p: &CarnotPoint) -> CarnotPoint {
        CarnotPoint::new(p.coords.iter().map(|c| -c).collect())
    }

    /// Bracket of coefficient vectors against the graded basis.
    pub fn bracket_vec(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for t in &self.brackets {
            let scale = u[t.left] * v[t.right] - u[t.right] * v[t.left];
            out[t.target] += t.coeff * scale;
        }
        out
    }

    fn check_point(&self, p: &CarnotPoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "point dimension {} does not match algebra dimension {}",
                p.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Group product in exponential coordinates: BCH truncated at step 3,
    /// exact for every algebra this type admits.
    pub fn bch(&self, p: &CarnotPoint, q: &CarnotPoint) -> Result<CarnotPoint> {
        self.check_point(p)?;
        self.check_point(q)?;
        let x = &p.coords;
        let y = &q.coords;
        let xy = self.bracket_vec(x, y);
        let xxy = self.bracket_vec(x, &xy);
        let yyx = self.bracket_vec(y, &self.bracket_vec(y, x));
        let coords = (0..self.dim)
            .map(|i| x[i] + y[i] + 0.5 * xy[i] + (xxy[i] + yyx[i]) / 12.0)
            .collect();
        Ok(CarnotPoint::new(coords))
    }

    /// Difference p^{-1} q, the left-invariant displacement from p to q.
    pub fn difference(&self, p: &CarnotPoint, q: &CarnotPoint) -> Result<CarnotPoint> {
        self.bch(&self.inverse(p), q)
    }

    /// Dilation automorphism: stratum i scales by t^i.
    pub fn dilate(&self, t: f64, p: &CarnotPoint) -> Result<CarnotPoint> {
        self.check_point(p)?;
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("dilation factor {t} must be positive")));
        }
        let mut coords = p.coords.clone();
        for s in 1..=self.step() {
            let factor = t.powi(s as i32);
            for i in self.stratum_range(s) {
                coords[i] *= factor;
            }
        }
        Ok(CarnotPoint::new(coords))
    }

    /// The derivative of the dilation at the identity: the same diagonal
    /// scaling applied to tangent coefficient vectors.
    pub fn dilate_tangent(&self, t: f64, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for s in 1..=self.step() {
            let factor = t.powi(s as i32);
            for i in self.stratum_range(s) {
                out[i] *= factor;
            }
        }
        out
    }

    /// Velocity pulled back to the identity by left translation:
    /// v - [u, v]/2 + [u, [u, v]]/6, the exact series through step 3.
    pub fn left_log_derivative(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let uv = self.bracket_vec(u, v);
        let uuv = self.bracket_vec(u, &uv);
        (0..self.dim).map(|i| v[i] - 0.5 * uv[i] + uuv[i] / 6.0).collect()
    }

    /// Compare the finite-difference derivative of s -> dilate(t, x exp(sX))
    /// at s = 0 with the left translate of the stratum-scaled X at
    /// dilate(t, x). Returns the relative max-norm error.
    pub fn dilation_pushforward_check(
        &self,
        t: f64,
        x: &CarnotPoint,
        tangent: &[f64],
        h: f64,
    ) -> Result<f64> {
        self.check_point(x)?;
        if tangent.len() != self.dim {
            return Err(Error::DimensionMismatch("tangent vector has wrong dimension".into()));
        }
        if tangent.iter().all(|c| c.abs() <= 1e-300) {
            return Err(Error::InvalidArgument("degenerate (zero) tangent vector".into()));
        }
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("dilation factor {t} must be positive")));
        }
        let step_pt = |s: f64| -> Result<Vec<f64>> {
            let exp_sx = CarnotPoint::new(tangent.iter().map(|c| c * s).collect());
            Ok(self.dilate(t, &self.bch(x, &exp_sx)?)?.coords)
        };
        let lhs = central_difference(&step_pt, h)?;

        let scaled = self.dilate_tangent(t, tangent);
        let base = self.dilate(t, x)?;
        let step_rhs = |s: f64| -> Result<Vec<f64>> {
            let exp_sx = CarnotPoint::new(scaled.iter().map(|c| c * s).collect());
            Ok(self.bch(&base, &exp_sx)?.coords)
        };
        let rhs = central_difference(&step_rhs, h)?;

        let diff = lhs.iter().zip(&rhs).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = rhs.iter().fold(0.0_f64, |m, c| m.max(c.abs())).max(1e-300);
        Ok(diff / scale)
    }

    /// Derive a Carnot algebra from the positive root spaces of a split
    /// family: the graded basis walks the height layers in order, and the
    /// structure constants come from the matrix brackets.
    pub fn from_root_datum(datum: &RootDatum) -> Result<(Self, Vec<RootBlockLayout>)> {
        let step = datum.step();
        let mut basis: Vec<AlgebraElement> = Vec::new();
        let mut strata_dims = vec![0usize; step];
        let mut layout = Vec::new();
        for (s, layer) in datum.grading.iter().enumerate() {
            for &root_idx in layer {
                let space = &datum.root_spaces[root_idx];
                layout.push(RootBlockLayout {
                    root_index: root_idx,
                    stratum: s + 1,
                    offset: basis.len(),
                    dims: space.len(),
                    character: datum.roots[root_idx].on_basis.clone(),
                });
                strata_dims[s] += space.len();
                basis.extend(space.iter().cloned());
            }
        }
        let dim = basis.len();
        let n = datum.tag.dim();
        let coord = nalgebra::DMatrix::from_fn(n * n, dim, |r, c| basis[c].matrix()[(r / n, r % n)]);
        let svd = coord.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let mut brackets = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                let br = basis[i].bracket(&basis[j])?;
                if br.norm_inf() <= 1e-14 {
                    continue;
                }
                let target = nalgebra::DMatrix::from_fn(n * n, 1, |r, _| br.matrix()[(r / n, r % n)]);
                let coeffs = svd
                    .solve(&target, smax * 1e-12)
                    .map_err(|e| Error::SingularInput(e.to_string()))?;
                let residual = (&coord * &coeffs - &target).amax();
                if residual > 1e-10 {
                    return Err(Error::InvariantViolation(format!(
                        "bracket of root basis ({i},{j}) leaves the nilpotent span"
                    )));
                }
                for k in 0..dim {
                    let c = coeffs[(k, 0)];
                    if c.abs() > 1e-12 {
                        brackets.push(BracketTerm { left: i, right: j, target: k, coeff: c });
                    }
                }
            }
        }
        let alg = CarnotAlgebra::new(strata_dims, brackets)?;
        Ok((alg, layout))
    }
}

/// Where a root block sits inside the graded coordinates of the derived
/// Carnot algebra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootBlockLayout {
    pub root_index: usize,
    pub stratum: usize,
    pub offset: usize,
    pub dims: usize,
    pub character: Vec<f64>,
}

fn central_difference(
    f: &dyn Fn(f64) -> Result<Vec<f64>>,
    h: f64,
) -> Result<Vec<f64>> {
    let plus = f(h)?;
    let minus = f(-h)?;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

fn rank_of(vectors: &[Vec<f64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let rows = vectors[0].len();
    let m = nalgebra::DMatrix::from_fn(rows, vectors.len(), |r, c| vectors[c][r]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|s| **s > smax * 1e-10).count()
}

fn in_span(vectors: &[Vec<f64>], x: &[f64]) -> bool {
    let base = rank_of(vectors);
    let mut with = vectors.to_vec();
    with.push(x.to_vec());
    rank_of(&with) == base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{restricted_roots, MatrixFamily};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn heis_point(x: f64, y: f64, z: f64) -> CarnotPoint {
        CarnotPoint::new(vec![x, y, z])
    }

    #[test]
    fn heisenberg_bch_closed_form() {
        let alg = CarnotAlgebra::heisenberg();
        let p = heis_point(1.0, 2.0, 3.0);
        let q = heis_point(-0.5, 4.0, 0.25);
        let prod = alg.bch(&p, &q).unwrap();
        // (x1+x2, y1+y2, z1+z2+(x1 y2 - y1 x2)/2)
        let z = 3.0 + 0.25 + (1.0 * 4.0 - 2.0 * (-0.5)) / 2.0;
        assert_eq!(prod.coords, vec![0.5, 6.0, z]);
    }

    #[test]
    fn identity_and_inverse() {
        let alg = CarnotAlgebra::heisenberg();
        let p = heis_point(0.3, -1.7, 2.2);
        let e = alg.identity();
        assert_eq!(alg.bch(&p, &e).unwrap(), p);
        assert_eq!(alg.bch(&e, &p).unwrap(), p);
        let back = alg.bch(&p, &alg.inverse(&p)).unwrap();
        assert!(back.norm_inf() <= 1e-15);
    }

    #[test]
    fn dilation_closed_form_and_laws() {
        let alg = CarnotAlgebra::heisenberg();
        let p = heis_point(1.5, -2.0, 0.7);
        let d = alg.dilate(2.0, &p).unwrap();
        assert_eq!(d.coords, vec![3.0, -4.0, 2.8]);
        assert_eq!(alg.dilate(1.0, &p).unwrap(), p);
        let ds = alg.dilate(2.0, &alg.dilate(3.0, &p).unwrap()).unwrap();
        let d6 = alg.dilate(6.0, &p).unwrap();
        assert!(ds.coords.iter().zip(&d6.coords).all(|(a, b)| (a - b).abs() <= 1e-12));
        assert!(alg.dilate(0.0, &p).is_err());
        assert!(alg.dilate(-1.0, &p).is_err());
    }

    #[test]
    fn sl3_nilpotent_part_is_heisenberg() {
        let datum = restricted_roots(MatrixFamily::Sl3).unwrap();
        let (alg, layout) = CarnotAlgebra::from_root_datum(&datum).unwrap();
        assert_eq!(alg.step(), 2);
        assert_eq!(alg.strata_dims(), &[2, 1]);
        assert_eq!(layout.len(), 3);
        assert_eq!(layout[0].character, vec![2.0, -1.0]);
        assert_eq!(layout[1].character, vec![-1.0, 2.0]);
        assert_eq!(layout[2].character, vec![1.0, 1.0]);
        // [e0, e1] = e2 with coefficient 1 (E12, E23 -> E13).
        assert_eq!(alg.brackets().len(), 1);
        let t = alg.brackets()[0];
        assert_eq!((t.left, t.right, t.target), (0, 1, 2));
        assert_abs_diff_eq!(t.coeff, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pushforward_check_behaviour() {
        let heis = CarnotAlgebra::heisenberg();
        let x = heis_point(0.4, -1.1, 0.8);
        let tangent = vec![1.0, 0.5, -0.25];
        let err = heis.dilation_pushforward_check(2.0, &x, &tangent, 1e-5).unwrap();
        assert!(err <= 1e-4, "relative error {err}");
        let err_id = heis.dilation_pushforward_check(1.0, &x, &tangent, 1e-5).unwrap();
        assert!(err_id <= 1e-12, "t = 1 is the identity map, got {err_id}");
        let flat = CarnotAlgebra::abelian(3);
        let err_flat = flat
            .dilation_pushforward_check(3.0, &heis_point(1.0, 2.0, 3.0), &tangent, 1e-5)
            .unwrap();
        assert!(err_flat <= 1e-10, "abelian dilation is linear, got {err_flat}");
        assert!(heis.dilation_pushforward_check(2.0, &x, &[0.0, 0.0, 0.0], 1e-5).is_err());
    }

    #[test]
    fn rejects_bad_structure_constants() {
        // Target in the wrong stratum.
        let bad = CarnotAlgebra::new(
            vec![2, 1],
            vec![BracketTerm { left: 0, right: 2, target: 1, coeff: 1.0 }],
        );
        assert!(bad.is_err());
        // Step above 3 unsupported.
        let deep = CarnotAlgebra::new(vec![1, 1, 1, 1], Vec::new());
        assert!(deep.is_err());
        // Second stratum not generated.
        let ungenerated = CarnotAlgebra::new(vec![1, 1], Vec::new());
        assert!(ungenerated.is_err());
    }

    proptest! {
        #[test]
        fn bch_associative(
            a in proptest::collection::vec(-3.0..3.0f64, 3),
            b in proptest::collection::vec(-3.0..3.0f64, 3),
            c in proptest::collection::vec(-3.0..3.0f64, 3),
        ) {
            let alg = CarnotAlgebra::heisenberg();
            let (p, q, r) = (CarnotPoint::new(a), CarnotPoint::new(b), CarnotPoint::new(c));
            let left = alg.bch(&alg.bch(&p, &q).unwrap(), &r).unwrap();
            let right = alg.bch(&p, &alg.bch(&q, &r).unwrap()).unwrap();
            for (x, y) in left.coords.iter().zip(&right.coords) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }

        #[test]
        fn dilation_is_a_homomorphism(
            a in proptest::collection::vec(-3.0..3.0f64, 3),
            b in proptest::collection::vec(-3.0..3.0f64, 3),
            t in 0.1..4.0f64,
        ) {
            let alg = CarnotAlgebra::heisenberg();
            let (p, q) = (CarnotPoint::new(a), CarnotPoint::new(b));
            let lhs = alg.dilate(t, &alg.bch(&p, &q).unwrap()).unwrap();
            let rhs = alg.bch(&alg.dilate(t, &p).unwrap(), &alg.dilate(t, &q).unwrap()).unwrap();
            for (x, y) in lhs.coords.iter().zip(&rhs.coords) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn bch_associative_exact_on_integers() {
        let alg = CarnotAlgebra::heisenberg();
        let pts = [heis_point(1.0, 0.0, 0.0), heis_point(0.0, 1.0, 0.0), heis_point(2.0, -1.0, 1.0)];
        for p in &pts {
            for q in &pts {
                for r in &pts {
                    let left = alg.bch(&alg.bch(p, q).unwrap(), r).unwrap();
                    let right = alg.bch(p, &alg.bch(q, r).unwrap()).unwrap();
                    assert_eq!(left.coords, right.coords);
                }
            }
        }
    }
}
