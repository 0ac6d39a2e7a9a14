//! Matrix Lie algebra and Lie group primitives for the split real families
//! sl(n, R), n = 2, 3: brackets, the Killing form, Cartan data, restricted
//! roots and the KAN factorization.

mod iwasawa;
mod roots;

pub use iwasawa::{iwasawa_decompose, IwasawaFactors};
pub use roots::{restricted_roots, RestrictedRoot, RootDatum};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on matrix entries used by default throughout.
pub const ENTRY_TOL: f64 = 1e-9;
/// Trace tolerance enforced on algebra elements at construction.
pub const TRACE_TOL: f64 = 1e-12;

/// The matrix families instantiated by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixFamily {
    Sl2,
    Sl3,
}

impl MatrixFamily {
    pub fn dim(self) -> usize {
        match self {
            MatrixFamily::Sl2 => 2,
            MatrixFamily::Sl3 => 3,
        }
    }

    /// Dimension of the algebra as a vector space (n^2 - 1).
    pub fn algebra_dim(self) -> usize {
        let n = self.dim();
        n * n - 1
    }

    pub fn algebra_name(self) -> &'static str {
        match self {
            MatrixFamily::Sl2 => "sl(2,R)",
            MatrixFamily::Sl3 => "sl(3,R)",
        }
    }

    pub fn group_name(self) -> &'static str {
        match self {
            MatrixFamily::Sl2 => "SL(2,R)",
            MatrixFamily::Sl3 => "SL(3,R)",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    tag: MatrixFamily,
    entries: Vec<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("matrix rows must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A traceless n x n matrix tagged with its ambient algebra.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct AlgebraElement {
    tag: MatrixFamily,
    m: DMatrix<f64>,
}

impl TryFrom<MatrixJson> for AlgebraElement {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        AlgebraElement::new(j.tag, matrix_from_rows(&j.entries)?)
    }
}

impl From<AlgebraElement> for MatrixJson {
    fn from(x: AlgebraElement) -> Self {
        MatrixJson { tag: x.tag, entries: rows_of(&x.m) }
    }
}

impl AlgebraElement {
    pub fn new(tag: MatrixFamily, m: DMatrix<f64>) -> Result<Self> {
        let n = tag.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} expects {n}x{n} matrices, got {}x{}",
                tag.algebra_name(),
                m.nrows(),
                m.ncols()
            )));
        }
        let tr = m.trace();
        if tr.abs() > TRACE_TOL {
            return Err(Error::InvariantViolation(format!(
                "trace {tr:e} exceeds {TRACE_TOL:e} for {}",
                tag.algebra_name()
            )));
        }
        Ok(AlgebraElement { tag, m })
    }

    pub fn zero(tag: MatrixFamily) -> Self {
        let n = tag.dim();
        AlgebraElement { tag, m: DMatrix::zeros(n, n) }
    }

    pub fn tag(&self) -> MatrixFamily {
        self.tag
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn scale(&self, c: f64) -> Self {
        AlgebraElement { tag: self.tag, m: &self.m * c }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(AlgebraElement { tag: self.tag, m: &self.m + &other.m })
    }

    pub fn norm_inf(&self) -> f64 {
        self.m.amax()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::TagMismatch(format!(
                "{} vs {}",
                self.tag.algebra_name(),
                other.tag.algebra_name()
            )));
        }
        Ok(())
    }

    /// Lie bracket XY - YX.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = &self.m * &other.m - &other.m * &self.m;
        Ok(AlgebraElement { tag: self.tag, m })
    }

    /// The Cartan involution X -> -X^T of the split real form.
    pub fn cartan_involution(&self) -> Self {
        AlgebraElement { tag: self.tag, m: -self.m.transpose() }
    }

    /// Split into the +1 and -1 eigenspaces of the Cartan involution:
    /// the antisymmetric part (compact factor) and the symmetric part.
    pub fn cartan_decompose(&self) -> (Self, Self) {
        let theta = self.cartan_involution();
        let k = AlgebraElement { tag: self.tag, m: (&self.m + &theta.m) * 0.5 };
        let p = AlgebraElement { tag: self.tag, m: (&self.m - &theta.m) * 0.5 };
        (k, p)
    }
}

/// An n x n matrix of determinant one tagged with its group.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct GroupElement {
    tag: MatrixFamily,
    m: DMatrix<f64>,
}

impl TryFrom<MatrixJson> for GroupElement {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        GroupElement::new(j.tag, matrix_from_rows(&j.entries)?)
    }
}

impl From<GroupElement> for MatrixJson {
    fn from(g: GroupElement) -> Self {
        MatrixJson { tag: g.tag, entries: rows_of(&g.m) }
    }
}

impl GroupElement {
    pub fn new(tag: MatrixFamily, m: DMatrix<f64>) -> Result<Self> {
        let n = tag.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} expects {n}x{n} matrices, got {}x{}",
                tag.group_name(),
                m.nrows(),
                m.ncols()
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ENTRY_TOL {
            return Err(Error::InvariantViolation(format!(
                "det {det} is not 1 within {ENTRY_TOL:e} for {}",
                tag.group_name()
            )));
        }
        Ok(GroupElement { tag, m })
    }

    pub fn identity(tag: MatrixFamily) -> Self {
        GroupElement { tag, m: DMatrix::identity(tag.dim(), tag.dim()) }
    }

    pub fn tag(&self) -> MatrixFamily {
        self.tag
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag {
            return Err(Error::TagMismatch(format!(
                "{} vs {}",
                self.tag.group_name(),
                other.tag.group_name()
            )));
        }
        Ok(GroupElement { tag: self.tag, m: &self.m * &other.m })
    }
}

/// Matrix exponential, mapping algebra elements into the group.
pub fn exp_matrix(x: &AlgebraElement) -> GroupElement {
    // exp of a traceless matrix has determinant one; nalgebra uses
    // scaling-and-squaring with a Pade core.
    GroupElement { tag: x.tag, m: x.m.exp() }
}

/// Logarithm of a unit upper triangular matrix via the finite nilpotent
/// series log(I + N) = N - N^2/2 + ... which terminates at the matrix size.
pub fn log_unipotent(g: &GroupElement) -> Result<AlgebraElement> {
    let n = g.tag.dim();
    for i in 0..n {
        if (g.m[(i, i)] - 1.0).abs() > ENTRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry ({i},{i}) = {} is not 1; input is not unipotent",
                g.m[(i, i)]
            )));
        }
        for j in 0..i {
            if g.m[(i, j)].abs() > ENTRY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i},{j}) = {} below the diagonal; input is not unipotent",
                    g.m[(i, j)]
                )));
            }
        }
    }
    let nil = &g.m - DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::zeros(n, n);
    let mut power = nil.clone();
    for k in 1..n {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += &power * (sign / k as f64);
        power = &power * &nil;
    }
    AlgebraElement::new(g.tag, acc)
}

/// The matrix of ad_X in the given basis of the algebra.
///
/// Fails if the basis is rank-deficient or if some bracket leaves its span.
pub fn ad_matrix(x: &AlgebraElement, basis: &[AlgebraElement]) -> Result<DMatrix<f64>> {
    let d = basis.len();
    if d == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    let n = x.tag.dim();
    let coord = DMatrix::from_fn(n * n, d, |r, c| basis[c].m[(r / n, r % n)]);
    let svd = coord.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > smax * 1e-12).count();
    if rank < d {
        return Err(Error::SingularInput(format!(
            "basis is linearly dependent (rank {rank} < {d})"
        )));
    }
    let mut ad = DMatrix::zeros(d, d);
    for j in 0..d {
        let br = x.bracket(&basis[j])?;
        let target = DMatrix::from_fn(n * n, 1, |r, _| br.m[(r / n, r % n)]);
        let coeffs = svd
            .solve(&target, smax * 1e-12)
            .map_err(|e| Error::SingularInput(e.to_string()))?;
        let residual = (&coord * &coeffs - &target).amax();
        if residual > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "bracket of basis element {j} leaves the span (residual {residual:e})"
            )));
        }
        for i in 0..d {
            ad[(i, j)] = coeffs[(i, 0)];
        }
    }
    Ok(ad)
}

/// Killing form B(X, Y) = Tr(ad_X ad_Y) computed in the given basis.
pub fn killing_form(x: &AlgebraElement, y: &AlgebraElement, basis: &[AlgebraElement]) -> Result<f64> {
    let ad_x = ad_matrix(x, basis)?;
    let ad_y = ad_matrix(y, basis)?;
    Ok((ad_x * ad_y).trace())
}

/// B_theta(X, Y) = -B(X, theta(Y)), the positive definite form induced by
/// the Cartan involution.
pub fn cartan_killing_metric(
    x: &AlgebraElement,
    y: &AlgebraElement,
    basis: &[AlgebraElement],
) -> Result<f64> {
    let theta_y = y.cartan_involution();
    Ok(-killing_form(x, &theta_y, basis)?)
}

/// Elementary matrix E_ij as an algebra element (i != j keeps it traceless).
pub fn elementary(tag: MatrixFamily, i: usize, j: usize) -> Result<AlgebraElement> {
    if i == j {
        return Err(Error::InvalidArgument("E_ii is not traceless".into()));
    }
    let n = tag.dim();
    if i >= n || j >= n {
        return Err(Error::DimensionMismatch(format!("index ({i},{j}) out of range for n={n}")));
    }
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    AlgebraElement::new(tag, m)
}

/// Diagonal Cartan generator H_i = E_ii - E_{i+1,i+1}.
pub fn cartan_generator(tag: MatrixFamily, i: usize) -> Result<AlgebraElement> {
    let n = tag.dim();
    if i + 1 >= n {
        return Err(Error::DimensionMismatch(format!("H_{i} out of range for n={n}")));
    }
    let mut m = DMatrix::zeros(n, n);
    m[(i, i)] = 1.0;
    m[(i + 1, i + 1)] = -1.0;
    AlgebraElement::new(tag, m)
}

/// The standard basis {E_ij : i != j} followed by {H_i}.
pub fn standard_basis(tag: MatrixFamily) -> Vec<AlgebraElement> {
    let n = tag.dim();
    let mut basis = Vec::with_capacity(tag.algebra_dim());
    for i in 0..n {
        for j in 0..n {
            if i != j {
                basis.push(elementary(tag, i, j).expect("valid index"));
            }
        }
    }
    for i in 0..n - 1 {
        basis.push(cartan_generator(tag, i).expect("valid index"));
    }
    basis
}
