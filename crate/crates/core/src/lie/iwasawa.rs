//! KAN factorization of determinant-one matrices: orthogonal times positive
//! diagonal times unit upper triangular, via Gram-Schmidt on columns with
//! sign-normalized (positive) diagonal.

use nalgebra::DMatrix;

use super::{GroupElement, ENTRY_TOL};
use crate::error::{Error, Result};

/// Condition-number cutoff beyond which inputs are rejected as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Factors of g = k a n with k special orthogonal, a positive diagonal and
/// n unit upper triangular.
#[derive(Debug, Clone)]
pub struct IwasawaFactors {
    pub k: GroupElement,
    pub a: GroupElement,
    pub n: GroupElement,
}

impl IwasawaFactors {
    /// Max-norm residual of the reconstruction k a n against the input.
    pub fn reconstruction_residual(&self, g: &GroupElement) -> f64 {
        let prod = self.k.matrix() * self.a.matrix() * self.n.matrix();
        (prod - g.matrix()).amax()
    }

    /// Max-norm defect of k^T k from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let k = self.k.matrix();
        let n = k.nrows();
        (k.transpose() * k - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Factor g into k a n.
///
/// Gram-Schmidt (run twice for orthogonality) on the columns of g yields
/// g = QR with positive diagonal R; then k = Q, a = diag(R), n = a^{-1} R.
/// Positivity of the diagonal puts k in SO(n) since det g = 1.
pub fn iwasawa_decompose(g: &GroupElement) -> Result<IwasawaFactors> {
    let m = g.matrix();
    let n = m.nrows();

    let sv = m.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= 0.0 || smax / smin > CONDITION_LIMIT {
        return Err(Error::SingularInput(format!(
            "condition number {:.3e} exceeds {CONDITION_LIMIT:.0e}",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }

    let mut q = m.clone();
    let mut r = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        // Two orthogonalization passes keep k^T k - I near round-off.
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                r[(i, j)] += proj;
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let norm = q.column(j).norm();
        if norm < 1e-300 {
            return Err(Error::SingularInput(format!("column {j} collapsed during Gram-Schmidt")));
        }
        r[(j, j)] = norm;
        q.column_mut(j).scale_mut(1.0 / norm);
    }

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut unit = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        a[(i, i)] = r[(i, i)];
        for j in i + 1..n {
            unit[(i, j)] = r[(i, j)] / r[(i, i)];
        }
    }

    let det_a: f64 = (0..n).map(|i| a[(i, i)]).product();
    let factors = IwasawaFactors {
        k: GroupElement::new(g.tag(), q)?,
        a: GroupElement::new(g.tag(), a.clone() / det_a.powf(1.0 / n as f64))?,
        n: GroupElement::new(g.tag(), unit)?,
    };
    // det g = 1 and det k = +1 force det a = 1; the normalization above only
    // absorbs round-off, so re-scale back exactly if it drifted.
    let factors = if (det_a - 1.0).abs() <= ENTRY_TOL {
        IwasawaFactors { a: GroupElement::new(g.tag(), a)?, ..factors }
    } else {
        factors
    };
    Ok(factors)
}
