//! Restricted root data for the split families: roots as covectors on the
//! diagonal Cartan subspace, their root spaces, and the height grading of
//! the positive system.

use super::{cartan_generator, elementary, AlgebraElement, MatrixFamily};
use crate::error::{Error, Result};

/// A restricted root, stored by its values on the Cartan basis H_1..H_rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedRoot {
    /// (i, j) for the functional a |-> a_i - a_j on diagonal matrices.
    pub pair: (usize, usize),
    /// Values on the Cartan generators, i.e. the character vector used by
    /// the warped-metric layer.
    pub on_basis: Vec<f64>,
}

impl RestrictedRoot {
    /// Evaluate the root on an element of the Cartan subspace given by its
    /// coefficients against the Cartan basis.
    pub fn eval(&self, coeffs: &[f64]) -> f64 {
        self.on_basis.iter().zip(coeffs).map(|(r, c)| r * c).sum()
    }
}

/// Restricted roots of (g, a) with root spaces, the positive and simple
/// subsets, and the partition of the positive roots by height.
#[derive(Debug, Clone)]
pub struct RootDatum {
    pub tag: MatrixFamily,
    pub cartan_basis: Vec<AlgebraElement>,
    pub roots: Vec<RestrictedRoot>,
    pub root_spaces: Vec<Vec<AlgebraElement>>,
    /// Indices into `roots` of the positive roots.
    pub positive: Vec<usize>,
    /// Indices into `roots` of the simple roots.
    pub simple: Vec<usize>,
    /// grading[s] lists the positive roots of height s + 1; height equals
    /// the stratum index of the corresponding layer of n.
    pub grading: Vec<Vec<usize>>,
}

impl RootDatum {
    pub fn rank(&self) -> usize {
        self.cartan_basis.len()
    }

    /// Nilpotency step of n = sum of the positive root spaces.
    pub fn step(&self) -> usize {
        self.grading.len()
    }
}

/// Restricted root data for the supported split families.
///
/// For sl(n, R) the roots are e_i - e_j with root space spanned by E_ij,
/// the simple roots are e_i - e_{i+1}, and the height-s roots make up the
/// s-th layer of the grading.
pub fn restricted_roots(tag: MatrixFamily) -> Result<RootDatum> {
    let n = tag.dim();
    let rank = n - 1;
    let cartan_basis: Vec<AlgebraElement> =
        (0..rank).map(|i| cartan_generator(tag, i).expect("in range")).collect();

    let mut roots = Vec::new();
    let mut root_spaces = Vec::new();
    let mut positive = Vec::new();
    let mut simple = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // Value of e_i - e_j on H_k = E_kk - E_{k+1,k+1}.
            let on_basis: Vec<f64> = (0..rank)
                .map(|k| {
                    let mut v = 0.0;
                    if i == k {
                        v += 1.0;
                    }
                    if i == k + 1 {
                        v -= 1.0;
                    }
                    if j == k {
                        v -= 1.0;
                    }
                    if j == k + 1 {
                        v += 1.0;
                    }
                    v
                })
                .collect();
            let idx = roots.len();
            roots.push(RestrictedRoot { pair: (i, j), on_basis });
            root_spaces.push(vec![elementary(tag, i, j).expect("in range")]);
            if i < j {
                positive.push(idx);
                if j == i + 1 {
                    simple.push(idx);
                }
            }
        }
    }

    let step = n - 1;
    let mut grading = vec![Vec::new(); step];
    for &idx in &positive {
        let (i, j) = roots[idx].pair;
        grading[j - i - 1].push(idx);
    }

    let datum = RootDatum { tag, cartan_basis, roots, root_spaces, positive, simple, grading };
    verify_root_datum(&datum)?;
    Ok(datum)
}

/// Check the ad-eigenspace property, the bracket grading
/// [g_a, g_b] <= g_{a+b}, and that the simple root spaces generate n.
fn verify_root_datum(d: &RootDatum) -> Result<()> {
    const RESIDUAL_TOL: f64 = 1e-10;
    // Simultaneous ad-eigenspaces of the Cartan basis.
    for (r, space) in d.roots.iter().zip(&d.root_spaces) {
        for x in space {
            for (k, h) in d.cartan_basis.iter().enumerate() {
                let br = h.bracket(x)?;
                let expect = x.scale(r.on_basis[k]);
                let residual = (br.matrix() - expect.matrix()).amax();
                if residual > RESIDUAL_TOL {
                    return Err(Error::InvariantViolation(format!(
                        "root space of {:?} is not an ad-eigenspace (residual {residual:e})",
                        r.pair
                    )));
                }
            }
        }
    }
    // Bracket grading on positive basis pairs.
    for &ai in &d.positive {
        for &bi in &d.positive {
            let sum: Vec<f64> = d.roots[ai]
                .on_basis
                .iter()
                .zip(&d.roots[bi].on_basis)
                .map(|(x, y)| x + y)
                .collect();
            let target = d.roots.iter().position(|r| {
                r.on_basis.iter().zip(&sum).all(|(x, y)| (x - y).abs() < 1e-12)
            });
            for x in &d.root_spaces[ai] {
                for y in &d.root_spaces[bi] {
                    let br = x.bracket(y)?;
                    match target {
                        Some(t) => {
                            // Must lie in the span of g_{a+b}; with the
                            // one-dimensional spaces here, proportionality.
                            let basis = &d.root_spaces[t][0];
                            let scale = {
                                let (pi, pj) = d.roots[t].pair;
                                br.matrix()[(pi, pj)]
                            };
                            let residual = (br.matrix() - basis.scale(scale).matrix()).amax();
                            if residual > RESIDUAL_TOL {
                                return Err(Error::InvariantViolation(format!(
                                    "[g_{:?}, g_{:?}] leaves g_{:?}",
                                    d.roots[ai].pair, d.roots[bi].pair, d.roots[t].pair
                                )));
                            }
                        }
                        None => {
                            if br.norm_inf() > RESIDUAL_TOL {
                                return Err(Error::InvariantViolation(format!(
                                    "[g_{:?}, g_{:?}] is nonzero but {sum:?} is not a root",
                                    d.roots[ai].pair, d.roots[bi].pair
                                )));
                            }
                        }
                    }
                }
            }
        }
    }
    // Simple root spaces generate n: iterated brackets span all positive spaces.
    let n = d.tag.dim();
    let mut span: Vec<AlgebraElement> =
        d.simple.iter().flat_map(|&i| d.root_spaces[i].clone()).collect();
    loop {
        let mut grew = false;
        let current = span.clone();
        for x in &current {
            for y in &current {
                let br = x.bracket(y)?;
                if br.norm_inf() > RESIDUAL_TOL && !in_span(&span, &br, n) {
                    span.push(br);
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let nil_dim: usize = d.positive.iter().map(|&i| d.root_spaces[i].len()).sum();
    if rank_of(&span, n) != nil_dim {
        return Err(Error::InvariantViolation(
            "simple root spaces do not generate the nilpotent part".into(),
        ));
    }
    Ok(())
}

fn rank_of(elems: &[AlgebraElement], n: usize) -> usize {
    if elems.is_empty() {
        return 0;
    }
    let m = nalgebra::DMatrix::from_fn(n * n, elems.len(), |r, c| {
        elems[c].matrix()[(r / n, r % n)]
    });
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    svd.singular_values.iter().filter(|s| **s > smax * 1e-10).count()
}

fn in_span(elems: &[AlgebraElement], x: &AlgebraElement, n: usize) -> bool {
    let base = rank_of(elems, n);
    let mut with = elems.to_vec();
    with.push(x.clone());
    rank_of(&with, n) == base
}
