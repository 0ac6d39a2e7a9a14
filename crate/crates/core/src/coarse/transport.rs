//! Moving translation-like actions around: conjugation along a bijection
//! of windows, the action induced through a bijection of acting groups,
//! and the composite of a group acting on a group acting on a space.

use serde::Serialize;

use super::cayley::{GroupWindow, OrbitDecomposition};
use super::{FiniteMetricSpace, PointedAction};
use crate::error::{Error, Result};

/// A bijection between two windows of equal size, stored index-to-index.
#[derive(Debug, Clone)]
pub struct Bijection {
    pub forward: Vec<usize>,
    pub backward: Vec<usize>,
}

impl Bijection {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut backward = vec![usize::MAX; n];
        for (i, &j) in forward.iter().enumerate() {
            if j >= n {
                return Err(Error::NonBijective(format!("image {j} out of range")));
            }
            if backward[j] != usize::MAX {
                return Err(Error::NonBijective(format!("target {j} hit twice")));
            }
            backward[j] = i;
        }
        Ok(Bijection { forward, backward })
    }

    pub fn identity(n: usize) -> Self {
        Bijection { forward: (0..n).collect(), backward: (0..n).collect() }
    }
}

/// Measured Lipschitz data of a bijection between metric windows.
fn measured_lipschitz(f: &Bijection, source: &FiniteMetricSpace, target: &FiniteMetricSpace) -> (f64, f64) {
    let n = source.len();
    let mut lip_fwd = 0.0_f64;
    let mut lip_back = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            let ds = source.dist(i, j);
            let dt = target.dist(f.forward[i], f.forward[j]);
            if ds > 0.0 {
                lip_fwd = lip_fwd.max(dt / ds);
            }
            if dt > 0.0 {
                lip_back = lip_back.max(ds / dt);
            }
        }
    }
    (lip_fwd, lip_back)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub lip_forward: f64,
    pub lip_backward: f64,
    pub source_displacement: Vec<f64>,
    pub target_displacement: Vec<f64>,
    /// Window check of disp_Y(g) <= Lip(F) disp_X(g) per generator.
    pub displacement_bound_holds: bool,
}

/// Conjugate an action along a bijection: g . y = F(g . F^{-1}(y)).
pub fn transport_action(
    f: &Bijection,
    action: &PointedAction,
    source: &FiniteMetricSpace,
    target: &FiniteMetricSpace,
) -> Result<(PointedAction, TransportReport)> {
    if f.forward.len() != action.n_points || source.len() != action.n_points {
        return Err(Error::DimensionMismatch("bijection does not match the window".into()));
    }
    if target.len() != action.n_points {
        return Err(Error::NonBijective("target window has a different size".into()));
    }
    let n = action.n_points;
    let moves = action
        .generators
        .iter()
        .map(|g| {
            let table: Vec<Option<usize>> =
                (0..n).map(|y| g.forward[f.backward[y]].map(|x| f.forward[x])).collect();
            (g.label.clone(), table)
        })
        .collect();
    let transported = PointedAction::new(n, moves)?;

    let (lip_forward, lip_backward) = measured_lipschitz(f, source, target);
    let source_displacement = action.displacement(source);
    let target_displacement = transported.displacement(target);
    let displacement_bound_holds = source_displacement
        .iter()
        .zip(&target_displacement)
        .all(|(s, t)| *t <= lip_forward * s + 1e-9);
    Ok((
        transported,
        TransportReport {
            lip_forward,
            lip_backward,
            source_displacement,
            target_displacement,
            displacement_bound_holds,
        },
    ))
}

/// The action induced along a bijection of acting groups: with points
/// decomposed as x = rep * g, the element h moves x to
/// rep * F(F^{-1}(g) h). Moves that leave the enumerated windows stay
/// undefined.
pub fn induce_action(
    f_h_to_g: &Bijection,
    h_window: &GroupWindow,
    g_window: &GroupWindow,
    h_gens: &[(String, Vec<i64>)],
    decomp: &OrbitDecomposition,
    n_points: usize,
) -> Result<PointedAction> {
    if f_h_to_g.forward.len() != h_window.len() || h_window.len() != g_window.len() {
        return Err(Error::NonBijective(
            "group windows and bijection must have one common size".into(),
        ));
    }
    let mut moves = Vec::with_capacity(h_gens.len());
    for (label, h) in h_gens {
        if h_window.find(h).is_none() {
            return Err(Error::InvalidArgument(format!(
                "generator {h:?} lies outside the H window"
            )));
        }
        let mut table = vec![None; n_points];
        for (x, slot) in table.iter_mut().enumerate() {
            let g_idx = decomp.elem[x];
            let h_of_g = f_h_to_g.backward[g_idx];
            let moved_h = h_window.mul(&h_window.elems[h_of_g], h);
            let target = h_window
                .find(&moved_h)
                .map(|idx| f_h_to_g.forward[idx])
                .and_then(|g2| decomp.point_of(decomp.rep[x], g2));
            *slot = target;
        }
        moves.push((label.clone(), table));
    }
    PointedAction::new(n_points, moves)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComposeReport {
    /// Displacement of each H generator on the G window (word metric).
    pub h_displacement_on_g: Vec<f64>,
    /// Max displacement of a G generator on X.
    pub g_generator_displacement: f64,
    /// Product bound per H generator.
    pub bound: Vec<f64>,
    pub measured: Vec<f64>,
    pub within_bound: bool,
    /// Moves dropped because they left the window.
    pub partial_moves: usize,
}

/// Compose translation-like actions: H acts on the G window, G acts on X
/// with labelled orbits; the composite moves rep * g to rep * (h . g).
pub fn compose_translation_like(
    h_on_g: &PointedAction,
    g_space: &FiniteMetricSpace,
    decomp: &OrbitDecomposition,
    x_space: &FiniteMetricSpace,
    g_on_x: &PointedAction,
) -> Result<(PointedAction, ComposeReport)> {
    let n = x_space.len();
    if decomp.elem.len() != n {
        return Err(Error::DimensionMismatch("decomposition does not match X".into()));
    }
    if decomp.elem.iter().any(|&e| e >= h_on_g.n_points) {
        return Err(Error::DimensionMismatch(
            "the H action must be defined on the same group window as the orbit labels".into(),
        ));
    }
    let mut partial = 0usize;
    let mut moves = Vec::with_capacity(h_on_g.generators.len());
    for hg in &h_on_g.generators {
        let mut table = vec![None; n];
        for (x, slot) in table.iter_mut().enumerate() {
            match hg.forward[decomp.elem[x]] {
                Some(moved_elem) => {
                    *slot = decomp.point_of(decomp.rep[x], moved_elem);
                    if slot.is_none() {
                        partial += 1;
                    }
                }
                None => partial += 1,
            }
        }
        moves.push((hg.label.clone(), table));
    }
    let composite = PointedAction::new(n, moves)?;

    let h_displacement_on_g = h_on_g.displacement(g_space);
    let g_generator_displacement =
        g_on_x.displacement(x_space).into_iter().fold(0.0_f64, f64::max);
    let bound: Vec<f64> =
        h_displacement_on_g.iter().map(|d| d * g_generator_displacement).collect();
    let measured = composite.displacement(x_space);
    let within_bound = measured.iter().zip(&bound).all(|(m, b)| *m <= b + 1e-9);
    Ok((
        composite,
        ComposeReport {
            h_displacement_on_g,
            g_generator_displacement,
            bound,
            measured,
            within_bound,
            partial_moves: partial,
        },
    ))
}
