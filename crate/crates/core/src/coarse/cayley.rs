//! Exact Cayley windows used by the coarse toolkit: integer lattice balls
//! with the l^1 word metric, free-group balls with the tree metric, and
//! integer group windows with exact multiplication for orbit bookkeeping.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{FiniteMetricSpace, PointedAction};
use crate::error::{Error, Result};

/// All points of Z^k with |x|_1 <= radius, plus the l^1 metric on them.
pub fn z_lattice_window(k: usize, radius: i64) -> (Vec<Vec<i64>>, FiniteMetricSpace) {
    let mut points = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &points {
            let used: i64 = p.iter().map(|x: &i64| x.abs()).sum();
            for v in -(radius - used)..=(radius - used) {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points.sort();
    let pts = points.clone();
    let space = FiniteMetricSpace::from_fn(points.len(), move |i, j| {
        pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).abs()).sum::<i64>() as f64
    })
    .expect("l1 metric is valid");
    (points, space)
}

/// Reduced words of length <= radius in the free group on two generators
/// (letters 1, -1, 2, -2), plus the tree metric d(u, v) = |u| + |v| - 2c
/// where c is the longest common prefix.
pub fn free2_window(radius: usize) -> (Vec<Vec<i8>>, FiniteMetricSpace) {
    let mut words: Vec<Vec<i8>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<i8>> = vec![Vec::new()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for letter in [1i8, -1, 2, -2] {
                if w.last().copied() == Some(-letter) {
                    continue;
                }
                let mut v = w.clone();
                v.push(letter);
                next.push(v);
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    words.sort();
    let ws = words.clone();
    let space = FiniteMetricSpace::from_fn(words.len(), move |i, j| {
        let (u, v) = (&ws[i], &ws[j]);
        let common = u.iter().zip(v.iter()).take_while(|(a, b)| a == b).count();
        (u.len() + v.len() - 2 * common) as f64
    })
    .expect("tree metric is valid");
    (words, space)
}

/// Exact integer group laws used for orbit bookkeeping on windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupOp {
    /// Coordinatewise addition.
    Abelian,
    /// Integer Heisenberg triples: (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y').
    Heisenberg,
}

/// A finite window of an integer group with exact multiplication.
#[derive(Debug, Clone)]
pub struct GroupWindow {
    pub op: GroupOp,
    pub elems: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
}

impl GroupWindow {
    pub fn new(op: GroupOp, elems: Vec<Vec<i64>>) -> Result<Self> {
        if let GroupOp::Heisenberg = op {
            if elems.iter().any(|e| e.len() != 3) {
                return Err(Error::DimensionMismatch("Heisenberg elements are triples".into()));
            }
        }
        let mut index = HashMap::new();
        for (i, e) in elems.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate element {e:?}")));
            }
        }
        Ok(GroupWindow { op, elems, index })
    }

    /// The window of Z^k with |x|_1 <= radius.
    pub fn z_ball(k: usize, radius: i64) -> Self {
        let (points, _) = z_lattice_window(k, radius);
        GroupWindow::new(GroupOp::Abelian, points).expect("distinct lattice points")
    }

    /// Scale every element coordinatewise (e.g. the subgroup (2Z)^k).
    pub fn scaled(&self, factor: i64) -> Self {
        let elems = self.elems.iter().map(|e| e.iter().map(|x| x * factor).collect()).collect();
        GroupWindow::new(self.op, elems).expect("scaling preserves distinctness")
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn find(&self, e: &[i64]) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn identity(&self) -> Vec<i64> {
        vec![0; self.elems.first().map(|e| e.len()).unwrap_or(0)]
    }

    pub fn mul(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        match self.op {
            GroupOp::Abelian => a.iter().zip(b).map(|(x, y)| x + y).collect(),
            GroupOp::Heisenberg => {
                vec![a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]]
            }
        }
    }

    pub fn inv(&self, a: &[i64]) -> Vec<i64> {
        match self.op {
            GroupOp::Abelian => a.iter().map(|x| -x).collect(),
            GroupOp::Heisenberg => vec![-a[0], -a[1], -a[2] + a[0] * a[1]],
        }
    }
}

/// A free right action decomposed into orbits: every point is rep * g for
/// a unique orbit representative and group element.
#[derive(Debug, Clone)]
pub struct OrbitDecomposition {
    /// Orbit representative (point index) per point.
    pub rep: Vec<usize>,
    /// Group element index (into the group window) per point.
    pub elem: Vec<usize>,
    pub reps: Vec<usize>,
    lookup: HashMap<(usize, usize), usize>,
}

impl OrbitDecomposition {
    pub fn point_of(&self, rep: usize, elem: usize) -> Option<usize> {
        self.lookup.get(&(rep, elem)).copied()
    }
}

/// Label every point of a free partial action with the group element moving
/// its orbit representative onto it. The k-th generator move is right
/// multiplication by `gen_elems[k]`. Fails if two walks reach one point
/// with different labels (the decomposition would not be unique) or if a
/// label leaves the group window.
pub fn decompose_action(
    action: &PointedAction,
    gen_elems: &[Vec<i64>],
    group: &GroupWindow,
) -> Result<OrbitDecomposition> {
    if gen_elems.len() != action.generators.len() {
        return Err(Error::DimensionMismatch(
            "one group element per action generator is required".into(),
        ));
    }
    let n = action.n_points;
    let mut rep = vec![usize::MAX; n];
    let mut elem = vec![usize::MAX; n];
    let mut reps = Vec::new();
    let id = group
        .find(&group.identity())
        .ok_or_else(|| Error::InvalidArgument("group window must contain the identity".into()))?;

    for start in 0..n {
        if rep[start] != usize::MAX {
            continue;
        }
        reps.push(start);
        rep[start] = start;
        elem[start] = id;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            let g = group.elems[elem[p]].clone();
            for (k, ge) in gen_elems.iter().enumerate() {
                for (forward, factor) in [(true, ge.clone()), (false, group.inv(ge))] {
                    if let Some(q) = action.apply(k, forward, p) {
                        let label = group.mul(&g, &factor);
                        let label_idx = group.find(&label).ok_or_else(|| {
                            Error::InvalidArgument(format!(
                                "label {label:?} leaves the group window; enlarge it"
                            ))
                        })?;
                        if rep[q] == usize::MAX {
                            rep[q] = rep[p];
                            elem[q] = label_idx;
                            stack.push(q);
                        } else if rep[q] != rep[p] || elem[q] != label_idx {
                            return Err(Error::InvariantViolation(format!(
                                "orbit decomposition not unique at point {q}"
                            )));
                        }
                    }
                }
            }
        }
    }

    let mut lookup = HashMap::new();
    for p in 0..n {
        lookup.insert((rep[p], elem[p]), p);
    }
    Ok(OrbitDecomposition { rep, elem, reps, lookup })
}
