//! Coarse-geometry toolkit on finite metric windows: r-boundaries and
//! Folner ratio profiles, transport of translation-like actions along
//! bijections, induced and composite actions, and bounded-displacement
//! matchings.

pub mod cayley;
mod matching;
mod transport;

pub use cayley::{decompose_action, free2_window, z_lattice_window, GroupOp, GroupWindow, OrbitDecomposition};
pub use matching::{bounded_displacement_matching, MatchingOutcome};
pub use transport::{compose_translation_like, induce_action, transport_action, Bijection, ComposeReport, TransportReport};

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// A finite metric window: either a dense matrix or a closed-form oracle.
/// Symmetry and zero self-distance are checked at construction, exhaustive
/// for up to 500 points and sampled beyond.
#[derive(Clone)]
pub struct FiniteMetricSpace {
    n: usize,
    backend: Backend,
}

#[derive(Clone)]
enum Backend {
    Dense(Arc<Vec<f64>>),
    Oracle(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for FiniteMetricSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Dense(_) => "dense",
            Backend::Oracle(_) => "oracle",
        };
        write!(f, "FiniteMetricSpace({} points, {kind})", self.n)
    }
}

impl FiniteMetricSpace {
    pub fn from_matrix(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let space = FiniteMetricSpace { n, backend: Backend::Dense(Arc::new(entries)) };
        space.validate()?;
        Ok(space)
    }

    pub fn from_fn<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        let space = FiniteMetricSpace { n, backend: Backend::Oracle(Arc::new(f)) };
        space.validate()?;
        Ok(space)
    }

    /// Euclidean metric on a list of coordinate points.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        let pts = Arc::new(points);
        let f = move |i: usize, j: usize| -> f64 {
            pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        FiniteMetricSpace::from_fn(n, f)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            let d = self.dist(i, i);
            if d != 0.0 {
                return Err(Error::InvariantViolation(format!("d({i},{i}) = {d} is not zero")));
            }
        }
        let check_pair = |i: usize, j: usize| -> Result<()> {
            let a = self.dist(i, j);
            let b = self.dist(j, i);
            if a < 0.0 || b < 0.0 || (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::InvariantViolation(format!(
                    "distance not symmetric/nonnegative on ({i},{j}): {a} vs {b}"
                )));
            }
            Ok(())
        };
        if self.n <= 500 {
            for i in 0..self.n {
                for j in i + 1..self.n {
                    check_pair(i, j)?;
                }
            }
        } else {
            let mut state = 0x9e3779b97f4a7c15_u64;
            for _ in 0..10_000 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let i = (state % self.n as u64) as usize;
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let j = (state % self.n as u64) as usize;
                if i != j {
                    check_pair(i, j)?;
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.backend {
            Backend::Dense(m) => m[i * self.n + j],
            Backend::Oracle(f) => f(i, j),
        }
    }
}

/// A finitely generated group acting partially on a window: per generator,
/// a partial injective move with its inverse derived automatically.
#[derive(Debug, Clone)]
pub struct ActionGenerator {
    pub label: String,
    pub forward: Vec<Option<usize>>,
    pub backward: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct PointedAction {
    pub n_points: usize,
    pub generators: Vec<ActionGenerator>,
}

impl PointedAction {
    /// Build from forward moves; each generator must act injectively where
    /// defined. The backward map is the inverse partial map.
    pub fn new(n_points: usize, moves: Vec<(String, Vec<Option<usize>>)>) -> Result<Self> {
        let mut generators = Vec::with_capacity(moves.len());
        for (label, forward) in moves {
            if forward.len() != n_points {
                return Err(Error::DimensionMismatch(format!(
                    "generator {label}: move table length {} != {n_points}",
                    forward.len()
                )));
            }
            let mut backward = vec![None; n_points];
            for (p, &target) in forward.iter().enumerate() {
                if let Some(q) = target {
                    if q >= n_points {
                        return Err(Error::InvalidArgument(format!(
                            "generator {label}: move {p} -> {q} out of range"
                        )));
                    }
                    if backward[q].is_some() {
                        return Err(Error::InvariantViolation(format!(
                            "generator {label} is not injective at target {q}"
                        )));
                    }
                    backward[q] = Some(p);
                }
            }
            generators.push(ActionGenerator { label, forward, backward });
        }
        Ok(PointedAction { n_points, generators })
    }

    pub fn apply(&self, gen: usize, forward: bool, p: usize) -> Option<usize> {
        let g = &self.generators[gen];
        if forward {
            g.forward[p]
        } else {
            g.backward[p]
        }
    }

    /// Max displacement of each generator where defined.
    pub fn displacement(&self, space: &FiniteMetricSpace) -> Vec<f64> {
        self.generators
            .iter()
            .map(|g| {
                g.forward
                    .iter()
                    .enumerate()
                    .filter_map(|(p, t)| t.map(|q| space.dist(p, q)))
                    .fold(0.0_f64, f64::max)
            })
            .collect()
    }

    /// Points fixed by some generator (a free action has none).
    pub fn fixed_points(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, g) in self.generators.iter().enumerate() {
            for (p, t) in g.forward.iter().enumerate() {
                if *t == Some(p) {
                    out.push((k, p));
                }
            }
        }
        out
    }
}

/// The r-boundary of F in X: points outside F within distance r of F.
pub fn r_boundary(space: &FiniteMetricSpace, subset: &[usize], r: f64) -> Vec<usize> {
    let inside: HashSet<usize> = subset.iter().copied().collect();
    let mut out = Vec::new();
    for x in 0..space.len() {
        if inside.contains(&x) {
            continue;
        }
        if subset.iter().any(|&y| space.dist(x, y) <= r) {
            out.push(x);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FolnerVerdict {
    AmenableConsistent,
    NonamenableConsistent,
    Inconclusive,
}

impl std::fmt::Display for FolnerVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FolnerVerdict::AmenableConsistent => "amenable-consistent",
            FolnerVerdict::NonamenableConsistent => "nonamenable-consistent",
            FolnerVerdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FolnerRow {
    pub size: usize,
    pub boundary: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FolnerProfile {
    pub rows: Vec<FolnerRow>,
    /// A heuristic label on a finite window, never a theorem.
    pub verdict: FolnerVerdict,
}

/// Boundary-to-size ratios of a nested sequence of nonempty sets.
pub fn folner_profile(
    space: &FiniteMetricSpace,
    sets: &[Vec<usize>],
    r: f64,
) -> Result<FolnerProfile> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument("need at least one set".into()));
    }
    for (k, s) in sets.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::InvalidArgument(format!("set {k} is empty")));
        }
        if k + 1 < sets.len() {
            let next: HashSet<usize> = sets[k + 1].iter().copied().collect();
            if !s.iter().all(|x| next.contains(x)) {
                return Err(Error::InvalidArgument(format!("set {k} is not contained in set {}", k + 1)));
            }
        }
    }
    let rows: Vec<FolnerRow> = sets
        .iter()
        .map(|s| {
            let boundary = r_boundary(space, s, r).len();
            FolnerRow { size: s.len(), boundary, ratio: boundary as f64 / s.len() as f64 }
        })
        .collect();

    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let strictly_decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let last = *ratios.last().expect("nonempty");
    let half = &ratios[ratios.len() / 2..];
    let verdict = if strictly_decreasing && last < 0.1 {
        FolnerVerdict::AmenableConsistent
    } else if half.iter().all(|&x| x >= 0.5) {
        FolnerVerdict::NonamenableConsistent
    } else {
        FolnerVerdict::Inconclusive
    };
    Ok(FolnerProfile { rows, verdict })
}
