//! The geometric quotient of a window by a translation-like action: orbit
//! partition via union-find over generator moves, chain costs, the
//! shortest-path quotient metric on orbit classes, metric-axiom checks and
//! bi-Lipschitz comparisons between quotients.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::carnot::CarnotPoint;
use crate::coarse::{FiniteMetricSpace, PointedAction};
use crate::error::{Error, Result};
use crate::net::NetWindow;

/// Orbit partition of a window under a partial action.
#[derive(Debug, Clone)]
pub struct Partition {
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    /// A class is truncated when one of its points has an undefined
    /// generator move (the orbit continues outside the window).
    pub truncated: Vec<bool>,
}

/// Union-find closure of the generator moves.
pub fn orbit_classes(action: &PointedAction) -> Partition {
    let n = action.n_points;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in &action.generators {
        for (p, t) in g.forward.iter().enumerate() {
            if let Some(q) = *t {
                let (a, b) = (find(&mut parent, p), find(&mut parent, q));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut ids: Vec<Option<usize>> = vec![None; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of = vec![0usize; n];
    for p in 0..n {
        let root = find(&mut parent, p);
        let id = *ids[root].get_or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        class_of[p] = id;
        classes[id].push(p);
    }
    let mut truncated = vec![false; classes.len()];
    for g in &action.generators {
        for p in 0..n {
            if g.forward[p].is_none() || g.backward[p].is_none() {
                truncated[class_of[p]] = true;
            }
        }
    }
    Partition { class_of, classes, truncated }
}

/// A chain: steps (x_i, y_i) whose consecutive linkage y_i -> x_{i+1} is
/// witnessed by a word in the acting generators.
#[derive(Debug, Clone)]
pub struct Chain {
    pub steps: Vec<(usize, usize)>,
    /// witnesses[i] moves y_i onto x_{i+1}; one fewer than steps.
    pub witnesses: Vec<Vec<(usize, bool)>>,
}

impl Chain {
    /// Verify every witness by applying it: index equality on the window.
    pub fn verify(&self, action: &PointedAction) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidArgument("empty chain".into()));
        }
        if self.witnesses.len() + 1 != self.steps.len() {
            return Err(Error::BrokenChain(0));
        }
        for (i, word) in self.witnesses.iter().enumerate() {
            let mut p = self.steps[i].1;
            for &(gen, forward) in word {
                p = action
                    .apply(gen, forward, p)
                    .ok_or(Error::BrokenChain(i))?;
            }
            if p != self.steps[i + 1].0 {
                return Err(Error::BrokenChain(i));
            }
        }
        Ok(())
    }
}

/// Breadth-first witness word moving `from` onto `to` inside one orbit.
pub fn witness_word(action: &PointedAction, from: usize, to: usize) -> Option<Vec<(usize, bool)>> {
    if from == to {
        return Some(Vec::new());
    }
    let n = action.n_points;
    let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; n];
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = vec![false; n];
    seen[from] = true;
    while let Some(p) = queue.pop_front() {
        for (k, _) in action.generators.iter().enumerate() {
            for forward in [true, false] {
                if let Some(q) = action.apply(k, forward, p) {
                    if !seen[q] {
                        seen[q] = true;
                        prev[q] = Some((p, k, forward));
                        if q == to {
                            let mut word = Vec::new();
                            let mut cur = to;
                            while cur != from {
                                let (p0, k0, f0) = prev[cur].expect("tracked");
                                word.push((k0, f0));
                                cur = p0;
                            }
                            word.reverse();
                            return Some(word);
                        }
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    None
}

/// Cost of a verified chain: the sum of the step distances.
pub fn chain_cost(space: &FiniteMetricSpace, action: &PointedAction, chain: &Chain) -> Result<f64> {
    chain.verify(action)?;
    Ok(chain.steps.iter().map(|&(x, y)| space.dist(x, y)).sum())
}

/// A quotient window: the orbit partition together with the weighted class
/// graph (edge weight = min cross-pair base distance) whose shortest paths
/// realize the window-restricted chain infimum.
#[derive(Debug, Clone)]
pub struct QuotientWindow {
    pub space: FiniteMetricSpace,
    pub partition: Partition,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl QuotientWindow {
    pub fn new(space: FiniteMetricSpace, action: &PointedAction) -> Result<Self> {
        if space.len() != action.n_points {
            return Err(Error::DimensionMismatch("action does not match the window".into()));
        }
        let partition = orbit_classes(action);
        let k = partition.classes.len();
        let mut weight = vec![f64::INFINITY; k * k];
        for i in 0..space.len() {
            for j in i + 1..space.len() {
                let (ci, cj) = (partition.class_of[i], partition.class_of[j]);
                if ci == cj {
                    continue;
                }
                let d = space.dist(i, j);
                let w = &mut weight[ci * k + cj];
                if d < *w {
                    *w = d;
                    weight[cj * k + ci] = d;
                }
            }
        }
        let adjacency = (0..k)
            .map(|ci| {
                (0..k)
                    .filter(|&cj| cj != ci && weight[ci * k + cj].is_finite())
                    .map(|cj| (cj, weight[ci * k + cj]))
                    .collect()
            })
            .collect();
        Ok(QuotientWindow { space, partition, adjacency })
    }

    pub fn num_classes(&self) -> usize {
        self.partition.classes.len()
    }

    /// Quotient distances from one class to all classes (Dijkstra).
    /// `None` marks classes unreachable by window-supported chains.
    pub fn distances_from(&self, class: usize) -> Vec<Option<f64>> {
        let k = self.num_classes();
        let mut dist = vec![f64::INFINITY; k];
        dist[class] = 0.0;
        let mut heap = BinaryHeap::from([HeapItem { cost: 0.0, node: class }]);
        while let Some(HeapItem { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, w) in &self.adjacency[node] {
                let cand = cost + w;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(HeapItem { cost: cand, node: next });
                }
            }
        }
        dist.into_iter().map(|d| d.is_finite().then_some(d)).collect()
    }

    /// Quotient distance between two classes; `Disconnected` when no chain
    /// inside the window joins them.
    pub fn distance(&self, cx: usize, cy: usize) -> Result<f64> {
        self.distances_from(cx)[cy].ok_or(Error::Disconnected(cx, cy))
    }

    pub fn distance_matrix(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.num_classes()).map(|c| self.distances_from(c)).collect()
    }

    /// Exhaustive symmetry, positivity and triangle checks on the class
    /// distance matrix.
    pub fn metric_axiom_check(&self) -> AxiomReport {
        let k = self.num_classes();
        let m = self.distance_matrix();
        let mut symmetric = true;
        let mut positive = true;
        let mut min_off = f64::INFINITY;
        let mut unreachable = 0usize;
        for i in 0..k {
            for j in 0..k {
                match (m[i][j], m[j][i]) {
                    (Some(a), Some(b)) => {
                        if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                            symmetric = false;
                        }
                        if i != j {
                            min_off = min_off.min(a);
                            if a <= 0.0 {
                                positive = false;
                            }
                        }
                    }
                    (None, None) => {
                        if i != j {
                            unreachable += 1;
                        }
                    }
                    _ => symmetric = false,
                }
            }
        }
        let mut triangle_ok = true;
        let mut max_violation = 0.0_f64;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    if let (Some(dij), Some(djl), Some(dil)) = (m[i][j], m[j][l], m[i][l]) {
                        let violation = dil - (dij + djl);
                        if violation > 1e-12 * (1.0 + dil.abs()) {
                            triangle_ok = false;
                        }
                        max_violation = max_violation.max(violation);
                    }
                }
            }
        }
        AxiomReport {
            classes: k,
            symmetric,
            positive,
            min_off_diagonal: if min_off.is_finite() { Some(min_off) } else { None },
            triangle_ok,
            max_triangle_violation: max_violation,
            unreachable_pairs: unreachable / 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap with deterministic tie-break on node index.
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("finite costs")
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub classes: usize,
    pub symmetric: bool,
    pub positive: bool,
    pub min_off_diagonal: Option<f64>,
    pub triangle_ok: bool,
    pub max_triangle_violation: f64,
    pub unreachable_pairs: usize,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.symmetric && self.positive && self.triangle_ok
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BilipReport {
    pub l_lower: f64,
    pub l_upper: f64,
    pub pairs_compared: usize,
    pub skipped: usize,
}

/// Compare two quotients along a class bijection: the min and max of
/// d2(F(i), F(j)) / d1(i, j) over reachable class pairs.
pub fn quotient_bilip_compare(
    q1: &QuotientWindow,
    q2: &QuotientWindow,
    correspondence: &[usize],
) -> Result<BilipReport> {
    let k = q1.num_classes();
    if correspondence.len() != k || q2.num_classes() != k {
        return Err(Error::NonBijective("class counts differ".into()));
    }
    let mut seen = vec![false; k];
    for &c in correspondence {
        if c >= k || seen[c] {
            return Err(Error::NonBijective(format!("class {c} repeated or out of range")));
        }
        seen[c] = true;
    }
    let m1 = q1.distance_matrix();
    let m2 = q2.distance_matrix();
    let mut l_lower = f64::INFINITY;
    let mut l_upper: f64 = 0.0;
    let mut pairs = 0usize;
    let mut skipped = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            match (m1[i][j], m2[correspondence[i]][correspondence[j]]) {
                (Some(d1), Some(d2)) if d1 > 0.0 => {
                    let ratio = d2 / d1;
                    l_lower = l_lower.min(ratio);
                    l_upper = l_upper.max(ratio);
                    pairs += 1;
                }
                _ => skipped += 1,
            }
        }
    }
    if pairs == 0 {
        return Err(Error::InvalidArgument("no comparable class pairs".into()));
    }
    Ok(BilipReport { l_lower, l_upper, pairs_compared: pairs, skipped })
}

/// Build the quotient data of a net window under its lattice action: the
/// ambient metric space on the net points, the partial action of the given
/// lattice generators, and the quotient window.
pub fn net_quotient(
    window: &NetWindow,
    gens: &[CarnotPoint],
) -> Result<(FiniteMetricSpace, PointedAction, QuotientWindow)> {
    let n = window.len();
    let matrix = window.ambient_matrix()?;
    let space = FiniteMetricSpace::from_matrix(n, matrix)?;
    let alg = window.model.metric.algebra();
    let mut moves = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        let mut table = vec![None; n];
        for (p_idx, slot) in table.iter_mut().enumerate() {
            let p = &window.points[p_idx];
            let moved = alg.bch(&p.g, &alg.inverse(g))?;
            *slot = window.find(&p.a, &moved);
        }
        moves.push((format!("g{k}"), table));
    }
    let action = PointedAction::new(n, moves)?;
    let quotient = QuotientWindow::new(space.clone(), &action)?;
    Ok((space, action, quotient))
}

/// Checks that a net-window action together with its quotient behaves as a
/// finite stand-in for the flat-factor model: orbits stay inside leaves,
/// the class map onto the integer flat positions is bi-Lipschitz on
/// untruncated classes, and within-orbit ambient distances track ln d0
/// inside the supplied distortion envelope.
pub fn coarse_model_check(
    window: &NetWindow,
    quotient: &QuotientWindow,
    envelope: Option<(f64, f64)>,
) -> Result<CoarseModelReport> {
    let partition = &quotient.partition;
    let mut leaf_preserving = true;
    for class in &partition.classes {
        let a0 = &window.points[class[0]].a;
        if class.iter().any(|&p| &window.points[p].a != a0) {
            leaf_preserving = false;
        }
    }

    // Class map [p] -> a. Truncation does not bias these distances: the
    // class-graph edges are minima of geometric cross-pair distances, which
    // window growth can only decrease; the truncated flags stay reported.
    let k = partition.classes.len();
    let class_a: Vec<&Vec<i64>> = partition.classes.iter().map(|c| &window.points[c[0]].a).collect();
    let m = quotient.distance_matrix();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut compared = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            let flat: f64 = class_a[i]
                .iter()
                .zip(class_a[j])
                .map(|(x, y)| ((x - y) as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            if flat == 0.0 {
                continue;
            }
            if let Some(dq) = m[i][j] {
                let ratio = dq / flat;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                compared += 1;
            }
        }
    }
    let rank_zero_image = class_a.iter().all(|a| *a == class_a[0]);
    let class_map_constants = (compared > 0).then_some((lo, hi));

    // Orbit coarse-embedding: within-orbit pairs, ambient vs ln d0.
    let alg = window.model.metric.algebra();
    let zero = vec![0.0; window.model.rank()];
    let base_metric = window.model.metric.leaf_metric_at(&zero)?;
    let opts = crate::pathopt::OptimizeOptions::fast();
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi: f64 = 0.0;
    let mut orbit_pairs = 0usize;
    'outer: for class in &partition.classes {
        for (ii, &p_idx) in class.iter().enumerate() {
            for &q_idx in class.iter().skip(ii + 1) {
                let p = &window.points[p_idx];
                let q = &window.points[q_idx];
                let diff = alg.difference(&p.g, &q.g)?;
                let d0 = crate::carnot::distance_d0(alg, &base_metric, &alg.identity(), &diff, &opts)?;
                if d0.lower <= std::f64::consts::E {
                    continue;
                }
                let ambient = window
                    .model
                    .metric
                    .distance(&p.embedded, &q.embedded, &opts)?;
                let ratio = ambient.estimate() / d0.estimate().ln();
                ratio_lo = ratio_lo.min(ratio);
                ratio_hi = ratio_hi.max(ratio);
                orbit_pairs += 1;
                if orbit_pairs >= 64 {
                    break 'outer;
                }
            }
        }
    }
    let orbit_ratio_range = (orbit_pairs > 0).then_some((ratio_lo, ratio_hi));
    let within_envelope = match (envelope, orbit_ratio_range) {
        (Some((c1, c2)), Some((r1, r2))) => Some(r1 >= c1 * 0.8 && r2 <= c2 * 1.25),
        _ => None,
    };

    Ok(CoarseModelReport {
        leaf_preserving,
        rank_zero_image,
        class_map_constants,
        orbit_ratio_range,
        within_envelope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseModelReport {
    pub leaf_preserving: bool,
    pub rank_zero_image: bool,
    /// (min, max) of quotient distance / |delta a| over untruncated class
    /// pairs with distinct flat positions.
    pub class_map_constants: Option<(f64, f64)>,
    /// (min, max) of ambient / ln d0 over sampled within-orbit pairs.
    pub orbit_ratio_range: Option<(f64, f64)>,
    pub within_envelope: Option<bool>,
}
