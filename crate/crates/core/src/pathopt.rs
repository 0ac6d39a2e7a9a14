//! Polyline length functionals: composite Simpson quadrature of a
//! position/velocity speed integrand and a derivative-free coordinate
//! descent over interior nodes with dyadic refinement.

/// A length functional on polylines in R^dim. `speed(pos, vel)` evaluates
/// the instantaneous metric speed of a curve through `pos` with coordinate
/// velocity `vel`.
pub struct PathFunctional<'a> {
    pub dim: usize,
    pub speed: &'a (dyn Fn(&[f64], &[f64]) -> f64 + Sync),
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    /// Simpson panels per segment (must be even).
    pub panels: usize,
    /// Stop refining when a whole level improves less than this, relatively.
    pub rel_tol: f64,
    /// Dyadic refinement levels.
    pub max_levels: usize,
    /// Coordinate-descent sweeps per level.
    pub max_sweeps: usize,
    /// Hard cap on the node count.
    pub max_nodes: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { panels: 8, rel_tol: 1e-4, max_levels: 10, max_sweeps: 12, max_nodes: 129 }
    }
}

impl OptimizeOptions {
    /// Cheaper settings for bulk window profiling.
    pub fn fast() -> Self {
        OptimizeOptions { panels: 6, rel_tol: 1e-3, max_levels: 5, max_sweeps: 6, max_nodes: 33 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedPath {
    pub length: f64,
    pub nodes: Vec<Vec<f64>>,
    pub converged: bool,
    pub levels_used: usize,
}

impl<'a> PathFunctional<'a> {
    /// Length of the straight segment from `a` to `b`.
    pub fn segment_length(&self, a: &[f64], b: &[f64], panels: usize) -> f64 {
        debug_assert!(panels >= 2 && panels % 2 == 0);
        let vel: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let mut pos = vec![0.0; self.dim];
        let eval = |t: f64, pos: &mut Vec<f64>| {
            for i in 0..self.dim {
                pos[i] = a[i] + t * vel[i];
            }
            (self.speed)(pos, &vel)
        };
        let h = 1.0 / panels as f64;
        let mut sum = eval(0.0, &mut pos) + eval(1.0, &mut pos);
        for k in 1..panels {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * eval(k as f64 * h, &mut pos);
        }
        sum * h / 3.0
    }

    pub fn polyline_length(&self, nodes: &[Vec<f64>], panels: usize) -> f64 {
        nodes.windows(2).map(|w| self.segment_length(&w[0], &w[1], panels)).sum()
    }

    /// Upper bound on the induced distance from `p` to `q`: optimize the
    /// interior nodes of a polyline, refining dyadically until the relative
    /// improvement drops below `opts.rel_tol`.
    pub fn optimize_polyline(&self, p: &[f64], q: &[f64], opts: &OptimizeOptions) -> OptimizedPath {
        let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut nodes = vec![p.to_vec(), mid, q.to_vec()];
        let mut length = self.polyline_length(&nodes, opts.panels);
        let mut converged = false;
        let mut levels_used = 0;

        for level in 0..opts.max_levels {
            levels_used = level + 1;
            let before = length;
            length = self.descend(&mut nodes, length, opts);
            let improvement = (before - length).max(0.0);
            if improvement <= opts.rel_tol * length.max(1e-300) && level > 0 {
                converged = true;
                break;
            }
            if 2 * (nodes.len() - 1) + 1 > opts.max_nodes {
                break;
            }
            nodes = refine(&nodes);
            length = self.polyline_length(&nodes, opts.panels);
        }
        OptimizedPath { length, nodes, converged, levels_used }
    }

    fn descend(&self, nodes: &mut Vec<Vec<f64>>, mut length: f64, opts: &OptimizeOptions) -> f64 {
        for _ in 0..opts.max_sweeps {
            let before = length;
            for i in 1..nodes.len() - 1 {
                let local_base =
                    self.segment_length(&nodes[i - 1], &nodes[i], opts.panels)
                        + self.segment_length(&nodes[i], &nodes[i + 1], opts.panels);
                let scale = node_scale(&nodes[i - 1], &nodes[i + 1]);
                let mut local = local_base;
                for d in 0..self.dim {
                    let original = nodes[i][d];
                    let eval = |s: f64, nodes: &mut Vec<Vec<f64>>| {
                        nodes[i][d] = original + s;
                        let v = self.segment_length(&nodes[i - 1], &nodes[i], opts.panels)
                            + self.segment_length(&nodes[i], &nodes[i + 1], opts.panels);
                        nodes[i][d] = original;
                        v
                    };
                    let (best_s, best_v) = line_min(|s| eval(s, nodes), local, scale);
                    if best_v < local {
                        nodes[i][d] = original + best_s;
                        local = best_v;
                    }
                }
                length += local - local_base;
            }
            if before - length <= opts.rel_tol * 0.1 * length.max(1e-300) {
                break;
            }
        }
        length
    }
}

fn node_scale(a: &[f64], b: &[f64]) -> f64 {
    let span = a.iter().zip(b).map(|(x, y)| (y - x).abs()).fold(0.0_f64, f64::max);
    (span * 0.25).max(1e-7)
}

fn refine(nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * nodes.len() - 1);
    for w in nodes.windows(2) {
        out.push(w[0].clone());
        out.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect());
    }
    out.push(nodes[nodes.len() - 1].clone());
    out
}

/// Derivative-free 1D descent: probe both directions, expand while the
/// value drops, then contract around the best point.
fn line_min(mut eval: impl FnMut(f64) -> f64, f0: f64, step0: f64) -> (f64, f64) {
    let mut best = (0.0, f0);
    let mut step = step0;
    let mut found = false;
    for _ in 0..5 {
        for dir in [1.0, -1.0] {
            let v = eval(dir * step);
            if v < best.1 {
                best = (dir * step, v);
                found = true;
            }
        }
        if found {
            break;
        }
        step *= 0.25;
    }
    if !found {
        return best;
    }
    loop {
        let next = best.0 * 2.0;
        let v = eval(next);
        if v < best.1 {
            best = (next, v);
        } else {
            break;
        }
    }
    let mut width = best.0.abs() * 0.5;
    for _ in 0..8 {
        for cand in [best.0 - width, best.0 + width] {
            let v = eval(cand);
            if v < best.1 {
                best = (cand, v);
            }
        }
        width *= 0.5;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_segment_is_exact() {
        let speed = |_: &[f64], v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = PathFunctional { dim: 2, speed: &speed };
        let len = f.segment_length(&[0.0, 0.0], &[3.0, 4.0], 8);
        assert!((len - 5.0).abs() < 1e-12);
    }

    #[test]
    fn optimizer_straightens_in_flat_space() {
        let speed = |_: &[f64], v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = PathFunctional { dim: 2, speed: &speed };
        let out = f.optimize_polyline(&[0.0, 0.0], &[1.0, 2.0], &OptimizeOptions::default());
        assert!((out.length - 5.0_f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn optimizer_finds_upper_half_plane_geodesic() {
        // Metric (dx^2 + dy^2) / y^2; distance between (x1, 1), (x2, 1) is
        // arccosh(1 + |dx|^2 / 2).
        let speed = |p: &[f64], v: &[f64]| (v[0] * v[0] + v[1] * v[1]).sqrt() / p[1];
        let f = PathFunctional { dim: 2, speed: &speed };
        let out = f.optimize_polyline(&[0.0, 1.0], &[3.0, 1.0], &OptimizeOptions::default());
        let exact = (1.0_f64 + 4.5).acosh();
        assert!(
            (out.length - exact).abs() / exact < 0.02,
            "optimized {} vs exact {exact}",
            out.length
        );
        assert!(out.length >= exact - 1e-9, "upper bound must stay above the distance");
    }
}
