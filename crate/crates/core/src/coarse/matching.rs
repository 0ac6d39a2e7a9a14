//! Bounded-displacement bijections between equinumerous windows of a
//! common ambient space: maximum bipartite matching on the pairs within
//! distance R (Hopcroft-Karp over nearest-first adjacency), returning a
//! perfect matching or a Hall-violating witness set.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub enum MatchingOutcome {
    /// pairs[i] is the index in B matched to A[i]; every pair is within R.
    Perfect { pairs: Vec<usize>, max_pair_distance: f64 },
    /// A set W of left indices whose R-neighbourhood in B is smaller than
    /// W, certifying that no perfect matching exists.
    Infeasible { witness: Vec<usize>, neighbourhood: Vec<usize> },
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximum matching of A against B along pairs with d(a, b) <= r.
pub fn bounded_displacement_matching(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    r: f64,
) -> Result<MatchingOutcome> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("radius {r} must be nonnegative")));
    }

    // Candidate lookup through a cell grid of size r, so only the 3^d
    // neighbouring cells are scanned per left point.
    let dim = a.first().map(|p| p.len()).unwrap_or(0);
    let cell = if r > 0.0 { r } else { 1.0 };
    let key_of = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x / cell).floor() as i64).collect() };
    let mut buckets: std::collections::HashMap<Vec<i64>, Vec<usize>> = std::collections::HashMap::new();
    for (j, pb) in b.iter().enumerate() {
        buckets.entry(key_of(pb)).or_default().push(j);
    }
    let neighbour_cells = |key: &[i64]| -> Vec<Vec<i64>> {
        let mut cells = vec![Vec::new()];
        for &k in key {
            let mut next = Vec::new();
            for c in &cells {
                for d in -1..=1i64 {
                    let mut c2 = c.clone();
                    c2.push(k + d);
                    next.push(c2);
                }
            }
            cells = next;
        }
        cells
    };

    // Nearest-first adjacency, ties broken by point index.
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n);
    for pa in a {
        let mut row: Vec<(f64, usize)> = Vec::new();
        debug_assert_eq!(pa.len(), dim);
        for cell_key in neighbour_cells(&key_of(pa)) {
            if let Some(js) = buckets.get(&cell_key) {
                for &j in js {
                    let d = euclid(pa, &b[j]);
                    if d <= r {
                        row.push((d, j));
                    }
                }
            }
        }
        row.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite").then(x.1.cmp(&y.1)));
        adj.push(row.into_iter().map(|(_, j)| j).collect());
    }

    let (pair_u, pair_v) = hopcroft_karp(n, &adj);
    let matched = pair_u.iter().filter(|p| p.is_some()).count();
    if matched == n {
        let pairs: Vec<usize> = pair_u.into_iter().map(|p| p.expect("perfect")).collect();
        let max_pair_distance = pairs
            .iter()
            .enumerate()
            .map(|(i, &j)| euclid(&a[i], &b[j]))
            .fold(0.0_f64, f64::max);
        return Ok(MatchingOutcome::Perfect { pairs, max_pair_distance });
    }

    // Hall witness: left vertices reachable from an unmatched left vertex
    // by alternating paths, together with their joint neighbourhood.
    let mut in_w = vec![false; n];
    let mut in_nw = vec![false; n];
    let mut queue: Vec<usize> =
        (0..n).filter(|&u| pair_u[u].is_none()).inspect(|&u| in_w[u] = true).collect();
    while let Some(u) = queue.pop() {
        for &v in &adj[u] {
            if !in_nw[v] {
                in_nw[v] = true;
                if let Some(u2) = pair_v[v] {
                    if !in_w[u2] {
                        in_w[u2] = true;
                        queue.push(u2);
                    }
                }
            }
        }
    }
    let witness: Vec<usize> = (0..n).filter(|&u| in_w[u]).collect();
    let neighbourhood: Vec<usize> = (0..n).filter(|&v| in_nw[v]).collect();
    debug_assert!(neighbourhood.len() < witness.len());
    Ok(MatchingOutcome::Infeasible { witness, neighbourhood })
}

fn hopcroft_karp(n: usize, adj: &[Vec<usize>]) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut pair_u: Vec<Option<usize>> = vec![None; n];
    let mut pair_v: Vec<Option<usize>> = vec![None; n];
    let mut dist: Vec<u32> = vec![u32::MAX; n];

    loop {
        // BFS layering from free left vertices.
        let mut queue = std::collections::VecDeque::new();
        for u in 0..n {
            if pair_u[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match pair_v[v] {
                    None => found = true,
                    Some(u2) => {
                        if dist[u2] == u32::MAX {
                            dist[u2] = dist[u] + 1;
                            queue.push_back(u2);
                        }
                    }
                }
            }
        }
        if !found {
            break;
        }
        // Layered DFS augmentation.
        for u in 0..n {
            if pair_u[u].is_none() {
                dfs(u, adj, &mut pair_u, &mut pair_v, &mut dist);
            }
        }
    }
    (pair_u, pair_v)
}

fn dfs(
    u: usize,
    adj: &[Vec<usize>],
    pair_u: &mut [Option<usize>],
    pair_v: &mut [Option<usize>],
    dist: &mut [u32],
) -> bool {
    for idx in 0..adj[u].len() {
        let v = adj[u][idx];
        let ok = match pair_v[v] {
            None => true,
            Some(u2) => dist[u2] == dist[u].wrapping_add(1) && dfs(u2, adj, pair_u, pair_v, dist),
        };
        if ok {
            pair_u[u] = Some(v);
            pair_v[v] = Some(u);
            return true;
        }
    }
    dist[u] = u32::MAX;
    false
}
