//! Slow, definition-level reference implementations.

use std::collections::{BTreeMap, BTreeSet};

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Exact transport optimum by enumerating every basic solution of the
/// transportation polytope (spanning trees of the complete bipartite graph).
///
/// Only usable for tiny instances: cost grows as `C(n*m, n+m-1)`.
pub fn transport_lp_bruteforce(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    enumerate(&arcs, k, 0, &mut chosen, &mut |subset| {
        if let Some(c) = basic_solution_cost(n, m, a, b, cost, subset) {
            best = best.min(c);
        }
    });
    best
}

fn enumerate(
    arcs: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for idx in start..arcs.len() {
        if arcs.len() - idx < k - chosen.len() {
            break;
        }
        chosen.push(arcs[idx]);
        enumerate(arcs, k, idx + 1, chosen, visit);
        chosen.pop();
    }
}

fn basic_solution_cost(
    n: usize,
    m: usize,
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    subset: &[(usize, usize)],
) -> Option<f64> {
    // spanning tree check with union-find
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(i, j) in subset {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, n + j));
        if ri == rj {
            return None;
        }
        parent[ri] = rj;
    }
    // unique flows by peeling leaves
    let mut supply: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut flow = vec![f64::NAN; subset.len()];
    let mut open = subset.len();
    while open > 0 {
        let mut progressed = false;
        for node in 0..n + m {
            let incident: Vec<usize> = (0..subset.len())
                .filter(|&e| flow[e].is_nan() && (subset[e].0 == node || n + subset[e].1 == node))
                .collect();
            if incident.len() == 1 {
                let e = incident[0];
                let x = supply[node];
                flow[e] = x;
                let (i, j) = subset[e];
                supply[i] -= x;
                supply[n + j] -= x;
                open -= 1;
                progressed = true;
            }
        }
        if !progressed {
            return None;
        }
    }
    if flow.iter().any(|&x| x < -1e-12) {
        return None;
    }
    Some(
        subset
            .iter()
            .zip(&flow)
            .map(|(&(i, j), &x)| x.max(0.0) * cost[i * m + j])
            .sum(),
    )
}

/// Kendall tau-b from every pair, after extending both rankings to the union of
/// their items with absent items tied one rank below the worst ranked item.
pub fn kendall_tau_b_pairwise<T: Ord + Clone>(
    x: &BTreeMap<T, u64>,
    y: &BTreeMap<T, u64>,
) -> Option<f64> {
    let items: BTreeSet<&T> = x.keys().chain(y.keys()).collect();
    let bx = x.values().max().copied().unwrap_or(0) + 1;
    let by = y.values().max().copied().unwrap_or(0) + 1;
    let rx: Vec<i64> = items
        .iter()
        .map(|i| *x.get(*i).unwrap_or(&bx) as i64)
        .collect();
    let ry: Vec<i64> = items
        .iter()
        .map(|i| *y.get(*i).unwrap_or(&by) as i64)
        .collect();
    let n = rx.len();
    if n < 2 {
        return None;
    }
    let (mut nc, mut nd, mut tx, mut ty) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..n {
        for j in i + 1..n {
            let sx = (rx[i] - rx[j]).signum();
            let sy = (ry[i] - ry[j]).signum();
            if sx == 0 {
                tx += 1;
            }
            if sy == 0 {
                ty += 1;
            }
            if sx != 0 && sy != 0 {
                if sx == sy {
                    nc += 1;
                } else {
                    nd += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i128;
    let (dx, dy) = (n0 - tx, n0 - ty);
    if dx == 0 || dy == 0 {
        return None;
    }
    Some((nc - nd) as f64 / ((dx as f64) * (dy as f64)).sqrt())
}

/// Visits every monotone coupling path from `(0, 0)` to `(n-1, m-1)` with unit steps.
fn for_each_coupling(n: usize, m: usize, visit: &mut dyn FnMut(&[(usize, usize)])) {
    fn go(
        i: usize,
        j: usize,
        n: usize,
        m: usize,
        path: &mut Vec<(usize, usize)>,
        visit: &mut dyn FnMut(&[(usize, usize)]),
    ) {
        path.push((i, j));
        if i == n - 1 && j == m - 1 {
            visit(path);
        } else {
            if i + 1 < n {
                go(i + 1, j, n, m, path, visit);
            }
            if j + 1 < m {
                go(i, j + 1, n, m, path, visit);
            }
            if i + 1 < n && j + 1 < m {
                go(i + 1, j + 1, n, m, path, visit);
            }
        }
        path.pop();
    }
    let mut path = Vec::new();
    go(0, 0, n, m, &mut path, visit);
}

/// Discrete Fréchet distance as the minimum over all couplings of the largest
/// coupled distance.
pub fn frechet_by_couplings(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for_each_coupling(a.len(), b.len(), &mut |path| {
        let worst = path
            .iter()
            .map(|&(i, j)| dist(a[i], b[j]))
            .fold(0.0, f64::max);
        best = best.min(worst);
    });
    best
}

/// DTW as the minimum over all warping paths of the summed local costs.
pub fn dtw_by_paths(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for_each_coupling(a.len(), b.len(), &mut |path| {
        let total: f64 = path.iter().map(|&(i, j)| dist(a[i], b[j])).sum();
        best = best.min(total);
    });
    best
}

/// Hausdorff distance with two plain nested loops.
pub fn hausdorff_double_loop(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let directed = |p: &[[f64; 2]], q: &[[f64; 2]]| {
        p.iter()
            .map(|&x| q.iter().map(|&y| dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// 1-D W1 between two weighted samples by integrating |F - G| on a fine grid of
/// all breakpoints (direct quadrature of the CDF difference).
pub fn w1_scalar_by_cdf(xs: &[f64], wx: &[f64], ys: &[f64], wy: &[f64]) -> f64 {
    let mut pts: Vec<f64> = xs.iter().chain(ys).copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let sx: f64 = wx.iter().sum();
    let sy: f64 = wy.iter().sum();
    let cdf = |v: &[f64], w: &[f64], s: f64, t: f64| -> f64 {
        v.iter()
            .zip(w)
            .filter(|(x, _)| **x <= t)
            .map(|(_, w)| w / s)
            .sum()
    };
    pts.windows(2)
        .map(|p| (cdf(xs, wx, sx, p[0]) - cdf(ys, wy, sy, p[0])).abs() * (p[1] - p[0]))
        .sum()
}

/// Sample mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_bruteforce_on_known_instance() {
        let c = [10.0, 1.0, 1.0, 10.0];
        assert!((transport_lp_bruteforce(&[0.5, 0.5], &[0.5, 0.5], &c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coupling_oracles() {
        let a = [[0.0, 0.0]];
        let b = [[3.0, 4.0], [0.0, 0.0], [0.0, 2.0]];
        assert_eq!(dtw_by_paths(&a, &b), 7.0);
        assert_eq!(frechet_by_couplings(&a, &b), 5.0);
    }

    #[test]
    fn kendall_oracle_reversal() {
        let x = BTreeMap::from([(1, 1), (2, 2), (3, 3)]);
        let y = BTreeMap::from([(1, 3), (2, 2), (3, 1)]);
        assert_eq!(kendall_tau_b_pairwise(&x, &y), Some(-1.0));
    }
}
