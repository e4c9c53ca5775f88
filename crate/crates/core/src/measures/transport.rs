//! Exact transportation-problem solver (primal network simplex on a bipartite
//! spanning-tree basis).

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::WEIGHT_TOL;

/// Optimal coupling: non-zero entries `(i, j, mass)` and its total cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    pub flows: Vec<(usize, usize, f64)>,
}

/// Minimises `sum c[i][j] x[i][j]` subject to row sums `a` and column sums `b`.
///
/// `cost` is row-major with `a.len()` rows and `b.len()` columns. The two marginals
/// must carry equal mass up to [`WEIGHT_TOL`]; `b` is rescaled to match `a` exactly.
pub fn solve_transport(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (n, m) = (a.len(), b.len());
    if cost.len() != n * m {
        return Err(Error::DimensionMismatch(format!(
            "cost has {} entries, expected {n}x{m}",
            cost.len()
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::Empty("transport marginals must be non-empty".into()));
    }
    if a.iter().chain(b).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter(
            "marginals must be non-negative".into(),
        ));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("costs must be finite".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if sa <= 0.0 || (sa - sb).abs() > WEIGHT_TOL * sa.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "marginals carry different mass ({sa} vs {sb})"
        )));
    }

    // Zero-weight atoms never carry flow; solve on the positive ones only.
    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let ra: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let scale = sa / sb;
    let rb: Vec<f64> = cols.iter().map(|&j| b[j] * scale).collect();
    let rc: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * m + j]))
        .collect();

    let flows = Simplex::new(&ra, &rb, &rc).solve()?;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(flows.len());
    for (i, j, x) in flows {
        if x > 0.0 {
            let (oi, oj) = (rows[i], cols[j]);
            total += x * cost[oi * m + oj];
            out.push((oi, oj, x));
        }
    }
    out.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
    Ok(TransportPlan {
        cost: total,
        flows: out,
    })
}

const NONE: usize = usize::MAX;

struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    /// Basic arcs `(source, sink, flow)`; always `n + m - 1` of them.
    arcs: Vec<(usize, usize, f64)>,
    /// Node -> incident basic arc slots. Sources are `0..n`, sinks `n..n+m`.
    adj: Vec<Vec<usize>>,
    potential: Vec<f64>,
    parent_arc: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<usize>,
}

impl<'a> Simplex<'a> {
    fn new(a: &[f64], b: &[f64], cost: &'a [f64]) -> Self {
        let (n, m) = (a.len(), b.len());
        let mut arcs = Vec::with_capacity(n + m - 1);
        // northwest-corner rule; on simultaneous exhaustion only one index advances,
        // which keeps the basis a spanning tree (with a zero-flow arc)
        let (mut i, mut j) = (0, 0);
        let (mut left_a, mut left_b) = (a[0], b[0]);
        loop {
            let f = left_a.min(left_b);
            arcs.push((i, j, f));
            left_a -= f;
            left_b -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if (left_a <= left_b && i < n - 1) || j == m - 1 {
                i += 1;
                left_a = a[i];
            } else {
                j += 1;
                left_b = b[j];
            }
        }
        let mut adj = vec![Vec::new(); n + m];
        for (k, &(i, j, _)) in arcs.iter().enumerate() {
            adj[i].push(k);
            adj[n + j].push(k);
        }
        Self {
            n,
            m,
            cost,
            arcs,
            adj,
            potential: vec![0.0; n + m],
            parent_arc: vec![NONE; n + m],
            parent: vec![NONE; n + m],
            depth: vec![0; n + m],
        }
    }

    fn rebuild_tree(&mut self) {
        let n = self.n;
        self.parent_arc.fill(NONE);
        self.parent.fill(NONE);
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        let mut seen = vec![false; n + self.m];
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &k in &self.adj[u] {
                let (i, j, _) = self.arcs[k];
                let v = if u == i { n + j } else { i };
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                self.parent[v] = u;
                self.parent_arc[v] = k;
                self.depth[v] = self.depth[u] + 1;
                self.potential[v] = self.cost[i * self.m + j] - self.potential[u];
                queue.push_back(v);
            }
        }
    }

    fn reduced_cost(&self, arc: usize) -> f64 {
        let (i, j) = (arc / self.m, arc % self.m);
        self.cost[arc] - self.potential[i] - self.potential[self.n + j]
    }

    fn solve(mut self) -> Result<Vec<(usize, usize, f64)>> {
        let (n, m) = (self.n, self.m);
        if n == 1 || m == 1 {
            return Ok(self.arcs);
        }
        let total = n * m;
        let block = ((total as f64).sqrt().ceil() as usize).max(1);
        let scale = self.cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let eps = 1e-12 * scale;
        let max_iter = 100 * total + 10_000;
        let degenerate_limit = 2 * (n + m);

        let mut cursor = 0usize;
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            self.rebuild_tree();
            let bland = degenerate_run > degenerate_limit;

            let entering = if bland {
                (0..total).find(|&a| self.reduced_cost(a) < -eps)
            } else {
                let mut found = None;
                let mut best = -eps;
                let mut scanned = 0;
                while scanned < total {
                    let end = (scanned + block).min(total);
                    for _ in scanned..end {
                        let r = self.reduced_cost(cursor);
                        if r < best {
                            best = r;
                            found = Some(cursor);
                        }
                        cursor = (cursor + 1) % total;
                    }
                    scanned = end;
                    if found.is_some() {
                        break;
                    }
                }
                found
            };
            let Some(entering) = entering else {
                return Ok(self.arcs);
            };
            let (p, q) = (entering / m, entering % m);

            // cycle: tree path from sink q back to source p, arcs alternate
            // decrease / increase starting with a decrease
            let mut up_q = Vec::new();
            let mut up_p = Vec::new();
            let (mut u, mut v) = (n + q, p);
            while self.depth[u] > self.depth[v] {
                up_q.push(self.parent_arc[u]);
                u = self.parent[u];
            }
            while self.depth[v] > self.depth[u] {
                up_p.push(self.parent_arc[v]);
                v = self.parent[v];
            }
            while u != v {
                up_q.push(self.parent_arc[u]);
                u = self.parent[u];
                up_p.push(self.parent_arc[v]);
                v = self.parent[v];
            }
            let path: Vec<usize> = up_q.into_iter().chain(up_p.into_iter().rev()).collect();

            let mut leaving = NONE;
            let mut theta = f64::INFINITY;
            for &k in path.iter().step_by(2) {
                let x = self.arcs[k].2;
                let better = x < theta
                    || (bland && x == theta && {
                        let (i, j, _) = self.arcs[k];
                        let (li, lj, _) = self.arcs[leaving];
                        i * m + j < li * m + lj
                    });
                if better {
                    theta = x;
                    leaving = k;
                }
            }
            if theta > 0.0 {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            for (pos, &k) in path.iter().enumerate() {
                let x = &mut self.arcs[k].2;
                if pos % 2 == 0 {
                    *x = (*x - theta).max(0.0);
                } else {
                    *x += theta;
                }
            }

            let (li, lj, _) = self.arcs[leaving];
            self.adj[li].retain(|&k| k != leaving);
            self.adj[n + lj].retain(|&k| k != leaving);
            self.arcs[leaving] = (p, q, theta);
            self.adj[p].push(leaving);
            self.adj[n + q].push(leaving);
        }
        Err(Error::Solver(format!(
            "network simplex did not converge within {max_iter} pivots"
        )))
    }
}
