//! Exact optimal transport by the transportation simplex.
//!
//! The basis is a spanning tree over the bipartite node set (sources then
//! targets). Initialization is Vogel's approximation; pivoting is Dantzig
//! (most negative reduced cost) with a switch to Bland's rule after a run of
//! degenerate pivots, which guarantees termination.

use ndarray::Array2;

use super::{check_cost_shape, check_equal_masses, DiscreteMeasure, TransportError, TransportPlan};

/// Reduced costs are treated as negative below `-REL_TOL * max |c|`.
const REL_TOL: f64 = 1e-12;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 32;

struct Arc {
    row: usize,
    col: usize,
    flow: f64,
}

struct Tree {
    /// adjacency[node] = indices into the arc list; rows are nodes
    /// `0..n`, columns `n..n+m`.
    adjacency: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    n: usize,
}

impl Tree {
    fn node_of_row(&self, i: usize) -> usize {
        i
    }

    fn node_of_col(&self, j: usize) -> usize {
        self.n + j
    }

    fn add_arc(&mut self, row: usize, col: usize, flow: f64) {
        let idx = self.arcs.len();
        self.arcs.push(Arc { row, col, flow });
        let (a, b) = (row, self.n + col);
        self.adjacency[a].push(idx);
        self.adjacency[b].push(idx);
    }

    fn remove_arc(&mut self, idx: usize) {
        let arc = &self.arcs[idx];
        let (a, b) = (arc.row, self.n + arc.col);
        self.adjacency[a].retain(|&e| e != idx);
        self.adjacency[b].retain(|&e| e != idx);
        // Swap-remove and fix the moved arc's adjacency references.
        let last = self.arcs.len() - 1;
        if idx != last {
            let moved = &self.arcs[last];
            let (ma, mb) = (moved.row, self.n + moved.col);
            for node in [ma, mb] {
                for e in &mut self.adjacency[node] {
                    if *e == last {
                        *e = idx;
                    }
                }
            }
        }
        self.arcs.swap_remove(idx);
    }

    /// Path of arc indices from `from` to `to` (tree path, unique).
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let nodes = self.adjacency.len();
        let mut parent_arc: Vec<Option<usize>> = vec![None; nodes];
        let mut parent_node: Vec<usize> = vec![usize::MAX; nodes];
        let mut visited = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        visited[from] = true;
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &e in &self.adjacency[u] {
                let arc = &self.arcs[e];
                let other = if self.node_of_row(arc.row) == u {
                    self.node_of_col(arc.col)
                } else {
                    self.node_of_row(arc.row)
                };
                if !visited[other] {
                    visited[other] = true;
                    parent_arc[other] = Some(e);
                    parent_node[other] = u;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = to;
        while cur != from {
            let e = parent_arc[cur].expect("tree is connected");
            path.push(e);
            cur = parent_node[cur];
        }
        path
    }

    /// Dual potentials from the spanning tree: `u_0 = 0`,
    /// `u_i + v_j = c_ij` on basic arcs.
    fn duals(&self, cost: &Array2<f64>, m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![f64::NAN; self.n];
        let mut v = vec![f64::NAN; m];
        let mut stack = vec![0usize];
        u[0] = 0.0;
        let mut seen = vec![false; self.n + m];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &e in &self.adjacency[node] {
                let arc = &self.arcs[e];
                let (rn, cn) = (self.node_of_row(arc.row), self.node_of_col(arc.col));
                let other = if rn == node { cn } else { rn };
                if !seen[other] {
                    seen[other] = true;
                    if other >= self.n {
                        v[other - self.n] = cost[[arc.row, arc.col]] - u[arc.row];
                    } else {
                        u[other] = cost[[arc.row, arc.col]] - v[arc.col];
                    }
                    stack.push(other);
                }
            }
        }
        (u, v)
    }
}

fn vogel_initialize(a: &[f64], b: &[f64], cost: &Array2<f64>, tree: &mut Tree) {
    let n = a.len();
    let m = b.len();
    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    let mut row_active = vec![true; n];
    let mut col_active = vec![true; m];
    let mut active_lines = n + m;

    let two_smallest = |costs: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let mut best = f64::INFINITY;
        let mut second = f64::INFINITY;
        for c in costs {
            if c < best {
                second = best;
                best = c;
            } else if c < second {
                second = c;
            }
        }
        (best, second)
    };

    while active_lines > 1 {
        // Penalties: gap between the two smallest costs in each active line.
        let mut best_penalty = f64::NEG_INFINITY;
        let mut pick: Option<(bool, usize)> = None; // (is_row, index)
        for i in 0..n {
            if !row_active[i] {
                continue;
            }
            let (lo, hi) = two_smallest(
                &mut (0..m)
                    .filter(|&j| col_active[j])
                    .map(|j| cost[[i, j]]),
            );
            let pen = if hi.is_finite() { hi - lo } else { lo };
            if pen > best_penalty {
                best_penalty = pen;
                pick = Some((true, i));
            }
        }
        for j in 0..m {
            if !col_active[j] {
                continue;
            }
            let (lo, hi) = two_smallest(
                &mut (0..n)
                    .filter(|&i| row_active[i])
                    .map(|i| cost[[i, j]]),
            );
            let pen = if hi.is_finite() { hi - lo } else { lo };
            if pen > best_penalty {
                best_penalty = pen;
                pick = Some((false, j));
            }
        }
        let Some((is_row, idx)) = pick else { break };
        // Cheapest cell of the selected line.
        let (i, j) = if is_row {
            let j = (0..m)
                .filter(|&j| col_active[j])
                .min_by(|&x, &y| cost[[idx, x]].partial_cmp(&cost[[idx, y]]).unwrap())
                .expect("an active column exists");
            (idx, j)
        } else {
            let i = (0..n)
                .filter(|&i| row_active[i])
                .min_by(|&x, &y| cost[[x, idx]].partial_cmp(&cost[[y, idx]]).unwrap())
                .expect("an active row exists");
            (i, idx)
        };
        let alloc = rem_a[i].min(rem_b[j]);
        tree.add_arc(i, j, alloc);
        rem_a[i] -= alloc;
        rem_b[j] -= alloc;
        // Deactivate exactly one line per allocation so exactly n + m - 1
        // basic arcs come out (degenerate zero allocations included). Never
        // retire the last line of one side while the other side still has
        // several active lines, or the remaining (zero) allocations could
        // not attach to anything.
        let rows_left = row_active.iter().filter(|&&x| x).count();
        let cols_left = col_active.iter().filter(|&&x| x).count();
        let mut drop_row = rem_a[i] <= rem_b[j];
        if drop_row && rows_left == 1 && cols_left > 1 {
            drop_row = false;
        } else if !drop_row && cols_left == 1 && rows_left > 1 {
            drop_row = true;
        }
        if drop_row {
            row_active[i] = false;
        } else {
            col_active[j] = false;
        }
        active_lines -= 1;
    }
}

/// Exact transport plan minimizing `sum pi_ij c_ij` subject to the marginal
/// constraints. Requires equal total masses (up to [`super::MASS_TOL`]).
pub fn exact_ot(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &Array2<f64>,
) -> Result<TransportPlan, TransportError> {
    let (n, m) = (mu.len(), nu.len());
    if n == 0 || m == 0 {
        return Err(TransportError::InvalidParameter("empty measure"));
    }
    check_cost_shape(cost, n, m)?;
    check_equal_masses(mu.mass(), nu.mass())?;

    let a = mu.weights();
    let b = nu.weights();
    let mut tree = Tree {
        adjacency: vec![Vec::new(); n + m],
        arcs: Vec::new(),
        n,
    };
    vogel_initialize(a, b, cost, &mut tree);
    debug_assert_eq!(tree.arcs.len(), n + m - 1);

    let cost_scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs())).max(1.0);
    let tol = REL_TOL * cost_scale;
    let pivot_cap = 200 * (n + m) * (n + m) + 10_000;
    let mut bland = false;
    let mut degenerate_run = 0usize;

    for _pivot in 0..pivot_cap {
        let (u, v) = tree.duals(cost, m);
        // Entering arc.
        let mut entering: Option<(usize, usize)> = None;
        let mut best_rc = -tol;
        'scan: for i in 0..n {
            for j in 0..m {
                let rc = cost[[i, j]] - u[i] - v[j];
                if rc < best_rc {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best_rc = rc;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            // Optimal: assemble the plan.
            let mut flows = Array2::zeros((n, m));
            let mut total = 0.0;
            for arc in &tree.arcs {
                let f = arc.flow.max(0.0);
                flows[[arc.row, arc.col]] = f;
                total += f * cost[[arc.row, arc.col]];
            }
            return Ok(TransportPlan::new(flows, total, u, v));
        };

        // Unique cycle: entering arc plus the tree path col(ej) -> row(ei).
        let path = tree.path(tree.node_of_col(ej), tree.node_of_row(ei));
        // Signs along the path alternate starting with minus at the column end.
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        let mut cur = tree.node_of_col(ej);
        for (t, &e) in path.iter().enumerate() {
            let arc = &tree.arcs[e];
            cur = if tree.node_of_row(arc.row) == cur {
                tree.node_of_col(arc.col)
            } else {
                tree.node_of_row(arc.row)
            };
            if t % 2 == 0 {
                // minus arc
                let f = tree.arcs[e].flow;
                if f < theta - 1e-15 || (f <= theta + 1e-15 && leaving.is_none()) {
                    theta = f;
                    leaving = Some(e);
                }
            }
        }
        let _ = cur;
        let leaving = leaving.ok_or(TransportError::SimplexStalled)?;
        let theta = theta.max(0.0);
        if theta <= 1e-15 {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_RUN {
                bland = true;
            }
        } else {
            degenerate_run = 0;
            bland = false;
        }
        // Apply the flow change around the cycle.
        for (t, &e) in path.iter().enumerate() {
            let delta = if t % 2 == 0 { -theta } else { theta };
            tree.arcs[e].flow += delta;
        }
        let leaving_rc = (tree.arcs[leaving].row, tree.arcs[leaving].col);
        tree.remove_arc(leaving);
        debug_assert_ne!(leaving_rc, (ei, ej));
        tree.add_arc(ei, ej, theta);
    }
    Err(TransportError::SimplexStalled)
}
