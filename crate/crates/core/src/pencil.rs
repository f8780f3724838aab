//! Bipartite view of the matrix pencil `sI - A` and the matching expansion
//! of its determinant.
//!
//! Rows and columns of the pencil are the two vertex classes; every nonzero
//! entry is an edge. The diagonal always carries the `s` term, so the
//! diagonal matching is always perfect. Each perfect matching is a signed
//! determinant term, which makes enumeration an independent oracle for the
//! characteristic polynomial, and the absence of an alternating cycle a
//! certificate that the determinant is the plain diagonal product.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::CommGraph;

/// Factorial enumeration guard for the determinant expansion.
const MAX_EXPANSION_SIZE: usize = 12;

/// The bipartite structure of `sI - A`: one weighted edge per nonzero entry.
///
/// Indices are 1-based to match agent numbering. Diagonal edge `(i, i)`
/// carries `s - diag[i]`; off-diagonal edge `(i, j)` carries the constant
/// `-off[(i, j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilGraph {
    n: usize,
    diag: Vec<f64>,
    off: BTreeMap<(usize, usize), f64>,
    /// Per-row candidate columns (the row's edges), ascending.
    row_cols: Vec<Vec<usize>>,
}

impl PencilGraph {
    fn assemble(n: usize, diag: Vec<f64>, off: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_cols = vec![Vec::new(); n + 1];
        for (r, cols) in row_cols.iter_mut().enumerate().skip(1) {
            cols.push(r);
        }
        for &(r, c) in off.keys() {
            row_cols[r].push(c);
        }
        for cols in &mut row_cols {
            cols.sort_unstable();
        }
        PencilGraph {
            n,
            diag,
            off,
            row_cols,
        }
    }

    /// Pencil of a concrete matrix; entries equal to exactly 0.0 are absent.
    pub fn from_matrix(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut diag = vec![0.0; n + 1];
        let mut off = BTreeMap::new();
        for i in 0..n {
            diag[i + 1] = a[(i, i)];
            for j in 0..n {
                if i != j && a[(i, j)] != 0.0 {
                    off.insert((i + 1, j + 1), a[(i, j)]);
                }
            }
        }
        Ok(Self::assemble(n, diag, off))
    }

    /// Structural pencil of a communication graph: zero diagonal values and
    /// a unit entry at `(i, j)` for every edge `j -> i` (agent `i` listens
    /// to agent `j`).
    pub fn from_structure(g: &CommGraph) -> Self {
        let n = g.agent_count();
        let off: BTreeMap<(usize, usize), f64> =
            g.edges().map(|(from, to)| ((to, from), 1.0)).collect();
        Self::assemble(n, vec![0.0; n + 1], off)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Total edges: n diagonal + one per off-diagonal nonzero.
    pub fn edge_count(&self) -> usize {
        self.n + self.off.len()
    }

    pub fn off_edges(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.off.iter().map(|(&k, &v)| (k, v))
    }

    pub fn has_edge(&self, row: usize, col: usize) -> bool {
        row == col || self.off.contains_key(&(row, col))
    }

    /// Depth-first enumeration over rows; `visit` sees each complete
    /// column assignment (index 0 = row 1) in lexicographic order.
    fn walk(&self, visit: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
        fn rec(
            p: &PencilGraph,
            row: usize,
            sigma: &mut Vec<usize>,
            used: &mut u128,
            visit: &mut dyn FnMut(&[usize]) -> Result<()>,
        ) -> Result<()> {
            if row > p.n {
                return visit(sigma);
            }
            for &col in &p.row_cols[row] {
                let bit = 1u128 << col;
                if *used & bit == 0 {
                    *used |= bit;
                    sigma.push(col);
                    rec(p, row + 1, sigma, used, visit)?;
                    sigma.pop();
                    *used &= !bit;
                }
            }
            Ok(())
        }
        rec(self, 1, &mut Vec::with_capacity(self.n), &mut 0, visit)
    }

    /// All perfect matchings in lexicographic order of their column
    /// assignments. Errors once more than `limit` exist.
    pub fn perfect_matchings(&self, limit: usize) -> Result<Vec<Matching>> {
        let mut found: Vec<Matching> = Vec::new();
        self.walk(&mut |sigma| {
            if found.len() == limit {
                return Err(Error::LimitExceeded { limit });
            }
            found.push(Matching::from_assignment(sigma));
            Ok(())
        })?;
        Ok(found)
    }

    fn validate_perfect(&self, m: &Matching) -> Result<Vec<usize>> {
        if m.pairs.len() != self.n {
            return Err(Error::NotPerfectMatching {
                reason: format!("{} pairs for a {}-row pencil", m.pairs.len(), self.n),
            });
        }
        let mut col_of_row = vec![0usize; self.n + 1];
        let mut col_seen = vec![false; self.n + 1];
        for &(r, c) in &m.pairs {
            if r == 0 || r > self.n || c == 0 || c > self.n {
                return Err(Error::NotPerfectMatching {
                    reason: format!("pair ({r}, {c}) out of range"),
                });
            }
            if col_of_row[r] != 0 || col_seen[c] {
                return Err(Error::NotPerfectMatching {
                    reason: format!("row {r} or column {c} matched twice"),
                });
            }
            if !self.has_edge(r, c) {
                return Err(Error::NotPerfectMatching {
                    reason: format!("({r}, {c}) is not a pencil edge"),
                });
            }
            col_of_row[r] = c;
            col_seen[c] = true;
        }
        Ok(col_of_row)
    }

    /// A cycle alternating between edges outside `m` and edges of `m`,
    /// returned as pencil edges in traversal order (even positions outside
    /// `m`, odd positions in `m`), or `None` — which certifies that `m` is
    /// the only perfect matching.
    pub fn alternating_cycle(&self, m: &Matching) -> Result<Option<Vec<(usize, usize)>>> {
        let col_of_row = self.validate_perfect(m)?;
        let mut row_of_col = vec![0usize; self.n + 1];
        for r in 1..=self.n {
            row_of_col[col_of_row[r]] = r;
        }
        // Exchange digraph on rows: a non-matching edge (r, c) steps to the
        // row currently holding column c. Any directed cycle there lifts to
        // an alternating cycle in the pencil.
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.n + 1]; // (next_row, via_col)
        for r in 1..=self.n {
            for &c in &self.row_cols[r] {
                if col_of_row[r] != c {
                    adj[r].push((row_of_col[c], c));
                }
            }
        }

        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        fn dfs(
            adj: &[Vec<(usize, usize)>],
            v: usize,
            color: &mut [Color],
            path: &mut Vec<(usize, usize)>, // (row, via_col used to reach it)
        ) -> Option<Vec<(usize, usize)>> {
            color[v] = Color::Gray;
            for &(w, via) in &adj[v] {
                match color[w] {
                    Color::Gray => {
                        // Cycle w -> ... -> v -> w; the path already ends at v.
                        let start = path.iter().position(|&(r, _)| r == w).unwrap();
                        let rows: Vec<usize> = path[start..].iter().map(|&(r, _)| r).collect();
                        let mut vias: Vec<usize> =
                            path[start + 1..].iter().map(|&(_, c)| c).collect();
                        vias.push(via);
                        return Some(rows.into_iter().zip(vias).collect());
                    }
                    Color::White => {
                        path.push((w, via));
                        if let Some(c) = dfs(adj, w, color, path) {
                            return Some(c);
                        }
                        path.pop();
                    }
                    Color::Black => {}
                }
            }
            color[v] = Color::Black;
            None
        }

        let mut color = vec![Color::White; self.n + 1];
        for start in 1..=self.n {
            if color[start] == Color::White {
                let mut path = vec![(start, 0)];
                // steps[k] = (row v_k, column used to leave v_k)
                if let Some(steps) = dfs(&adj, start, &mut color, &mut path) {
                    let k = steps.len();
                    let mut edges = Vec::with_capacity(2 * k);
                    for idx in 0..k {
                        let (row, via) = steps[idx];
                        let next_row = steps[(idx + 1) % k].0;
                        edges.push((row, via)); // outside m
                        debug_assert_eq!(col_of_row[next_row], via);
                        edges.push((next_row, via)); // in m
                    }
                    return Ok(Some(edges));
                }
            }
        }
        Ok(None)
    }

    /// Characteristic polynomial of the underlying matrix by signed
    /// expansion over perfect matchings: each matching contributes
    /// `sign(sigma) * prod_fixed (s - a_ii) * prod_moved (-a_ij)`.
    /// Exact for small-integer inputs; guarded against factorial blowup.
    pub fn char_poly_by_matchings(&self) -> Result<Vec<f64>> {
        if self.n > MAX_EXPANSION_SIZE {
            return Err(Error::TooLarge {
                n: self.n,
                max: MAX_EXPANSION_SIZE,
            });
        }
        let mut total = vec![0.0; self.n + 1];
        self.walk(&mut |sigma| {
            let mut scalar = match permutation_parity(sigma) {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
            };
            let mut term = vec![1.0]; // descending coefficients of the fixed part
            for (idx, &col) in sigma.iter().enumerate() {
                let row = idx + 1;
                if col == row {
                    // multiply by (s - a_ii)
                    let c = self.diag[row];
                    term.push(0.0);
                    for k in (1..term.len()).rev() {
                        let carry = term[k - 1] * -c;
                        term[k] += carry;
                    }
                } else {
                    scalar *= -self.off[&(row, col)];
                }
            }
            let degree = term.len() - 1;
            for (k, &t) in term.iter().enumerate() {
                total[self.n - degree + k] += scalar * t;
            }
            Ok(())
        })?;
        Ok(total)
    }
}

/// A set of pencil edges pairing every row with a distinct column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// `(row, col)` pairs, ascending by row.
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    fn from_assignment(sigma: &[usize]) -> Self {
        Matching {
            pairs: sigma.iter().enumerate().map(|(i, &c)| (i + 1, c)).collect(),
        }
    }

    /// The matching along the diagonal, which every pencil contains.
    pub fn diagonal(n: usize) -> Self {
        Matching {
            pairs: (1..=n).map(|i| (i, i)).collect(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.pairs.iter().all(|&(r, c)| r == c)
    }
}

enum Parity {
    Even,
    Odd,
}

/// Parity via cycle decomposition of the assignment (index 0 = row 1).
fn permutation_parity(sigma: &[usize]) -> Parity {
    let n = sigma.len();
    let mut seen = vec![false; n + 1];
    let mut transpositions = 0;
    for start in 1..=n {
        if !seen[start] {
            let mut len = 0;
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                v = sigma[v - 1];
                len += 1;
            }
            transpositions += len - 1;
        }
    }
    if transpositions % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Side-by-side cycle check: a directed cycle among the agents exists iff
/// the structural pencil admits an alternating cycle off the diagonal
/// matching. `equivalent` must always come back true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleEquivalence {
    pub digraph_has_cycle: bool,
    pub pencil_has_cycle: bool,
    pub equivalent: bool,
}

pub fn cycle_equivalence(g: &CommGraph) -> CycleEquivalence {
    let digraph_has_cycle = !g.is_acyclic();
    let pencil = PencilGraph::from_structure(g);
    let pencil_has_cycle = pencil
        .alternating_cycle(&Matching::diagonal(g.agent_count()))
        .expect("diagonal matching is always perfect")
        .is_some();
    CycleEquivalence {
        digraph_has_cycle,
        pencil_has_cycle,
        equivalent: digraph_has_cycle == pencil_has_cycle,
    }
}
