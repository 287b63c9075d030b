use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{q, to_f64, Q};

/// Tolerance applied to kernel checks when entries came from floating-point input.
pub const FLOAT_KERNEL_TOL: f64 = 1e-12;

/// One failed kernel invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelViolation {
    NotSquare { rows: usize, sites: usize },
    Negative { x: usize, y: usize },
    Symmetry { x: usize, y: usize },
    Diagonal { x: usize },
    RowSum { x: usize, sum: String },
    Disconnected,
}

impl fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelViolation::NotSquare { rows, sites } => {
                write!(
                    f,
                    "kernel is not {sites}x{sites} (found {rows} rows or a ragged row)"
                )
            }
            KernelViolation::Negative { x, y } => write!(f, "negative entry at ({x},{y})"),
            KernelViolation::Symmetry { x, y } => write!(f, "symmetry violation at ({x},{y})"),
            KernelViolation::Diagonal { x } => write!(f, "diagonal violation at {x}"),
            KernelViolation::RowSum { x, sum } => write!(f, "row {x} sums to {sum}, not 1"),
            KernelViolation::Disconnected => write!(f, "graph is not connected"),
        }
    }
}

/// How strictly the kernel is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// Symmetric random-walk transition probabilities: rows sum to one.
    Stochastic,
    /// Symmetric edge weights without the row-sum constraint (e.g. open paths).
    SymmetricWeights,
}

/// Finite site set with a symmetric jump kernel `p(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteGraph {
    sites: Vec<String>,
    kernel: Vec<Vec<Q>>,
    kind: KernelKind,
    float_origin: bool,
    neighbors: Vec<Vec<(usize, Q)>>,
    neighbors_f64: Vec<Vec<(usize, f64)>>,
}

impl SiteGraph {
    /// Builds a graph whose kernel satisfies every invariant of a symmetric
    /// random-walk transition matrix.
    pub fn new(sites: Vec<String>, kernel: Vec<Vec<Q>>) -> Result<Self> {
        Self::build(sites, kernel, KernelKind::Stochastic, false)
    }

    pub fn with_kind(
        sites: Vec<String>,
        kernel: Vec<Vec<Q>>,
        kind: KernelKind,
        float_origin: bool,
    ) -> Result<Self> {
        Self::build(sites, kernel, kind, float_origin)
    }

    fn build(
        sites: Vec<String>,
        kernel: Vec<Vec<Q>>,
        kind: KernelKind,
        float_origin: bool,
    ) -> Result<Self> {
        let graph = Self::unchecked(sites, kernel, kind, float_origin);
        let violations = validate_kernel(&graph);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidConfig(format!(
                "kernel rejected: {}",
                msg.join("; ")
            )));
        }
        Ok(graph)
    }

    /// Constructs without validation; pair with [`validate_kernel`] for diagnostics.
    pub fn unchecked(
        sites: Vec<String>,
        kernel: Vec<Vec<Q>>,
        kind: KernelKind,
        float_origin: bool,
    ) -> Self {
        let neighbors: Vec<Vec<(usize, Q)>> = kernel
            .iter()
            .enumerate()
            .map(|(x, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(y, p)| *y != x && !p.is_zero())
                    .map(|(y, p)| (y, p.clone()))
                    .collect()
            })
            .collect();
        let neighbors_f64 = neighbors
            .iter()
            .map(|row| row.iter().map(|(y, p)| (*y, to_f64(p))).collect())
            .collect();
        SiteGraph {
            sites,
            kernel,
            kind,
            float_origin,
            neighbors,
            neighbors_f64,
        }
    }

    fn default_names(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    /// Two sites with `p(0,1) = p(1,0) = 1`.
    pub fn two_site() -> Self {
        Self::new(
            Self::default_names(2),
            vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]],
        )
        .expect("two-site kernel is valid")
    }

    /// Ring of `n >= 3` sites, nearest-neighbour weights 1/2.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "cycle needs >= 3 sites, got {n}"
            )));
        }
        let mut k = vec![vec![q(0, 1); n]; n];
        for x in 0..n {
            let y = (x + 1) % n;
            k[x][y] = q(1, 2);
            k[y][x] = q(1, 2);
        }
        Self::new(Self::default_names(n), k)
    }

    /// Complete graph with uniform kernel `1/(n-1)`; `complete(3)` is the triangle.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "complete graph needs >= 2 sites, got {n}"
            )));
        }
        let w = q(1, n as i64 - 1);
        let k = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| if x == y { q(0, 1) } else { w.clone() })
                    .collect()
            })
            .collect();
        Self::new(Self::default_names(n), k)
    }

    /// Open path of `n` sites with symmetric nearest-neighbour weight `1/2`.
    ///
    /// For `n >= 3` no symmetric zero-diagonal stochastic kernel exists on a path,
    /// so this is a [`KernelKind::SymmetricWeights`] graph; `path(2)` is [`two_site`](Self::two_site).
    pub fn path(n: usize) -> Result<Self> {
        match n {
            0 | 1 => Err(Error::InvalidParameter(format!(
                "path needs >= 2 sites, got {n}"
            ))),
            2 => Ok(Self::two_site()),
            _ => Self::path_with_weight(n, q(1, 2)),
        }
    }

    /// Open path with a constant edge weight.
    pub fn path_with_weight(n: usize, w: Q) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "path needs at least one site".into(),
            ));
        }
        let mut k = vec![vec![q(0, 1); n]; n];
        for x in 0..n - 1 {
            k[x][x + 1] = w.clone();
            k[x + 1][x] = w.clone();
        }
        Self::with_kind(
            Self::default_names(n),
            k,
            KernelKind::SymmetricWeights,
            false,
        )
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn site_index(&self, name: &str) -> Option<usize> {
        self.sites.iter().position(|s| s == name)
    }

    pub fn kernel(&self) -> &[Vec<Q>] {
        &self.kernel
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn float_origin(&self) -> bool {
        self.float_origin
    }

    pub fn p(&self, x: usize, y: usize) -> &Q {
        &self.kernel[x][y]
    }

    /// Sites `y != x` with `p(x, y) > 0`.
    pub fn neighbors(&self, x: usize) -> &[(usize, Q)] {
        &self.neighbors[x]
    }

    pub fn neighbors_f64(&self, x: usize) -> &[(usize, f64)] {
        &self.neighbors_f64[x]
    }

    /// Unordered edges `{x, y}` with `x < y` and positive weight.
    pub fn edges(&self) -> Vec<(usize, usize, Q)> {
        let mut out = Vec::new();
        for x in 0..self.len() {
            for (y, p) in &self.neighbors[x] {
                if x < *y {
                    out.push((x, *y, p.clone()));
                }
            }
        }
        out
    }
}

/// Lists every violated kernel invariant; empty iff the kernel is admissible
/// for the graph's [`KernelKind`].
pub fn validate_kernel(graph: &SiteGraph) -> Vec<KernelViolation> {
    let n = graph.sites.len();
    let k = &graph.kernel;
    let mut out = Vec::new();
    if k.len() != n || k.iter().any(|row| row.len() != n) {
        out.push(KernelViolation::NotSquare {
            rows: k.len(),
            sites: n,
        });
        return out;
    }
    let tol = if graph.float_origin {
        FLOAT_KERNEL_TOL
    } else {
        0.0
    };
    let differ = |a: &Q, b: &Q| -> bool {
        if tol == 0.0 {
            a != b
        } else {
            (to_f64(a) - to_f64(b)).abs() > tol
        }
    };
    for x in 0..n {
        for y in 0..n {
            if k[x][y].is_negative() {
                out.push(KernelViolation::Negative { x, y });
            }
        }
    }
    for x in 0..n {
        for y in (x + 1)..n {
            if differ(&k[x][y], &k[y][x]) {
                out.push(KernelViolation::Symmetry { x, y });
            }
        }
    }
    for x in 0..n {
        if differ(&k[x][x], &Q::zero()) {
            out.push(KernelViolation::Diagonal { x });
        }
    }
    if graph.kind == KernelKind::Stochastic {
        for (x, row) in k.iter().enumerate() {
            let sum: Q = row.iter().sum();
            if differ(&sum, &q(1, 1)) {
                out.push(KernelViolation::RowSum {
                    x,
                    sum: crate::num::format_rational(&sum),
                });
            }
        }
    }
    if n > 0 && !is_connected(k) {
        out.push(KernelViolation::Disconnected);
    }
    out
}

fn is_connected(k: &[Vec<Q>]) -> bool {
    let n = k.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for y in 0..n {
            let linked = k[x][y].is_positive() || k[y][x].is_positive();
            if !seen[y] && linked {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn two_site_is_clean() {
        assert!(validate_kernel(&SiteGraph::two_site()).is_empty());
    }

    #[test]
    fn asymmetric_entry_is_reported() {
        let g = SiteGraph::unchecked(
            names(2),
            vec![vec![q(0, 1), q(1, 1)], vec![q(1, 2), q(0, 1)]],
            KernelKind::Stochastic,
            false,
        );
        let v = validate_kernel(&g);
        assert!(v.contains(&KernelViolation::Symmetry { x: 0, y: 1 }));
    }

    #[test]
    fn diagonal_entry_is_reported() {
        let g = SiteGraph::unchecked(
            names(3),
            vec![
                vec![q(1, 10), q(1, 2), q(0, 1)],
                vec![q(1, 2), q(0, 1), q(1, 2)],
                vec![q(0, 1), q(1, 2), q(0, 1)],
            ],
            KernelKind::SymmetricWeights,
            false,
        );
        assert_eq!(
            validate_kernel(&g),
            vec![KernelViolation::Diagonal { x: 0 }]
        );
    }

    #[test]
    fn disconnected_and_row_sum() {
        let z = q(0, 1);
        let g = SiteGraph::unchecked(
            names(3),
            vec![
                vec![z.clone(), q(1, 1), z.clone()],
                vec![q(1, 1), z.clone(), z.clone()],
                vec![z.clone(), z.clone(), z.clone()],
            ],
            KernelKind::Stochastic,
            false,
        );
        let v = validate_kernel(&g);
        assert!(v.contains(&KernelViolation::Disconnected));
        assert!(v
            .iter()
            .any(|e| matches!(e, KernelViolation::RowSum { x: 2, .. })));
    }

    #[test]
    fn float_kernels_use_tolerance() {
        let third = crate::num::from_f64(1.0 / 3.0).unwrap();
        let k = (0..4)
            .map(|x| {
                (0..4)
                    .map(|y| if x == y { q(0, 1) } else { third.clone() })
                    .collect()
            })
            .collect();
        assert!(SiteGraph::with_kind(names(4), k, KernelKind::Stochastic, true).is_ok());
    }

    #[test]
    fn standard_graphs() {
        assert!(SiteGraph::cycle(6).is_ok());
        assert!(SiteGraph::complete(3).is_ok());
        let p = SiteGraph::path(4).unwrap();
        assert_eq!(p.kind(), KernelKind::SymmetricWeights);
        assert_eq!(p.edges().len(), 3);
        // a stochastic reading of an open 3-path is impossible
        let k = p.kernel().to_vec();
        let strict = SiteGraph::unchecked(names(4), k, KernelKind::Stochastic, false);
        assert!(!validate_kernel(&strict).is_empty());
    }
}
