//! Functions on `S^n` and the pairwise positive-definiteness test: for every
//! pair of coordinates and every fixing of the others, the induced
//! `|S| x |S|` matrix must be positive semidefinite.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::STATE_GUARD;
use crate::error::{Error, Result};
use crate::num::{q, qi, serde_q, to_f64, Q};

/// Eigenvalue tolerance of the floating-point test.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Table of `f(x_1, ..., x_n)`, indexed lexicographically with `x_1` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct PDFunction {
    pub sites: usize,
    pub n: usize,
    pub values: Vec<f64>,
    pub exact: Option<Vec<Q>>,
    pub symmetric: bool,
}

fn table_size(sites: usize, n: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..n {
        size = size
            .checked_mul(sites)
            .filter(|&s| s <= STATE_GUARD)
            .ok_or_else(|| {
                Error::Resource(format!("{sites}^{n} entries exceeds guard {STATE_GUARD}"))
            })?;
    }
    Ok(size)
}

fn decode(mut index: usize, sites: usize, n: usize) -> Vec<usize> {
    let mut x = vec![0; n];
    for slot in x.iter_mut().rev() {
        *slot = index % sites;
        index /= sites;
    }
    x
}

pub fn encode(x: &[usize], sites: usize) -> usize {
    x.iter().fold(0, |acc, &v| acc * sites + v)
}

impl PDFunction {
    pub fn from_fn<F: Fn(&[usize]) -> f64>(sites: usize, n: usize, f: F) -> Result<Self> {
        let size = table_size(sites, n)?;
        let values = (0..size).map(|i| f(&decode(i, sites, n))).collect();
        Ok(Self::finish(sites, n, values, None))
    }

    pub fn from_exact_fn<F: Fn(&[usize]) -> Q>(sites: usize, n: usize, f: F) -> Result<Self> {
        let size = table_size(sites, n)?;
        let exact: Vec<Q> = (0..size).map(|i| f(&decode(i, sites, n))).collect();
        let values = exact.iter().map(to_f64).collect();
        Ok(Self::finish(sites, n, values, Some(exact)))
    }

    fn finish(sites: usize, n: usize, values: Vec<f64>, exact: Option<Vec<Q>>) -> Self {
        let mut f = PDFunction {
            sites,
            n,
            values,
            exact,
            symmetric: false,
        };
        f.symmetric = f.check_symmetric();
        f
    }

    pub fn get(&self, x: &[usize]) -> f64 {
        self.values[encode(x, self.sites)]
    }

    /// Invariance under adjacent transpositions, which generate all permutations.
    fn check_symmetric(&self) -> bool {
        (0..self.values.len()).all(|i| {
            let x = decode(i, self.sites, self.n);
            (0..self.n.saturating_sub(1)).all(|k| {
                let mut y = x.clone();
                y.swap(k, k + 1);
                let j = encode(&y, self.sites);
                match &self.exact {
                    Some(e) => e[i] == e[j],
                    None => self.values[i] == self.values[j],
                }
            })
        })
    }
}

/// Outcome of [`is_positive_definite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdVerdict {
    pub passed: bool,
    pub min_eigenvalue: f64,
    /// Verdict of the exact rational test, when the function is rational-valued.
    pub exact: Option<bool>,
    pub worst: String,
}

/// Exact positive-semidefiniteness of a symmetric rational matrix by
/// symmetric Gaussian elimination with largest-diagonal pivoting.
pub fn is_psd_exact(mut a: Vec<Vec<Q>>) -> bool {
    let n = a.len();
    if (0..n).any(|i| (0..n).any(|j| a[i][j] != a[j][i])) {
        return false;
    }
    let mut alive: Vec<usize> = (0..n).collect();
    while !alive.is_empty() {
        let &k = alive
            .iter()
            .max_by(|&&i, &&j| a[i][i].cmp(&a[j][j]))
            .expect("nonempty");
        let pivot = a[k][k].clone();
        if pivot.is_negative() {
            return false;
        }
        if pivot.is_zero() {
            // all remaining diagonals are 0, so the remaining block must vanish
            return alive
                .iter()
                .all(|&i| alive.iter().all(|&j| a[i][j].is_zero()));
        }
        alive.retain(|&i| i != k);
        for &i in &alive {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &pivot;
            for &j in &alive {
                let delta = &factor * &a[k][j];
                a[i][j] -= delta;
            }
        }
    }
    true
}

/// Pairwise positive-definiteness, with the other coordinates fixed.
pub fn is_positive_definite(f: &PDFunction) -> Result<PdVerdict> {
    let (s, n) = (f.sites, f.n);
    table_size(s, n)?;
    let mut min_eig = f64::INFINITY;
    let mut exact_ok = f.exact.as_ref().map(|_| true);
    let mut worst = String::new();
    if n < 2 {
        // a one-variable function has no pairs; treat it as trivially positive definite
        return Ok(PdVerdict {
            passed: true,
            min_eigenvalue: 0.0,
            exact: exact_ok,
            worst,
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            let others = n - 2;
            let fixings = table_size(s, others)?;
            for r in 0..fixings {
                let rest = decode(r, s, others);
                let point = |a: usize, b: usize| {
                    let mut x = Vec::with_capacity(n);
                    let mut it = rest.iter();
                    for k in 0..n {
                        x.push(if k == i {
                            a
                        } else if k == j {
                            b
                        } else {
                            *it.next().expect("fixing has n-2 entries")
                        });
                    }
                    encode(&x, s)
                };
                let m = DMatrix::from_fn(s, s, |a, b| f.values[point(a, b)]);
                let asym =
                    (0..s).any(|a| (0..s).any(|b| (m[(a, b)] - m[(b, a)]).abs() > PD_TOLERANCE));
                let eig = if asym {
                    f64::NEG_INFINITY
                } else {
                    SymmetricEigen::new(m)
                        .eigenvalues
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                };
                if eig < min_eig {
                    min_eig = eig;
                    worst = format!(
                        "pair ({}, {}) with others fixed at {:?}",
                        i + 1,
                        j + 1,
                        rest
                    );
                }
                if let (Some(ok), Some(e)) = (exact_ok.as_mut(), f.exact.as_ref()) {
                    if *ok {
                        let block: Vec<Vec<Q>> = (0..s)
                            .map(|a| (0..s).map(|b| e[point(a, b)].clone()).collect())
                            .collect();
                        if !is_psd_exact(block) {
                            *ok = false;
                            worst = format!(
                                "pair ({}, {}) with others fixed at {:?} (exact)",
                                i + 1,
                                j + 1,
                                rest
                            );
                        }
                    }
                }
            }
        }
    }
    let passed = match exact_ok {
        Some(v) => v,
        None => min_eig >= -PD_TOLERANCE,
    };
    Ok(PdVerdict {
        passed,
        min_eigenvalue: min_eig,
        exact: exact_ok,
        worst,
    })
}

/// Symmetric test functions built from positive-definite pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TestFunction {
    /// `Σ_u β(u) Π_i I(x_i = u)`.
    Diagonal {
        #[serde(with = "serde_q::vec")]
        beta: Vec<Q>,
    },
    /// `Π_i g(x_i)`.
    Product {
        #[serde(with = "serde_q::vec")]
        g: Vec<Q>,
    },
    /// `Σ_k c_k Π_i g_k(x_i)`.
    Gram { terms: Vec<GramTerm> },
    /// Explicit table in lexicographic order.
    Table {
        #[serde(with = "serde_q::vec")]
        values: Vec<Q>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramTerm {
    #[serde(with = "serde_q")]
    pub coeff: Q,
    #[serde(with = "serde_q::vec")]
    pub g: Vec<Q>,
}

impl TestFunction {
    pub fn evaluate(&self, x: &[usize]) -> Q {
        match self {
            TestFunction::Diagonal { beta } => {
                if x.iter().all(|&v| v == x[0]) && !x.is_empty() {
                    beta[x[0]].clone()
                } else {
                    Q::zero()
                }
            }
            TestFunction::Product { g } => x.iter().map(|&v| g[v].clone()).product(),
            TestFunction::Gram { terms } => terms
                .iter()
                .map(|t| &t.coeff * x.iter().map(|&v| t.g[v].clone()).product::<Q>())
                .sum(),
            TestFunction::Table { .. } => unreachable!("tables are materialized directly"),
        }
    }

    pub fn to_pd_function(&self, sites: usize, n: usize) -> Result<PDFunction> {
        let len_ok = |v: &[Q]| v.len() == sites;
        let ok = match self {
            TestFunction::Diagonal { beta } => len_ok(beta),
            TestFunction::Product { g } => len_ok(g),
            TestFunction::Gram { terms } => terms.iter().all(|t| len_ok(&t.g)),
            TestFunction::Table { values } => values.len() == table_size(sites, n)?,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "test function does not match {sites} sites and {n} variables"
            )));
        }
        match self {
            TestFunction::Table { values } => {
                PDFunction::from_exact_fn(sites, n, |x| values[encode(x, sites)].clone())
            }
            _ => PDFunction::from_exact_fn(sites, n, |x| self.evaluate(x)),
        }
    }
}

fn small_rational<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64) -> Q {
    q(rng.gen_range(lo..=hi), rng.gen_range(1..=4))
}

/// Random positive-definite symmetric test function. Gram terms use
/// nonnegative `g` when `n >= 3`, since a negative fixed coordinate could
/// flip the sign of a rank-one block; for `n = 2` signed `g` are allowed.
pub fn random_test_function<R: Rng + ?Sized>(sites: usize, n: usize, rng: &mut R) -> TestFunction {
    let signed = n == 2;
    let vector = |rng: &mut R, signed: bool| -> Vec<Q> {
        (0..sites)
            .map(|_| small_rational(rng, if signed { -4 } else { 0 }, 4))
            .collect()
    };
    match rng.gen_range(0..4) {
        0 => TestFunction::Diagonal {
            beta: vector(rng, false),
        },
        1 => TestFunction::Product {
            g: vector(rng, false),
        },
        2 => {
            // duality moment of a local-stationary product measure: Π ρ(x_i) with ρ > 0
            TestFunction::Product {
                g: (0..sites).map(|_| small_rational(rng, 1, 8)).collect(),
            }
        }
        _ => {
            let k = rng.gen_range(1..=3);
            TestFunction::Gram {
                terms: (0..k)
                    .map(|_| GramTerm {
                        coeff: small_rational(rng, 0, 4),
                        g: vector(rng, signed),
                    })
                    .collect(),
            }
        }
    }
}

/// Identity-like kernel `I(x_1 = ... = x_n)`.
pub fn indicator_diagonal(sites: usize) -> TestFunction {
    TestFunction::Diagonal {
        beta: vec![qi(1); sites],
    }
}
