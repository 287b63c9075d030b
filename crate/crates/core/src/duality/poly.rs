//! Exact multivariate polynomials in the site variables `eta_x`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, Zero};

use crate::num::{format_rational, qu, Q};

/// Sparse polynomial: exponent vector (one entry per site) -> coefficient.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SitePolynomial {
    vars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl SitePolynomial {
    pub fn zero(vars: usize) -> Self {
        SitePolynomial {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: Q) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars], c);
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: Q) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// The coordinate function `eta_x`.
    pub fn var(vars: usize, x: usize) -> Self {
        let mut e = vec![0; vars];
        e[x] = 1;
        Self::monomial(e, qu(1))
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Q {
        self.terms.get(exponents).cloned().unwrap_or_else(Q::zero)
    }

    fn add_term(&mut self, exponents: Vec<u32>, c: Q) {
        debug_assert_eq!(exponents.len(), self.vars);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Reinterprets a polynomial in `self.vars` variables as one in `vars`
    /// variables, mapping old variable `i` to `targets[i]`.
    pub fn embed(&self, vars: usize, targets: &[usize]) -> Self {
        let mut out = Self::zero(vars);
        for (e, c) in &self.terms {
            let mut ne = vec![0; vars];
            for (i, &k) in e.iter().enumerate() {
                ne[targets[i]] += k;
            }
            out.add_term(ne, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.vars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    /// `d/d eta_x`.
    pub fn derivative(&self, x: usize) -> Self {
        let mut out = Self::zero(self.vars);
        for (e, c) in &self.terms {
            if e[x] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[x] -= 1;
            out.add_term(ne, c * qu(e[x] as u64));
        }
        out
    }

    /// Multiplication by `eta_x`.
    pub fn times_var(&self, x: usize) -> Self {
        let mut out = Self::zero(self.vars);
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            ne[x] += 1;
            out.add_term(ne, c.clone());
        }
        out
    }

    pub fn eval(&self, point: &[Q]) -> Q {
        assert_eq!(
            point.len(),
            self.vars,
            "evaluation point has wrong dimension"
        );
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .fold(c.clone(), |acc, (&k, x)| acc * crate::num::pow(x, k))
            })
            .sum()
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .fold(crate::num::to_f64(c), |acc, (&k, x)| acc * x.powi(k as i32))
            })
            .sum()
    }

    /// Largest absolute coefficient (zero for the zero polynomial).
    pub fn max_abs_coefficient(&self) -> Q {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Q::zero)
    }
}

impl Add for &SitePolynomial {
    type Output = SitePolynomial;
    fn add(self, rhs: &SitePolynomial) -> SitePolynomial {
        assert_eq!(self.vars, rhs.vars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &SitePolynomial {
    type Output = SitePolynomial;
    fn sub(self, rhs: &SitePolynomial) -> SitePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &SitePolynomial {
    type Output = SitePolynomial;
    fn neg(self) -> SitePolynomial {
        let mut out = SitePolynomial::zero(self.vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &SitePolynomial {
    type Output = SitePolynomial;
    fn mul(self, rhs: &SitePolynomial) -> SitePolynomial {
        assert_eq!(self.vars, rhs.vars);
        let mut out = SitePolynomial::zero(self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for SitePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_rational(c))?;
            for (x, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*e{x}")?,
                    _ => write!(f, "*e{x}^{k}")?,
                }
            }
        }
        Ok(())
    }
}
