//! The comparison inequality `U^a_n(t) f <= T^{a,b}_n(t) f` for `b > 0`
//! (reversed for `b < 0`) on positive-definite symmetric `f`.

use num_traits::{Signed, Zero};

use super::pd::{encode, is_positive_definite, PDFunction};
use super::CheckReport;
use crate::engine::{build_labeled_generator, semigroup_apply, FloatGenerator};
use crate::error::{Error, Result};
use crate::model::{LabeledConfig, SiteGraph};
use crate::num::{format_rational, Q};

/// Generators for one `(graph, n, a, b)`, reusable across test functions and times.
#[derive(Debug, Clone)]
pub struct ComparisonSetup {
    sites: usize,
    n: usize,
    a: Q,
    b: Q,
    interacting: FloatGenerator,
    independent: FloatGenerator,
    /// States of the interacting chain (all of `S^n` unless `b < 0`).
    states: Vec<LabeledConfig>,
    /// Position of each interacting state in the full lexicographic table.
    full_index: Vec<usize>,
}

impl ComparisonSetup {
    pub fn new(graph: &SiteGraph, n: usize, a: &Q, b: &Q) -> Result<Self> {
        let interacting = build_labeled_generator(graph, n, a, b)?;
        let independent = build_labeled_generator(graph, n, a, &Q::zero())?;
        let sites = graph.len();
        let states = interacting.states().to_vec();
        let full_index = states
            .iter()
            .map(|s| encode(s.positions(), sites))
            .collect();
        Ok(ComparisonSetup {
            sites,
            n,
            a: a.clone(),
            b: b.clone(),
            interacting: interacting.to_float(),
            independent: independent.to_float(),
            states,
            full_index,
        })
    }

    /// Checks one function at one time; `eps` is the uniformization tolerance.
    pub fn check(&self, f: &PDFunction, t: f64, eps: f64) -> Result<CheckReport> {
        if f.sites != self.sites || f.n != self.n {
            return Err(Error::InvalidParameter(format!(
                "function on {}^{} does not match {}^{}",
                f.sites, f.n, self.sites, self.n
            )));
        }
        if !f.symmetric {
            return Err(Error::Precondition("test function is not symmetric".into()));
        }
        let verdict = is_positive_definite(f)?;
        if !verdict.passed {
            return Err(Error::Precondition(format!(
                "test function is not positive definite (min eigenvalue {:.3e} at {})",
                verdict.min_eigenvalue, verdict.worst
            )));
        }
        let restricted: Vec<f64> = self.full_index.iter().map(|&i| f.values[i]).collect();
        let t_f = semigroup_apply(&self.interacting, &restricted, t, eps)?;
        let u_f = semigroup_apply(&self.independent, &f.values, t, eps)?;
        let sign = if self.b.is_positive() {
            1.0
        } else if self.b.is_negative() {
            -1.0
        } else {
            0.0
        };
        let mut worst = f64::INFINITY;
        let mut worst_case = String::new();
        for (k, &i) in self.full_index.iter().enumerate() {
            let margin = sign * (t_f.values[k] - u_f.values[i]);
            if margin < worst {
                worst = margin;
                worst_case = format!("start {:?}", self.states[k].positions());
            }
        }
        let name = format!(
            "comparison n={} a={} b={} t={t}",
            self.n,
            format_rational(&self.a),
            format_rational(&self.b)
        );
        Ok(CheckReport::new(
            name,
            self.states.len(),
            worst,
            2.0 * eps + 1e-10,
            worst_case,
        ))
    }
}

pub fn comparison_check(
    graph: &SiteGraph,
    n: usize,
    a: &Q,
    b: &Q,
    f: &PDFunction,
    t: f64,
    eps: f64,
) -> Result<CheckReport> {
    ComparisonSetup::new(graph, n, a, b)?.check(f, t, eps)
}
