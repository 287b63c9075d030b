use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::io::Write;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{
    configs_with_total, enumerate_absorbing_dual_moves, enumerate_labeled_moves, enumerate_moves,
    LabeledConfig, OccupationConfig, Process, SiteGraph,
};
use crate::num::{format_rational, to_f64, Q};

/// Largest state space any builder will materialize.
pub const STATE_GUARD: usize = 1_000_000;

/// Sparse generator of a finite continuous-time Markov chain.
///
/// Off-diagonal rates are exact and nonnegative; the diagonal is implied
/// (`-row sum`), so rows sum to zero by construction.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    rows: Vec<Vec<(usize, Q)>>,
}

impl<S: Clone + Eq + Hash + Debug> GeneratorMatrix<S> {
    /// Assembles a generator from a state list and a transition function.
    /// Transitions must stay inside `states`.
    pub fn from_transitions<F>(states: Vec<S>, mut transitions: F) -> Result<Self>
    where
        F: FnMut(&S) -> Result<Vec<(S, Q)>>,
    {
        if states.len() > STATE_GUARD {
            return Err(guard_error(states.len()));
        }
        let index: HashMap<S, usize> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let mut rows = Vec::with_capacity(states.len());
        for s in &states {
            let mut acc: HashMap<usize, Q> = HashMap::new();
            for (t, rate) in transitions(s)? {
                if rate.is_negative() {
                    return Err(Error::InvalidSpec(format!(
                        "negative rate {rate} from {s:?}"
                    )));
                }
                if rate.is_zero() || &t == s {
                    continue;
                }
                let j = *index.get(&t).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "transition {s:?} -> {t:?} leaves the state space"
                    ))
                })?;
                *acc.entry(j).or_insert_with(Q::zero) += rate;
            }
            let mut row: Vec<(usize, Q)> = acc.into_iter().collect();
            row.sort_by_key(|(j, _)| *j);
            rows.push(row);
        }
        Ok(GeneratorMatrix {
            states,
            index,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn row(&self, i: usize) -> &[(usize, Q)] {
        &self.rows[i]
    }

    /// Off-diagonal entry `G(i, j)`.
    pub fn rate(&self, i: usize, j: usize) -> Q {
        self.rows[i]
            .iter()
            .find(|(k, _)| *k == j)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn exit_rate(&self, i: usize) -> Q {
        self.rows[i].iter().map(|(_, r)| r).sum()
    }

    /// Diagonal entry `-exit_rate(i)`.
    pub fn diagonal(&self, i: usize) -> Q {
        -self.exit_rate(i)
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.rows[i].is_empty()
    }

    pub fn absorbing(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_absorbing(i)).collect()
    }

    /// Exact `(G f)(i)`.
    pub fn apply_exact(&self, f: &[Q]) -> Vec<Q> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|(j, r)| r * (&f[*j] - &f[i])).sum())
            .collect()
    }

    pub fn to_float(&self) -> FloatGenerator {
        let rows: Vec<Vec<(usize, f64)>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|(j, r)| (*j, to_f64(r))).collect())
            .collect();
        let exit = rows
            .iter()
            .map(|r| r.iter().map(|(_, v)| v).sum())
            .collect();
        FloatGenerator { rows, exit }
    }

    /// Writes `row,col,value` triplets, diagonal included.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "row,col,value")?;
        for (i, row) in self.rows.iter().enumerate() {
            writeln!(w, "{i},{i},{}", format_rational(&self.diagonal(i)))?;
            for (j, r) in row {
                writeln!(w, "{i},{j},{}", format_rational(r))?;
            }
        }
        Ok(())
    }
}

/// Floating-point view of a generator used by the semigroup.
#[derive(Debug, Clone)]
pub struct FloatGenerator {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub exit: Vec<f64>,
}

impl FloatGenerator {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_exit(&self) -> f64 {
        self.exit.iter().cloned().fold(0.0, f64::max)
    }
}

fn guard_error(n: usize) -> Error {
    Error::Resource(format!(
        "state space of {n} states exceeds guard {STATE_GUARD}"
    ))
}

fn checked_power(base: usize, exp: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc
            .checked_mul(base)
            .filter(|&v| v <= STATE_GUARD)
            .ok_or_else(|| {
                Error::Resource(format!("{base}^{exp} states exceeds guard {STATE_GUARD}"))
            })?;
    }
    Ok(acc)
}

/// All labeled configurations in `S^n`, optionally restricted to per-site counts `<= cap`.
pub fn labeled_states(sites: usize, n: usize, cap: Option<usize>) -> Result<Vec<LabeledConfig>> {
    let total = checked_power(sites, n)?;
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; n];
    for _ in 0..total {
        let config = LabeledConfig::new(cur.clone());
        if cap.is_none_or(|c| (0..sites).all(|y| config.count_at(y) <= c)) {
            out.push(config);
        }
        for digit in cur.iter_mut().rev() {
            *digit += 1;
            if *digit < sites {
                break;
            }
            *digit = 0;
        }
    }
    Ok(out)
}

/// Labeled `n`-particle generator with rates `p(x_i, y)(a + b #{j : x_j = y})`.
///
/// For `b >= 0` the state space is all of `S^n`. For `b < 0` it is the set of
/// tuples with at most `a/(-b)` particles per site, which the dynamics never
/// leaves; `a/(-b)` must then be a positive integer.
pub fn build_labeled_generator(
    graph: &SiteGraph,
    n: usize,
    a: &Q,
    b: &Q,
) -> Result<GeneratorMatrix<LabeledConfig>> {
    if a.is_negative() {
        return Err(Error::InvalidSpec(format!(
            "walk rate a must be >= 0, got {a}"
        )));
    }
    let cap = if b.is_negative() {
        let ratio = a / (-b);
        if !ratio.is_integer() || ratio.is_zero() {
            return Err(Error::InvalidSpec(format!(
                "b < 0 needs a/(-b) to be a positive integer, got {ratio}"
            )));
        }
        Some(ratio.to_integer().try_into().unwrap_or(usize::MAX))
    } else {
        None
    };
    let states = labeled_states(graph.len(), n, cap)?;
    GeneratorMatrix::from_transitions(states, |s| enumerate_labeled_moves(s, a, b, graph))
}

/// Generator of a conservative occupation process restricted to `|eta| = total`.
pub fn build_sector_generator(
    process: &Process,
    total: u32,
) -> Result<GeneratorMatrix<OccupationConfig>> {
    if !process.spec().is_conservative() {
        return Err(Error::InvalidSpec(format!(
            "{} does not conserve particles; sectors are undefined",
            process.spec().name()
        )));
    }
    let sites = process.graph().len();
    let states = configs_with_total(sites, total, process.spec().cap());
    GeneratorMatrix::from_transitions(states, |s| {
        Ok(enumerate_moves(process, s)?
            .into_iter()
            .map(|mv| (mv.target, mv.rate))
            .collect())
    })
}

/// Absorbing dual of the boundary-driven chain with `n` dual particles on `0..=N+1`.
pub fn build_absorbing_dual_generator(
    n_sites: usize,
    m: &Q,
    n: u32,
) -> Result<GeneratorMatrix<OccupationConfig>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "need at least one dual particle".into(),
        ));
    }
    if !m.is_positive() {
        return Err(Error::InvalidSpec(format!(
            "SIP parameter must be > 0, got {m}"
        )));
    }
    let states = configs_with_total(n_sites + 2, n, None);
    GeneratorMatrix::from_transitions(states, |s| enumerate_absorbing_dual_moves(n_sites, m, s))
}
