//! Exact absorption probabilities.
//!
//! With `T` the transient states and `A` the absorbing ones, the matrix
//! `H(i, a) = P_i(absorbed at a)` solves `(-G_TT) H = G_TA`. The system is
//! solved by exact rational Gauss-Jordan elimination.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::hash::Hash;

use num_traits::{One, Zero};

use super::generator::GeneratorMatrix;
use crate::error::{Error, Result};
use crate::num::Q;

/// Absorption probabilities for every state that was solved for.
#[derive(Debug, Clone)]
pub struct AbsorptionTable {
    /// Indices of absorbing states (columns).
    pub absorbing: Vec<usize>,
    /// `rows[i]` is the distribution over `absorbing` started from state `i`;
    /// `None` for states outside the solved set.
    pub rows: Vec<Option<Vec<Q>>>,
}

impl AbsorptionTable {
    pub fn distribution(&self, start: usize) -> Option<&[Q]> {
        self.rows.get(start).and_then(|r| r.as_deref())
    }
}

fn reachable_from<S>(gen: &GeneratorMatrix<S>, start: usize) -> Vec<bool>
where
    S: Clone + Eq + Hash + Debug,
{
    let mut seen = vec![false; gen.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for (j, _) in gen.row(i) {
            if !seen[*j] {
                seen[*j] = true;
                queue.push_back(*j);
            }
        }
    }
    seen
}

fn reaches_absorption<S>(gen: &GeneratorMatrix<S>) -> Vec<bool>
where
    S: Clone + Eq + Hash + Debug,
{
    let n = gen.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in gen.row(i) {
            reverse[*j].push(i);
        }
    }
    let mut ok = vec![false; n];
    let mut queue: VecDeque<usize> = gen.absorbing().into();
    for &a in &queue {
        ok[a] = true;
    }
    while let Some(j) = queue.pop_front() {
        for &i in &reverse[j] {
            if !ok[i] {
                ok[i] = true;
                queue.push_back(i);
            }
        }
    }
    ok
}

/// Solves `A X = B` in place over the rationals; `A` must be nonsingular.
fn gauss_jordan(mut a: Vec<Vec<Q>>, mut b: Vec<Vec<Q>>) -> Result<Vec<Vec<Q>>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidConfig("singular absorption system".into()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Q::one() / &a[col][col];
        for v in a[col].iter_mut().skip(col) {
            *v *= &inv;
        }
        for v in b[col].iter_mut() {
            *v *= &inv;
        }
        let (pivot_a, pivot_b) = (a[col].clone(), b[col].clone());
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..n {
                if !pivot_a[c].is_zero() {
                    a[r][c] -= &factor * &pivot_a[c];
                }
            }
            for (c, pv) in pivot_b.iter().enumerate() {
                if !pv.is_zero() {
                    b[r][c] -= &factor * pv;
                }
            }
        }
    }
    Ok(b)
}

fn solve_on<S>(gen: &GeneratorMatrix<S>, include: &[bool]) -> Result<AbsorptionTable>
where
    S: Clone + Eq + Hash + Debug,
{
    let absorbing = gen.absorbing();
    let col_of: Vec<Option<usize>> = {
        let mut v = vec![None; gen.len()];
        for (c, &a) in absorbing.iter().enumerate() {
            v[a] = Some(c);
        }
        v
    };
    let transient: Vec<usize> = (0..gen.len())
        .filter(|&i| include[i] && !gen.is_absorbing(i))
        .collect();
    let mut pos = vec![usize::MAX; gen.len()];
    for (k, &i) in transient.iter().enumerate() {
        pos[i] = k;
    }
    let t = transient.len();
    let mut lhs = vec![vec![Q::zero(); t]; t];
    let mut rhs = vec![vec![Q::zero(); absorbing.len()]; t];
    for (k, &i) in transient.iter().enumerate() {
        lhs[k][k] = gen.exit_rate(i);
        for (j, r) in gen.row(i) {
            if let Some(c) = col_of[*j] {
                rhs[k][c] += r;
            } else {
                lhs[k][pos[*j]] -= r;
            }
        }
    }
    let solved = gauss_jordan(lhs, rhs)?;
    let mut rows: Vec<Option<Vec<Q>>> = vec![None; gen.len()];
    for (c, &a) in absorbing.iter().enumerate() {
        if include[a] {
            let mut point = vec![Q::zero(); absorbing.len()];
            point[c] = Q::one();
            rows[a] = Some(point);
        }
    }
    for (k, row) in solved.into_iter().enumerate() {
        rows[transient[k]] = Some(row);
    }
    Ok(AbsorptionTable { absorbing, rows })
}

fn closed_class_error<S: Debug>(state: &S) -> Error {
    Error::InvalidConfig(format!(
        "state {state:?} lies in a closed class without absorbing states"
    ))
}

/// Absorption distribution from `start`, as `(absorbing state index, probability)` pairs.
pub fn absorption_distribution<S>(gen: &GeneratorMatrix<S>, start: usize) -> Result<Vec<(usize, Q)>>
where
    S: Clone + Eq + Hash + Debug,
{
    if start >= gen.len() {
        return Err(Error::InvalidConfig(format!(
            "start index {start} out of range"
        )));
    }
    let reach = reachable_from(gen, start);
    let ok = reaches_absorption(gen);
    if let Some(bad) = (0..gen.len()).find(|&i| reach[i] && !ok[i]) {
        return Err(closed_class_error(&gen.states()[bad]));
    }
    let table = solve_on(gen, &reach)?;
    let dist = table
        .distribution(start)
        .expect("start is in the solved set");
    Ok(table
        .absorbing
        .iter()
        .cloned()
        .zip(dist.iter().cloned())
        .collect())
}

/// Absorption probabilities from every state at once.
pub fn absorption_table<S>(gen: &GeneratorMatrix<S>) -> Result<AbsorptionTable>
where
    S: Clone + Eq + Hash + Debug,
{
    let ok = reaches_absorption(gen);
    if let Some(bad) = ok.iter().position(|v| !v) {
        return Err(closed_class_error(&gen.states()[bad]));
    }
    solve_on(gen, &ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::build_absorbing_dual_generator;
    use crate::model::OccupationConfig;
    use crate::num::{q, qi};

    fn one_particle(n_sites: usize, i: usize) -> OccupationConfig {
        let mut v = vec![0; n_sites + 2];
        v[i] = 1;
        OccupationConfig::new(v)
    }

    fn right_probability(n_sites: usize, m: &Q, i: usize) -> Q {
        let gen = build_absorbing_dual_generator(n_sites, m, 1).unwrap();
        let start = gen.index_of(&one_particle(n_sites, i)).unwrap();
        let right = gen.index_of(&one_particle(n_sites, n_sites + 1)).unwrap();
        absorption_distribution(&gen, start)
            .unwrap()
            .into_iter()
            .find(|(a, _)| *a == right)
            .unwrap()
            .1
    }

    #[test]
    fn absorbed_start_is_a_point_mass() {
        let gen = build_absorbing_dual_generator(2, &qi(1), 1).unwrap();
        let start = gen.index_of(&one_particle(2, 0)).unwrap();
        let dist = absorption_distribution(&gen, start).unwrap();
        for (a, p) in dist {
            assert_eq!(p, if a == start { qi(1) } else { qi(0) });
        }
    }

    #[test]
    fn two_site_chain_at_half() {
        assert_eq!(right_probability(2, &q(1, 2), 1), q(1, 3));
        assert_eq!(right_probability(2, &q(1, 2), 2), q(2, 3));
    }

    #[test]
    fn symmetric_start_splits_evenly() {
        for m in [q(1, 2), qi(1), qi(3)] {
            assert_eq!(right_probability(5, &m, 3), q(1, 2));
        }
    }

    #[test]
    fn one_particle_probabilities_are_affine() {
        for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
            let n = 5;
            let h: Vec<Q> = (1..=n).map(|i| right_probability(n, &m, i)).collect();
            for w in h.windows(3) {
                assert_eq!(&w[0] - qi(2) * &w[1] + &w[2], qi(0));
            }
            // closed form (i + 2m - 1)/(N + 4m - 1)
            let expected = (qi(1) + qi(2) * &m - qi(1)) / (qi(n as i64) + qi(4) * &m - qi(1));
            assert_eq!(h[0], expected);
        }
    }

    #[test]
    fn distributions_sum_to_one() {
        let gen = build_absorbing_dual_generator(3, &q(1, 2), 3).unwrap();
        let table = absorption_table(&gen).unwrap();
        assert_eq!(table.absorbing.len(), 4);
        for i in 0..gen.len() {
            let total: Q = table.distribution(i).unwrap().iter().sum();
            assert_eq!(total, qi(1));
        }
    }

    #[test]
    fn closed_class_is_rejected() {
        let states = vec![0u8, 1, 2];
        let gen = GeneratorMatrix::from_transitions(states, |s| {
            Ok(match s {
                0 => vec![(1, qi(1))],
                1 => vec![(0, qi(1))],
                _ => vec![],
            })
        })
        .unwrap();
        assert!(matches!(
            absorption_distribution(&gen, 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(absorption_table(&gen).is_err());
        assert_eq!(absorption_distribution(&gen, 2).unwrap(), vec![(2, qi(1))]);
    }
}
