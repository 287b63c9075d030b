//! Finite-time meeting diagnostics for labeled SIP(m) walkers.
//!
//! With `η_t = Σ_i δ_{X_i(t)}`, `c = (m/2)(m/2+1)` and `K = c/(m/2)^2`, the chain
//!
//! `P(∃ i≠j: X_i = X_j) <= Σ_z E[η_t(z)^2 - η_t(z)] = c Σ_z E[d(2, η_t(z))]
//!   = c Σ_z E_{z,z}[D(δ_X+δ_Y, η_0)] <= K Σ_z E_{z,z}[η_0(X) η_0(Y)]
//!   = K Σ_z Σ_{i,j} P_{z,z}(X = x_i, Y = x_j) <= K n^2 sup_{x,y} P_{x,y}(X_t = Y_t)`
//!
//! is evaluated at every time of a grid.

use serde::{Deserialize, Serialize};

use crate::duality::sip_d;
use crate::engine::{build_labeled_generator, semigroup_apply};
use crate::error::{Error, Result};
use crate::model::{LabeledConfig, SiteGraph};
use crate::num::{qi, to_f64, Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingRow {
    pub t: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
    pub q6: f64,
    pub q7: f64,
    pub ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingReport {
    pub points: Vec<usize>,
    pub rows: Vec<MeetingRow>,
    pub tolerance: f64,
    pub ordering_holds: bool,
}

pub fn meeting_probability_report(
    graph: &SiteGraph,
    m: &Q,
    points: &[usize],
    t_grid: &[f64],
    eps: f64,
) -> Result<MeetingReport> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("need at least two walkers".into()));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if let Some(x) = points.iter().find(|&&x| x >= graph.len()) {
        return Err(Error::InvalidConfig(format!("point {x} outside the graph")));
    }
    let (a, b) = (qi(2) * m, qi(4));
    let half = to_f64(m) / 2.0;
    let c = half * (half + 1.0);
    let k = c / (half * half);
    let n = points.len();
    let sites = graph.len();

    let many = build_labeled_generator(graph, n, &a, &b)?;
    let start = many
        .index_of(&LabeledConfig::new(points.to_vec()))
        .expect("labeled states are complete");
    let many_f = many.to_float();
    let pairs = |s: &LabeledConfig| -> f64 {
        let p = s.positions();
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                count += (i != j && p[i] == p[j]) as usize;
            }
        }
        count as f64
    };
    let any_meet: Vec<f64> = many
        .states()
        .iter()
        .map(|s| (pairs(s) > 0.0) as u8 as f64)
        .collect();
    let ordered_pairs: Vec<f64> = many.states().iter().map(pairs).collect();
    let d2: Vec<f64> = many
        .states()
        .iter()
        .map(|s| {
            (0..sites)
                .map(|z| to_f64(&sip_d(2, s.count_at(z) as u32, m)))
                .sum::<f64>()
        })
        .collect();

    let two = build_labeled_generator(graph, 2, &a, &b)?;
    let two_f = two.to_float();
    let eta0: Vec<u32> = (0..sites)
        .map(|z| points.iter().filter(|&&x| x == z).count() as u32)
        .collect();
    let d_pair: Vec<f64> = two
        .states()
        .iter()
        .map(|s| {
            let (x, y) = (s.positions()[0], s.positions()[1]);
            if x == y {
                to_f64(&sip_d(2, eta0[x], m))
            } else {
                to_f64(&(sip_d(1, eta0[x], m) * sip_d(1, eta0[y], m)))
            }
        })
        .collect();
    let eta_pair: Vec<f64> = two
        .states()
        .iter()
        .map(|s| (eta0[s.positions()[0]] * eta0[s.positions()[1]]) as f64)
        .collect();
    let hit_pairs: Vec<f64> = two
        .states()
        .iter()
        .map(|s| {
            let (x, y) = (s.positions()[0], s.positions()[1]);
            let mut count = 0usize;
            for &xi in points {
                for &xj in points {
                    count += (x == xi && y == xj) as usize;
                }
            }
            count as f64
        })
        .collect();
    let together: Vec<f64> = two
        .states()
        .iter()
        .map(|s| (s.positions()[0] == s.positions()[1]) as u8 as f64)
        .collect();
    let diagonal: Vec<usize> = (0..sites)
        .map(|z| {
            two.index_of(&LabeledConfig::new(vec![z, z]))
                .expect("diagonal state")
        })
        .collect();

    let tolerance = 1e-9 * (k * (n * n) as f64).max(1.0);
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let at_start =
            |f: &[f64]| -> Result<f64> { Ok(semigroup_apply(&many_f, f, t, eps)?.values[start]) };
        let q1 = at_start(&any_meet)?;
        let q2 = at_start(&ordered_pairs)?;
        let q3 = c * at_start(&d2)?;
        let on_diagonal = |f: &[f64]| -> Result<f64> {
            let v = semigroup_apply(&two_f, f, t, eps)?.values;
            Ok(diagonal.iter().map(|&i| v[i]).sum())
        };
        let q4 = c * on_diagonal(&d_pair)?;
        let q5 = k * on_diagonal(&eta_pair)?;
        let q6 = k * on_diagonal(&hit_pairs)?;
        let meet = semigroup_apply(&two_f, &together, t, eps)?.values;
        let q7 = k * (n * n) as f64 * meet.iter().cloned().fold(0.0, f64::max);
        let close = |u: f64, v: f64| (u - v).abs() <= tolerance;
        let ordered = q1 <= q2 + tolerance
            && close(q2, q3)
            && close(q3, q4)
            && q4 <= q5 + tolerance
            && close(q5, q6)
            && q6 <= q7 + tolerance;
        rows.push(MeetingRow {
            t,
            q1,
            q2,
            q3,
            q4,
            q5,
            q6,
            q7,
            ordered,
        });
    }
    Ok(MeetingReport {
        points: points.to_vec(),
        ordering_holds: rows.iter().all(|r| r.ordered),
        rows,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    #[test]
    fn torus_chain_is_ordered() {
        let g = SiteGraph::cycle(6).unwrap();
        let r =
            meeting_probability_report(&g, &qi(1), &[0, 3], &[0.0, 0.5, 1.0, 3.0], 1e-13).unwrap();
        assert!(r.ordering_holds, "{r:?}");
        assert_eq!(r.rows[0].q1, 0.0);
        let row = &r.rows[2];
        assert!(row.q1 > 0.0 && row.q7 > row.q6);
    }

    #[test]
    fn general_m_and_three_walkers() {
        let g = SiteGraph::path(4).unwrap();
        for m in [q(1, 2), qi(2), q(7, 3)] {
            let r = meeting_probability_report(&g, &m, &[0, 1, 3], &[0.2, 1.0], 1e-13).unwrap();
            assert!(r.ordering_holds, "{r:?}");
        }
    }

    #[test]
    fn coincident_start_meets_at_time_zero() {
        let g = SiteGraph::cycle(4).unwrap();
        let r = meeting_probability_report(&g, &qi(1), &[1, 1], &[0.0], 1e-13).unwrap();
        assert_eq!(r.rows[0].q1, 1.0);
        assert_eq!(r.rows[0].q2, 2.0);
        assert!(r.ordering_holds);
    }

    #[test]
    fn validation() {
        let g = SiteGraph::cycle(4).unwrap();
        assert!(meeting_probability_report(&g, &qi(1), &[1], &[0.0], 1e-13).is_err());
        assert!(meeting_probability_report(&g, &qi(1), &[1, 2], &[], 1e-13).is_err());
    }
}
