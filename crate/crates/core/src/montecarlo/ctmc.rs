//! Gillespie direct-method simulation of the jump processes.

use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::{LabeledConfig, OccupationConfig, Process, ProcessSpec, SiteGraph};
use crate::num::{to_f64, Q};

/// Boundary-driven runs abort when a site exceeds this occupancy.
pub const OCCUPANCY_CAP: u32 = 1_000_000;

/// Jump times and the states entered at those times; `times[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub horizon: f64,
}

impl<S> Trajectory<S> {
    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &S {
        let i = self.times.partition_point(|&s| s <= t);
        &self.states[i.saturating_sub(1)]
    }

    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory has a start state")
    }

    pub fn jumps(&self) -> usize {
        self.states.len() - 1
    }
}

impl Trajectory<OccupationConfig> {
    /// Writes `time,site,value` rows, one per site per recorded state.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,site,value")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            for (x, v) in s.counts().iter().enumerate() {
                writeln!(w, "{t},{x},{v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Jump(usize, usize),
    Birth(usize),
    Death(usize),
}

/// Floating-point rates of a process, precomputed once per run.
struct Rates<'a> {
    graph: &'a [Vec<(usize, f64)>],
    a: f64,
    b: f64,
    reservoirs: Vec<(usize, f64)>,
    half_m: f64,
}

impl<'a> Rates<'a> {
    fn new(process: &'a Process, neighbors: &'a [Vec<(usize, f64)>]) -> Self {
        let (a, b) = process.spec().ab().expect("every variant has (a, b)");
        let (reservoirs, half_m) = match process.spec() {
            ProcessSpec::BoundaryDrivenSip {
                m,
                lambda_l,
                lambda_r,
                n_sites,
            } => (
                vec![(0, to_f64(lambda_l)), (*n_sites - 1, to_f64(lambda_r))],
                to_f64(m) / 2.0,
            ),
            _ => (Vec::new(), 0.0),
        };
        Rates {
            graph: neighbors,
            a: to_f64(&a),
            b: to_f64(&b),
            reservoirs,
            half_m,
        }
    }

    fn events(&self, eta: &[u32], out: &mut Vec<(Event, f64)>) {
        out.clear();
        for (x, &k) in eta.iter().enumerate() {
            if k == 0 {
                continue;
            }
            for &(y, p) in &self.graph[x] {
                let r = p * k as f64 * (self.a + self.b * eta[y] as f64);
                if r > 0.0 {
                    out.push((Event::Jump(x, y), r));
                }
            }
        }
        for &(site, lambda) in &self.reservoirs {
            let k = eta[site] as f64;
            let birth = (self.half_m + k) * lambda / (1.0 - lambda);
            if birth > 0.0 {
                out.push((Event::Birth(site), birth));
            }
            let death = k / (1.0 - lambda);
            if death > 0.0 {
                out.push((Event::Death(site), death));
            }
        }
    }
}

fn neighbor_table(graph: &SiteGraph) -> Vec<Vec<(usize, f64)>> {
    (0..graph.len())
        .map(|x| graph.neighbors_f64(x).to_vec())
        .collect()
}

fn pick<R: Rng + ?Sized, E: Copy>(events: &[(E, f64)], total: f64, rng: &mut R) -> E {
    let mut u = rng.gen::<f64>() * total;
    for &(e, r) in events {
        if u < r {
            return e;
        }
        u -= r;
    }
    events.last().expect("nonempty event list").0
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// Runs the occupation process up to `horizon`, calling `observe(time, state)`
/// at time 0 and after every jump. Returns the final state.
pub fn run_ctmc<R, F>(
    process: &Process,
    start: &OccupationConfig,
    horizon: f64,
    rng: &mut R,
    mut observe: F,
) -> Result<OccupationConfig>
where
    R: Rng + ?Sized,
    F: FnMut(f64, &OccupationConfig),
{
    check_horizon(horizon)?;
    process.check_state(start)?;
    let neighbors = neighbor_table(process.graph());
    let rates = Rates::new(process, &neighbors);
    let conservative = process.spec().is_conservative();
    let mut eta = start.clone();
    let total = eta.total();
    let mut t = 0.0;
    let mut events = Vec::new();
    observe(t, &eta);
    loop {
        rates.events(eta.counts(), &mut events);
        let out: f64 = events.iter().map(|(_, r)| r).sum();
        if out <= 0.0 {
            break;
        }
        t += rng.sample::<f64, _>(Exp1) / out;
        if t > horizon {
            break;
        }
        match pick(&events, out, rng) {
            Event::Jump(x, y) => {
                eta.0[x] -= 1;
                eta.0[y] += 1;
            }
            Event::Birth(x) => {
                eta.0[x] += 1;
                if eta.0[x] > OCCUPANCY_CAP {
                    return Err(Error::Resource(format!(
                        "occupancy at site {x} exceeded {OCCUPANCY_CAP}"
                    )));
                }
            }
            Event::Death(x) => eta.0[x] -= 1,
        }
        if conservative && eta.total() != total {
            return Err(Error::InvalidSpec(
                "particle number changed in a conservative process".into(),
            ));
        }
        observe(t, &eta);
    }
    Ok(eta)
}

/// Full recorded trajectory of the occupation process.
pub fn simulate_ctmc<R: Rng + ?Sized>(
    process: &Process,
    start: &OccupationConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory<OccupationConfig>> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    run_ctmc(process, start, horizon, rng, |t, s| {
        times.push(t);
        states.push(s.clone());
    })?;
    Ok(Trajectory {
        times,
        states,
        horizon,
    })
}

/// Labeled dynamics with rates `p(x_i, y)(a + b #{j : x_j = y})`.
pub fn simulate_labeled<R: Rng + ?Sized>(
    graph: &SiteGraph,
    a: &Q,
    b: &Q,
    start: &LabeledConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory<LabeledConfig>> {
    check_horizon(horizon)?;
    start.check_sites(graph.len())?;
    ProcessSpec::GeneralizedAb {
        a: a.clone(),
        b: b.clone(),
    }
    .validate()?;
    let (af, bf) = (to_f64(a), to_f64(b));
    let neighbors = neighbor_table(graph);
    let mut counts = vec![0i64; graph.len()];
    for &x in start.positions() {
        counts[x] += 1;
    }
    if bf < 0.0 {
        let cap = af / -bf;
        if counts.iter().any(|&c| c as f64 > cap) {
            return Err(Error::InvalidConfig(format!(
                "start {start:?} exceeds the exclusion cap"
            )));
        }
    }
    let mut pos = start.positions().to_vec();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![start.clone()];
    let mut events: Vec<((usize, usize), f64)> = Vec::new();
    loop {
        events.clear();
        for (i, &x) in pos.iter().enumerate() {
            for &(y, p) in &neighbors[x] {
                let r = p * (af + bf * counts[y] as f64);
                if r > 0.0 {
                    events.push(((i, y), r));
                }
            }
        }
        let out: f64 = events.iter().map(|(_, r)| r).sum();
        if out <= 0.0 {
            break;
        }
        t += rng.sample::<f64, _>(Exp1) / out;
        if t > horizon {
            break;
        }
        let (i, y) = pick(&events, out, rng);
        counts[pos[i]] -= 1;
        counts[y] += 1;
        pos[i] = y;
        times.push(t);
        states.push(LabeledConfig::new(pos.clone()));
    }
    Ok(Trajectory {
        times,
        states,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{build_sector_generator, semigroup_apply};
    use crate::montecarlo::{replica_rng, replicate};
    use crate::num::{q, qi};

    #[test]
    fn zero_horizon_is_the_start() {
        let p = Process::new(ProcessSpec::sip(qi(1)), SiteGraph::two_site()).unwrap();
        let start = OccupationConfig::new(vec![2, 0]);
        let tr = simulate_ctmc(&p, &start, 0.0, &mut replica_rng(1, 0)).unwrap();
        assert_eq!(tr.states, vec![start]);
    }

    #[test]
    fn packed_exclusion_never_moves() {
        let p = Process::new(ProcessSpec::sep(1), SiteGraph::complete(3).unwrap()).unwrap();
        let start = OccupationConfig::new(vec![1, 1, 1]);
        let tr = simulate_ctmc(&p, &start, 100.0, &mut replica_rng(1, 0)).unwrap();
        assert_eq!(tr.jumps(), 0);
    }

    #[test]
    fn inclusion_law_matches_semigroup() {
        let p = Process::new(ProcessSpec::sip(qi(1)), SiteGraph::two_site()).unwrap();
        let start = OccupationConfig::new(vec![2, 0]);
        let target = OccupationConfig::new(vec![1, 1]);
        let gen = build_sector_generator(&p, 2).unwrap();
        let f: Vec<f64> = gen
            .states()
            .iter()
            .map(|s| (*s == target) as u8 as f64)
            .collect();
        let exact = semigroup_apply(&gen.to_float(), &f, 0.3, 1e-12)
            .unwrap()
            .values[gen.index_of(&start).unwrap()];
        let est = replicate(10_000, 5, |rng| {
            let mut last = start.clone();
            run_ctmc(&p, &start, 0.3, rng, |_, s| last = s.clone())?;
            Ok((last == target) as u8 as f64)
        })
        .unwrap();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn conservation_along_trajectories() {
        let p = Process::new(ProcessSpec::sip(q(1, 2)), SiteGraph::cycle(4).unwrap()).unwrap();
        let start = OccupationConfig::new(vec![3, 0, 1, 2]);
        let tr = simulate_ctmc(&p, &start, 5.0, &mut replica_rng(3, 0)).unwrap();
        assert!(tr.jumps() > 10);
        assert!(tr.states.iter().all(|s| s.total() == 6));
    }

    #[test]
    fn boundary_runs_change_mass_only_at_the_ends() {
        let p = Process::boundary(qi(1), q(1, 2), q(1, 3), 4).unwrap();
        let tr = simulate_ctmc(
            &p,
            &OccupationConfig::zeros(4),
            20.0,
            &mut replica_rng(4, 0),
        )
        .unwrap();
        for w in tr.states.windows(2) {
            let d: Vec<i64> = (0..4)
                .map(|x| w[1].get(x) as i64 - w[0].get(x) as i64)
                .collect();
            let net: i64 = d.iter().sum();
            if net != 0 {
                assert!(d[1] == 0 && d[2] == 0);
            }
        }
    }

    #[test]
    fn independent_walkers_meet_at_the_product_rate() {
        // two independent rate-1 walkers on two sites: P(same site at t) = (1 + e^{-4t})/2
        let g = SiteGraph::two_site();
        let start = LabeledConfig::new(vec![0, 0]);
        let t = 0.4;
        let est = replicate(10_000, 11, |rng| {
            let tr = simulate_labeled(&g, &qi(1), &qi(0), &start, t, rng)?;
            let s = tr.final_state();
            Ok((s.positions()[0] == s.positions()[1]) as u8 as f64)
        })
        .unwrap();
        let single_stay = (1.0 + (-2.0 * t).exp()) / 2.0;
        let exact = single_stay * single_stay + (1.0 - single_stay) * (1.0 - single_stay);
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn single_particle_exit_time() {
        let g = SiteGraph::two_site();
        let start = LabeledConfig::new(vec![0]);
        let est = replicate(10_000, 12, |rng| {
            let tr = simulate_labeled(&g, &qi(3), &qi(4), &start, 50.0, rng)?;
            Ok(tr.times[1])
        })
        .unwrap();
        assert!(est.within(1.0 / 3.0, 3.0), "{est:?}");
    }

    #[test]
    fn reruns_are_identical() {
        let p = Process::new(ProcessSpec::sep(2), SiteGraph::path(3).unwrap()).unwrap();
        let start = OccupationConfig::new(vec![2, 1, 0]);
        let a = simulate_ctmc(&p, &start, 3.0, &mut replica_rng(8, 2)).unwrap();
        let b = simulate_ctmc(&p, &start, 3.0, &mut replica_rng(8, 2)).unwrap();
        assert_eq!(a, b);
    }
}
