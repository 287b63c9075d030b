//! Edge-splitting schemes for the momentum and energy diffusions.
//!
//! Each time window of length `dt` visits every edge once in a random order.
//! The momentum process rotates `(η_x, η_y)` by a centered Gaussian angle of
//! variance `2p·dt`, which is exact for the edge operator `p·∂_θ²` and keeps
//! `Σ η²` invariant. The energy process takes an Euler-Maruyama step on
//! `u = η_x` with `s = η_x + η_y` frozen. Energies are kept on a dyadic grid
//! fine enough to carry 52 bits of the total, so every partial sum is exact
//! in floating point and `Σ η` is preserved bit for bit.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::SiteGraph;
use crate::num::{to_f64, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionRun {
    pub final_state: Vec<f64>,
    pub steps: u64,
    /// Energy steps that left `[0, s]` and were truncated to the boundary.
    pub clamps: u64,
    /// `(time, state)` after every window when recording was requested.
    pub trajectory: Option<Vec<(f64, Vec<f64>)>>,
}

impl DiffusionRun {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,site,value")?;
        for (t, s) in self.trajectory.iter().flatten() {
            for (x, v) in s.iter().enumerate() {
                writeln!(w, "{t},{x},{v}")?;
            }
        }
        Ok(())
    }
}

fn check_run(graph: &SiteGraph, start: &[f64], horizon: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time step must be > 0, got {dt}"
        )));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon must be finite and >= 0, got {horizon}"
        )));
    }
    if start.len() != graph.len() {
        return Err(Error::InvalidConfig(format!(
            "start has {} sites, graph has {}",
            start.len(),
            graph.len()
        )));
    }
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("start values must be finite".into()));
    }
    Ok(())
}

fn run<R, F>(
    graph: &SiteGraph,
    start: &[f64],
    horizon: f64,
    dt: f64,
    record: bool,
    rng: &mut R,
    mut edge_step: F,
) -> DiffusionRun
where
    R: Rng + ?Sized,
    F: FnMut(&mut [f64], usize, usize, f64, f64, &mut R) -> bool,
{
    let mut edges: Vec<(usize, usize, f64)> = graph
        .edges()
        .into_iter()
        .map(|(x, y, p)| (x, y, to_f64(&p)))
        .collect();
    let mut eta = start.to_vec();
    let mut trajectory = record.then(|| vec![(0.0, eta.clone())]);
    let (mut t, mut steps, mut clamps) = (0.0, 0u64, 0u64);
    let windows = (horizon / dt).ceil() as u64;
    for k in 0..windows {
        let h = if k + 1 == windows {
            horizon - k as f64 * dt
        } else {
            dt
        };
        if h <= 0.0 {
            break;
        }
        edges.shuffle(rng);
        for &(x, y, p) in &edges {
            if edge_step(&mut eta, x, y, p, h, rng) {
                clamps += 1;
            }
        }
        t += h;
        steps += 1;
        if let Some(tr) = trajectory.as_mut() {
            tr.push((t, eta.clone()));
        }
    }
    DiffusionRun {
        final_state: eta,
        steps,
        clamps,
        trajectory,
    }
}

/// Brownian momentum process by exact edge rotations.
pub fn simulate_bmp<R: Rng + ?Sized>(
    graph: &SiteGraph,
    start: &[f64],
    horizon: f64,
    dt: f64,
    record: bool,
    rng: &mut R,
) -> Result<DiffusionRun> {
    check_run(graph, start, horizon, dt)?;
    Ok(run(
        graph,
        start,
        horizon,
        dt,
        record,
        rng,
        |eta, x, y, p, h, rng| {
            let z: f64 = rng.sample(StandardNormal);
            let (s, c) = ((2.0 * p * h).sqrt() * z).sin_cos();
            let (u, v) = (eta[x], eta[y]);
            eta[x] = u * c - v * s;
            eta[y] = u * s + v * c;
            false
        },
    ))
}

/// Power of two `q` with `total < 2^52 q`.
fn energy_quantum(total: f64) -> f64 {
    if total <= 0.0 {
        return 1.0;
    }
    2f64.powi(total.log2().floor() as i32 + 1 - 52)
}

/// Brownian energy process with parameter `m` by antisymmetric Euler-Maruyama steps.
pub fn simulate_bep<R: Rng + ?Sized>(
    graph: &SiteGraph,
    m: &Q,
    start: &[f64],
    horizon: f64,
    dt: f64,
    record: bool,
    rng: &mut R,
) -> Result<DiffusionRun> {
    check_run(graph, start, horizon, dt)?;
    if start.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig("energies must be >= 0".into()));
    }
    let mf = to_f64(m);
    if !(mf > 0.0) {
        return Err(Error::InvalidParameter(format!("m must be > 0, got {m}")));
    }
    let quantum = energy_quantum(start.iter().sum());
    let start: Vec<f64> = start
        .iter()
        .map(|v| (v / quantum).round() * quantum)
        .collect();
    Ok(run(
        graph,
        &start,
        horizon,
        dt,
        record,
        rng,
        |eta, x, y, p, h, rng| {
            let (u, v) = (eta[x], eta[y]);
            let s = u + v;
            if s <= 0.0 {
                return false;
            }
            let z: f64 = rng.sample(StandardNormal);
            let drift = -2.0 * mf * p * (u - v);
            let sigma = (8.0 * p * u * v).max(0.0).sqrt();
            let step = ((drift * h + sigma * h.sqrt() * z) / quantum).round() * quantum;
            // the update moves `step` from y to x; clamp so both stay nonnegative
            let (delta, clamped) = if step > v {
                (v, true)
            } else if step < -u {
                (-u, true)
            } else {
                (step, false)
            };
            eta[x] = u + delta;
            eta[y] = v - delta;
            clamped
        },
    ))
}
