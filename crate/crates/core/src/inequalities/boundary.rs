//! Steady state of the boundary-driven SIP through its absorbing dual:
//! `∫ D(ξ, η) dμ = E_ξ[ρ_L^{ξ_0(∞)} ρ_R^{ξ_{N+1}(∞)}]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::engine::{
    absorption_table, build_absorbing_dual_generator, AbsorptionTable, GeneratorMatrix,
};
use crate::error::{Error, Result};
use crate::model::OccupationConfig;
use crate::num::{format_rational, pow, qi, qu, serde_q, to_f64, Q};

/// Largest number of dual particles handled by the exact steady-state solver.
pub const MAX_BOUNDARY_POINTS: usize = 3;

struct BoundaryDual {
    gen: GeneratorMatrix<OccupationConfig>,
    table: AbsorptionTable,
}

type Cache = Mutex<HashMap<(usize, Q, u32), Arc<BoundaryDual>>>;

fn dual(n_sites: usize, m: &Q, n: u32) -> Result<Arc<BoundaryDual>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (n_sites, m.clone(), n);
    if let Some(hit) = cache.lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let gen = build_absorbing_dual_generator(n_sites, m, n)?;
    let table = absorption_table(&gen)?;
    let entry = Arc::new(BoundaryDual { gen, table });
    cache.lock().expect("cache lock").insert(key, entry.clone());
    Ok(entry)
}

pub fn reservoir_density(lambda: &Q) -> Result<Q> {
    if lambda.is_negative() || *lambda >= Q::one() {
        return Err(Error::InvalidParameter(format!(
            "reservoir parameter must lie in [0, 1), got {}",
            format_rational(lambda)
        )));
    }
    Ok(lambda / (Q::one() - lambda))
}

/// Steady-state moment `∫ D(Σ_i δ_{x_i}, η) dμ` with `points` in `1..=N`.
pub fn boundary_moment(n_sites: usize, m: &Q, rho_l: &Q, rho_r: &Q, points: &[usize]) -> Result<Q> {
    if points.is_empty() {
        return Ok(Q::one());
    }
    if points.len() > MAX_BOUNDARY_POINTS {
        return Err(Error::Resource(format!(
            "at most {MAX_BOUNDARY_POINTS} dual particles, got {}",
            points.len()
        )));
    }
    if let Some(x) = points.iter().find(|&&x| x == 0 || x > n_sites) {
        return Err(Error::InvalidConfig(format!(
            "point {x} outside 1..={n_sites}"
        )));
    }
    if n_sites == 0 {
        return Err(Error::InvalidParameter(
            "chain needs at least one site".into(),
        ));
    }
    let dual = dual(n_sites, m, points.len() as u32)?;
    let mut xi = vec![0u32; n_sites + 2];
    for &x in points {
        xi[x] += 1;
    }
    let start = dual
        .gen
        .index_of(&OccupationConfig::new(xi))
        .expect("dual state is enumerated");
    let dist = dual.table.distribution(start).expect("all states solved");
    let mut acc = Q::zero();
    for (col, pr) in dual.table.absorbing.iter().zip(dist) {
        if pr.is_zero() {
            continue;
        }
        let s = &dual.gen.states()[*col];
        acc += pr * pow(rho_l, s.get(0)) * pow(rho_r, s.get(n_sites + 1));
    }
    Ok(acc)
}

/// `∫ D(Σ δ_{x_i}) dμ >= Π_i ∫ D(δ_{x_i}) dμ`, decided in exact arithmetic.
pub fn boundary_correlation_check(
    n_sites: usize,
    m: &Q,
    lambda_l: &Q,
    lambda_r: &Q,
    points: &[usize],
) -> Result<CheckReport> {
    let (rho_l, rho_r) = (reservoir_density(lambda_l)?, reservoir_density(lambda_r)?);
    let lhs = boundary_moment(n_sites, m, &rho_l, &rho_r, points)?;
    let mut rhs = Q::one();
    for &x in points {
        rhs *= boundary_moment(n_sites, m, &rho_l, &rho_r, &[x])?;
    }
    let margin = &lhs - &rhs;
    let name = format!(
        "boundary-correlation N={n_sites} m={} λL={} λR={}",
        format_rational(m),
        format_rational(lambda_l),
        format_rational(lambda_r)
    );
    let case = format!(
        "points {points:?} lhs={} rhs={}",
        format_rational(&lhs),
        format_rational(&rhs)
    );
    let mut report = CheckReport::new(name, 1, to_f64(&margin), 1e-12, case);
    report.passed = !margin.is_negative() || to_f64(&margin) >= -1e-12;
    report.exact_margin = Some(format_rational(&margin));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    #[serde(with = "serde_q::vec")]
    pub profile: Vec<Q>,
    #[serde(with = "serde_q::vec")]
    pub second_differences: Vec<Q>,
    pub affine: bool,
    /// `ρ_L (1 - i/(N+1)) + ρ_R i/(N+1)`.
    #[serde(with = "serde_q::vec")]
    pub linear_formula: Vec<Q>,
    #[serde(with = "serde_q::vec")]
    pub deviation: Vec<Q>,
    pub max_deviation: f64,
    pub matches_linear_formula: bool,
}

/// Exact steady-state densities `∫ D(δ_i, η) dμ` for `i = 1..=N`.
pub fn density_profile(n_sites: usize, m: &Q, lambda_l: &Q, lambda_r: &Q) -> Result<ProfileReport> {
    let (rho_l, rho_r) = (reservoir_density(lambda_l)?, reservoir_density(lambda_r)?);
    let profile: Vec<Q> = (1..=n_sites)
        .map(|i| boundary_moment(n_sites, m, &rho_l, &rho_r, &[i]))
        .collect::<Result<_>>()?;
    let second_differences: Vec<Q> = profile
        .windows(3)
        .map(|w| &w[0] - qi(2) * &w[1] + &w[2])
        .collect();
    let affine = second_differences.iter().all(Zero::is_zero);
    let len = qu(n_sites as u64 + 1);
    let linear_formula: Vec<Q> = (1..=n_sites)
        .map(|i| {
            let s = qu(i as u64) / &len;
            &rho_l * (Q::one() - &s) + &rho_r * s
        })
        .collect();
    let deviation: Vec<Q> = profile
        .iter()
        .zip(&linear_formula)
        .map(|(p, l)| p - l)
        .collect();
    let max_deviation = deviation
        .iter()
        .map(|d| to_f64(d).abs())
        .fold(0.0, f64::max);
    Ok(ProfileReport {
        matches_linear_formula: deviation.iter().all(Zero::is_zero),
        profile,
        second_differences,
        affine,
        linear_formula,
        deviation,
        max_deviation,
    })
}
