//! Exact residuals of the duality relations `(L D(xi, .))(eta) = (L^ D(., eta))(xi)`.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diffusion::{apply_diffusion_generator, DiffusionFamily};
use super::poly::SitePolynomial;
use super::single::{sip_d, DiscreteFamily, SingleSiteTable};
use super::{boundary_duality, duality_product_cached, DualConfig};
use crate::error::{Error, Result};
use crate::model::{
    boundary_birth_rate, boundary_death_rate, configs_with_max, configs_with_total_at_most,
    enumerate_absorbing_dual_moves, enumerate_moves, OccupationConfig, Process, ProcessSpec,
    SiteGraph,
};
use crate::num::{format_rational, qu, Q};

/// Outcome of an exhaustive duality sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub family: String,
    pub graph: String,
    /// Exact rational, formatted `p/q`.
    pub max_abs_residual: String,
    pub cases_checked: u64,
    pub worst_case: Option<String>,
    /// For diffusions: the constant `c` with `L D = c L^ D` when the raw residual is nonzero.
    pub scale: Option<String>,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.max_abs_residual == "0"
    }
}

pub fn describe_graph(graph: &SiteGraph) -> String {
    let rows: Vec<String> = graph
        .kernel()
        .iter()
        .map(|r| r.iter().map(format_rational).collect::<Vec<_>>().join(" "))
        .collect();
    format!("{} sites [{}]", graph.len(), rows.join("; "))
}

fn discrete_family(spec: &ProcessSpec) -> Result<DiscreteFamily> {
    match spec {
        ProcessSpec::Sip { m } => Ok(DiscreteFamily::Sip { m: m.clone() }),
        ProcessSpec::Sep { n } => Ok(DiscreteFamily::Sep { n: *n }),
        other => Err(Error::InvalidPairing(format!(
            "self-duality is implemented for SIP and SEP, not {}",
            other.name()
        ))),
    }
}

/// `(L D(xi,.))(eta) - (L D(.,eta))(xi)` for the self-dual SIP(m) / SEP(n).
pub fn self_duality_residual(
    process: &Process,
    table: &SingleSiteTable,
    xi: &DualConfig,
    eta: &OccupationConfig,
) -> Result<Q> {
    if xi.len() != eta.len() {
        return Err(Error::InvalidConfig(
            "dual and configuration live on different site sets".into(),
        ));
    }
    let base = duality_product_cached(xi, eta, table)?;
    let mut lhs = Q::zero();
    for mv in enumerate_moves(process, eta)? {
        lhs += mv.rate * (duality_product_cached(xi, &mv.target, table)? - &base);
    }
    let mut rhs = Q::zero();
    for mv in enumerate_moves(process, xi)? {
        rhs += mv.rate * (duality_product_cached(&mv.target, eta, table)? - &base);
    }
    Ok(lhs - rhs)
}

/// Residual of the boundary duality between the reservoir-driven chain and its
/// absorbing dual.
pub fn boundary_duality_residual(
    process: &Process,
    xi: &DualConfig,
    eta: &OccupationConfig,
) -> Result<Q> {
    let ProcessSpec::BoundaryDrivenSip {
        m,
        lambda_l,
        lambda_r,
        n_sites,
    } = process.spec()
    else {
        return Err(Error::InvalidPairing(
            "boundary duality needs a BoundaryDrivenSIP".into(),
        ));
    };
    if xi.len() != n_sites + 2 || eta.len() != *n_sites {
        return Err(Error::InvalidConfig(format!(
            "expected dual on N+2 = {} sites and configuration on N = {n_sites}",
            n_sites + 2
        )));
    }
    let rho = |l: &Q| l / (Q::from_integer(1.into()) - l);
    let (rl, rr) = (rho(lambda_l), rho(lambda_r));
    let base = boundary_duality(xi, eta, m, &rl, &rr)?;
    let mut lhs = Q::zero();
    for mv in enumerate_moves(process, eta)? {
        lhs += mv.rate * (boundary_duality(xi, &mv.target, m, &rl, &rr)? - &base);
    }
    let mut rhs = Q::zero();
    for (target, rate) in enumerate_absorbing_dual_moves(*n_sites, m, xi)? {
        rhs += rate * (boundary_duality(&target, eta, m, &rl, &rr)? - &base);
    }
    Ok(lhs - rhs)
}

/// Both sides of a diffusion duality as polynomials in the site variables.
#[derive(Debug, Clone)]
pub struct PolynomialResidual {
    pub generator_side: SitePolynomial,
    pub dual_side: SitePolynomial,
    pub residual: SitePolynomial,
}

impl PolynomialResidual {
    /// The constant `c` with `generator_side = c * dual_side`, if one exists.
    pub fn scale(&self) -> Option<Q> {
        if self.dual_side.is_zero() {
            return self
                .generator_side
                .is_zero()
                .then(|| Q::from_integer(1.into()));
        }
        let (e, d) = self.dual_side.terms().next()?;
        let c = self.generator_side.coefficient(e) / d;
        (self.generator_side == self.dual_side.scale(&c)).then_some(c)
    }
}

/// Coefficient-wise residual of `L_diff D(xi,.) - sum_xi' r(xi,xi') (D(xi',.) - D(xi,.))`,
/// the dual being SIP(1) for BMP and SIP(m) for BEP(m) on the same graph.
pub fn diffusion_duality_residual(
    graph: &SiteGraph,
    family: &DiffusionFamily,
    xi: &DualConfig,
) -> Result<PolynomialResidual> {
    if xi.len() != graph.len() {
        return Err(Error::InvalidConfig(
            "dual configuration and graph disagree on sites".into(),
        ));
    }
    let dual = Process::new(ProcessSpec::sip(family.dual_sip_m()), graph.clone())?;
    let d_xi = family.duality_polynomial(xi);
    let generator_side = apply_diffusion_generator(&d_xi, graph, family);
    let mut dual_side = SitePolynomial::zero(graph.len());
    for mv in enumerate_moves(&dual, xi)? {
        let diff = &family.duality_polynomial(&mv.target) - &d_xi;
        dual_side = &dual_side + &diff.scale(&mv.rate);
    }
    let residual = &generator_side - &dual_side;
    Ok(PolynomialResidual {
        generator_side,
        dual_side,
        residual,
    })
}

fn fold_worst(
    acc: (Q, Option<String>, u64),
    item: (Q, Option<String>, u64),
) -> (Q, Option<String>, u64) {
    let count = acc.2 + item.2;
    if item.0 > acc.0 {
        (item.0, item.1, count)
    } else {
        (acc.0, acc.1, count)
    }
}

/// Exhaustive self-duality check over all `|xi| <= max_dual` and all `eta`
/// with per-site occupancy `<= max_occupancy`.
pub fn verify_self_duality(
    process: &Process,
    max_dual: u32,
    max_occupancy: u32,
) -> Result<DualityReport> {
    let family = discrete_family(process.spec())?;
    let sites = process.graph().len();
    let cap = family.cap();
    let occ_max = cap.map_or(max_occupancy, |c| c.min(max_occupancy));
    let table = SingleSiteTable::new(family.clone(), max_dual, occ_max + 2);
    let duals = configs_with_total_at_most(sites, max_dual, cap);
    let etas = configs_with_max(sites, occ_max);
    let (worst, worst_case, cases) = duals
        .par_iter()
        .map(|xi| -> Result<(Q, Option<String>, u64)> {
            let mut acc = (Q::zero(), None, 0u64);
            for eta in &etas {
                let r = self_duality_residual(process, &table, xi, eta)?.abs();
                let case = (!r.is_zero()).then(|| format!("xi={:?} eta={:?}", xi.0, eta.0));
                acc = fold_worst(acc, (r, case, 1));
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((Q::zero(), None, 0), fold_worst);
    Ok(DualityReport {
        family: process.spec().name(),
        graph: describe_graph(process.graph()),
        max_abs_residual: format_rational(&worst),
        cases_checked: cases,
        worst_case,
        scale: None,
    })
}

/// Exhaustive boundary duality check: duals on `0..=N+1` with `|xi| <= max_dual`,
/// configurations on `1..=N` with per-site occupancy `<= max_occupancy`.
pub fn verify_boundary_duality(
    process: &Process,
    max_dual: u32,
    max_occupancy: u32,
) -> Result<DualityReport> {
    let ProcessSpec::BoundaryDrivenSip { n_sites, .. } = process.spec() else {
        return Err(Error::InvalidPairing(
            "boundary duality needs a BoundaryDrivenSIP".into(),
        ));
    };
    let duals = configs_with_total_at_most(n_sites + 2, max_dual, None);
    let etas = configs_with_max(*n_sites, max_occupancy);
    let (worst, worst_case, cases) = duals
        .par_iter()
        .map(|xi| -> Result<(Q, Option<String>, u64)> {
            let mut acc = (Q::zero(), None, 0u64);
            for eta in &etas {
                let r = boundary_duality_residual(process, xi, eta)?.abs();
                let case = (!r.is_zero()).then(|| format!("xi={:?} eta={:?}", xi.0, eta.0));
                acc = fold_worst(acc, (r, case, 1));
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((Q::zero(), None, 0), fold_worst);
    Ok(DualityReport {
        family: process.spec().name(),
        graph: format!("chain 1..{n_sites} with reservoirs"),
        max_abs_residual: format_rational(&worst),
        cases_checked: cases,
        worst_case,
        scale: None,
    })
}

/// Coefficient-wise diffusion duality over all `|xi| <= max_dual`.
///
/// A nonzero residual is never rescaled away: when a single constant relates
/// both sides for every case it is reported in `scale`.
pub fn verify_diffusion_duality(
    graph: &SiteGraph,
    family: &DiffusionFamily,
    max_dual: u32,
) -> Result<DualityReport> {
    let duals = configs_with_total_at_most(graph.len(), max_dual, None);
    let results = duals
        .par_iter()
        .map(|xi| diffusion_duality_residual(graph, family, xi).map(|r| (xi.clone(), r)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = Q::zero();
    let mut worst_case = None;
    let mut scales: Vec<Option<Q>> = Vec::new();
    for (xi, r) in &results {
        let c = r.residual.max_abs_coefficient();
        if c > worst {
            worst = c;
            worst_case = Some(format!("xi={:?} residual={}", xi.0, r.residual));
        }
        if !r.dual_side.is_zero() {
            scales.push(r.scale());
        }
    }
    let scale = if worst.is_zero() {
        None
    } else {
        match scales.first() {
            Some(Some(c)) if scales.iter().all(|s| s.as_ref() == Some(c)) => {
                Some(format_rational(c))
            }
            _ => Some("none".to_string()),
        }
    };
    Ok(DualityReport {
        family: format!(
            "{} <-> SIP({})",
            family.name(),
            format_rational(&family.dual_sip_m())
        ),
        graph: describe_graph(graph),
        max_abs_residual: format_rational(&worst),
        cases_checked: results.len() as u64,
        worst_case,
        scale,
    })
}

/// Largest `|b(n)(d(k,n+1)-d(k,n)) + d(n)(d(k,n-1)-d(k,n)) - k(d(k-1,n)ρ - d(k,n))|`
/// over `1 <= k <= n <= max_n`, with `ρ = λ/(1-λ)` and the reservoir rates of the boundary chain.
pub fn reservoir_identity_residual(m: &Q, lambda: &Q, max_n: u32) -> Result<Q> {
    let rho = lambda / (Q::one() - lambda);
    let mut worst = Q::zero();
    for n in 1..=max_n {
        let birth = boundary_birth_rate(n, m, lambda)?;
        let death = boundary_death_rate(n, lambda)?;
        for k in 1..=n {
            let here = sip_d(k, n, m);
            let lhs = &birth * (sip_d(k, n + 1, m) - &here) + &death * (sip_d(k, n - 1, m) - &here);
            let rhs = qu(k as u64) * (sip_d(k - 1, n, m) * &rho - &here);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}
