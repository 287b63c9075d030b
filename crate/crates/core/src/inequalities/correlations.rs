//! Correlation inequalities for duality moments of a local-stationary start.
//!
//! By duality, `K_t(x_1..x_n) = E_{x_1..x_n}[Π_i ρ(X_i(t))]` for the labeled
//! dual walkers; the one-point values use a single walker. Inclusion-type
//! duals give `K_t >= Π K_t(x_i)`, exclusion duals the reverse.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::CheckReport;
use crate::duality::{DiffusionFamily, DiscreteFamily};
use crate::engine::{build_labeled_generator, semigroup_apply};
use crate::error::{Error, Result};
use crate::measures::{DualityKind, MeasureFamily, ProductMeasureSpec};
use crate::model::{LabeledConfig, SiteGraph};
use crate::num::{pow, qi, qu, to_f64, Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    #[serde(flatten)]
    pub check: CheckReport,
    pub lhs: f64,
    pub rhs: f64,
    pub singles: Vec<f64>,
    /// `Cov(η_t(x_1), η_t(x_2))` for two-point checks of the particle systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<f64>,
}

/// `E_{points}[Π_i ρ(X_i(t))]` for the labeled `(a, b)` walkers.
pub fn dual_expectation(
    graph: &SiteGraph,
    a: &Q,
    b: &Q,
    rho: &[f64],
    points: &[usize],
    t: f64,
    eps: f64,
) -> Result<f64> {
    if points.is_empty() {
        return Ok(1.0);
    }
    if points.iter().any(|&x| x >= graph.len()) {
        return Err(Error::InvalidConfig(format!(
            "points {points:?} outside the graph"
        )));
    }
    let gen = build_labeled_generator(graph, points.len(), a, b)?;
    let start = gen
        .index_of(&LabeledConfig::new(points.to_vec()))
        .ok_or_else(|| {
            Error::InvalidConfig(format!("points {points:?} violate the exclusion cap"))
        })?;
    let f: Vec<f64> = gen
        .states()
        .iter()
        .map(|s| s.positions().iter().map(|&y| rho[y]).product())
        .collect();
    Ok(semigroup_apply(&gen.to_float(), &f, t, eps)?.values[start])
}

fn dual_rates(family: &DiscreteFamily) -> (Q, Q) {
    match family {
        DiscreteFamily::Sip { m } => (qi(2) * m, qi(4)),
        DiscreteFamily::Sep { n } => (qu(*n as u64), qi(-1)),
    }
}

/// Coefficients `c_k` with `l^j = Σ_k c_k d(k, l)` on the support of the family,
/// from the lower-triangular system at `l = 0..=K`.
pub fn power_in_duality_basis(family: &DiscreteFamily, j: u32) -> Result<Vec<Q>> {
    let top = family.cap().map_or(j, |n| j.min(n));
    let mut c: Vec<Q> = Vec::with_capacity(top as usize + 1);
    for l in 0..=top {
        let mut rest = pow(&qu(l as u64), j);
        for (k, ck) in c.iter().enumerate() {
            rest -= ck * family.single(k as u32, l)?;
        }
        c.push(rest / family.single(l, l)?);
    }
    Ok(c)
}

/// `Cov(η_t(x), η_t(y))` under the evolved local-stationary measure, from duality moments.
pub fn occupation_covariance(
    graph: &SiteGraph,
    family: &DiscreteFamily,
    rho: &[Q],
    x: usize,
    y: usize,
    t: f64,
    eps: f64,
) -> Result<f64> {
    let (a, b) = dual_rates(family);
    let rho_f: Vec<f64> = rho.iter().map(to_f64).collect();
    let k = |points: Vec<usize>| dual_expectation(graph, &a, &b, &rho_f, &points, t, eps);
    let first = power_in_duality_basis(family, 1)?;
    let mean = |z: usize| -> Result<f64> {
        let mut acc = 0.0;
        for (j, c) in first.iter().enumerate() {
            if !c.is_zero() {
                acc += to_f64(c) * k(vec![z; j])?;
            }
        }
        Ok(acc)
    };
    let joint = if x == y {
        let second = power_in_duality_basis(family, 2)?;
        let mut acc = 0.0;
        for (j, c) in second.iter().enumerate() {
            if !c.is_zero() {
                acc += to_f64(c) * k(vec![x; j])?;
            }
        }
        acc
    } else {
        let mut acc = 0.0;
        for (i, ci) in first.iter().enumerate() {
            for (j, cj) in first.iter().enumerate() {
                if ci.is_zero() || cj.is_zero() {
                    continue;
                }
                let mut points = vec![x; i];
                points.extend(std::iter::repeat_n(y, j));
                acc += to_f64(&(ci * cj)) * k(points)?;
            }
        }
        acc
    };
    Ok(joint - mean(x)? * mean(y)?)
}

#[allow(clippy::too_many_arguments)]
fn correlation(
    name: String,
    graph: &SiteGraph,
    (a, b): (Q, Q),
    rho: &[Q],
    points: &[usize],
    t: f64,
    eps: f64,
    positive: bool,
) -> Result<CorrelationReport> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    if rho.len() != graph.len() {
        return Err(Error::InvalidConfig(format!(
            "profile has {} sites, graph has {}",
            rho.len(),
            graph.len()
        )));
    }
    let rho_f: Vec<f64> = rho.iter().map(to_f64).collect();
    let lhs = dual_expectation(graph, &a, &b, &rho_f, points, t, eps)?;
    let singles: Vec<f64> = points
        .iter()
        .map(|&x| dual_expectation(graph, &a, &b, &rho_f, &[x], t, eps))
        .collect::<Result<_>>()?;
    let rhs: f64 = singles.iter().product();
    let margin = if positive { lhs - rhs } else { rhs - lhs };
    let scale = rho_f
        .iter()
        .cloned()
        .fold(1.0, f64::max)
        .powi(points.len() as i32);
    let tolerance = (points.len() as f64 + 1.0) * eps * scale + 1e-10;
    let case = format!("points {points:?} t={t}");
    Ok(CorrelationReport {
        check: CheckReport::new(name, 1, margin, tolerance, case),
        lhs,
        rhs,
        singles,
        covariance: None,
    })
}

/// `K_t(x_1..x_n) >= Π K_t(x_i)` for SIP(m) from a discrete-gamma profile.
pub fn sip_correlation_check(
    graph: &SiteGraph,
    measure: &ProductMeasureSpec,
    points: &[usize],
    t: f64,
    eps: f64,
) -> Result<CorrelationReport> {
    let MeasureFamily::DiscreteGamma { m } = &measure.family else {
        return Err(Error::InvalidPairing(format!(
            "inclusion correlations need a discrete-gamma measure, got {:?}",
            measure.family
        )));
    };
    let family = DiscreteFamily::Sip { m: m.clone() };
    let rho = measure.rho_profile();
    let mut report = correlation(
        format!("sip-correlation {}", family.name()),
        graph,
        dual_rates(&family),
        &rho,
        points,
        t,
        eps,
        true,
    )?;
    if points.len() == 2 {
        report.covariance = Some(occupation_covariance(
            graph, &family, &rho, points[0], points[1], t, eps,
        )?);
    }
    Ok(report)
}

/// `K_t(x_1..x_n) <= Π K_t(x_i)` for SEP(n) from a binomial profile.
pub fn sep_correlation_check(
    graph: &SiteGraph,
    measure: &ProductMeasureSpec,
    points: &[usize],
    t: f64,
    eps: f64,
) -> Result<CorrelationReport> {
    let MeasureFamily::Binomial { n } = &measure.family else {
        return Err(Error::InvalidPairing(format!(
            "exclusion correlations need a binomial measure, got {:?}",
            measure.family
        )));
    };
    let family = DiscreteFamily::Sep { n: *n };
    for &x in points {
        if points.iter().filter(|&&y| y == x).count() > *n as usize {
            return Err(Error::InvalidDual(format!(
                "more than {n} dual particles at site {x}"
            )));
        }
    }
    let rho = measure.rho_profile();
    let mut report = correlation(
        format!("sep-correlation {}", family.name()),
        graph,
        dual_rates(&family),
        &rho,
        points,
        t,
        eps,
        false,
    )?;
    if points.len() == 2 {
        report.covariance = Some(occupation_covariance(
            graph, &family, &rho, points[0], points[1], t, eps,
        )?);
    }
    Ok(report)
}

/// Positive correlations of the momentum / energy diffusions, computed through the dual SIP.
pub fn diffusion_correlation_check(
    graph: &SiteGraph,
    measure: &ProductMeasureSpec,
    points: &[usize],
    t: f64,
    eps: f64,
) -> Result<CorrelationReport> {
    let family = match measure.pairing() {
        DualityKind::Diffusion(f) => f,
        DualityKind::Discrete(_) => {
            return Err(Error::InvalidPairing(format!(
                "diffusion correlations need a Gaussian or Gamma measure, got {:?}",
                measure.family
            )))
        }
    };
    let m = family.dual_sip_m();
    let name = match &family {
        DiffusionFamily::Bmp => "diffusion-correlation BMP".to_string(),
        DiffusionFamily::Bep { .. } => format!("diffusion-correlation {}", family.name()),
    };
    let rates = (qi(2) * &m, qi(4));
    let rho = measure.rho_profile();
    correlation(name, graph, rates, &rho, points, t, eps, true)
}
