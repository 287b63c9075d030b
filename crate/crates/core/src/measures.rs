//! Product measures: discrete-gamma (SIP), binomial (SEP), Gaussian (BMP)
//! and Gamma (BEP), with samplers and their duality moments.
//!
//! Under each product measure `∫ D(ξ, η) μ(dη) = Π_x ρ(x)^{ξ_x}` where the
//! density `ρ(x)` is `λ/(1-λ)`, `ρ`, the variance, and `θ/2` respectively.

use std::io::Write;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{
    Binomial as BinomialCdf, ChiSquared, ContinuousCDF, Discrete, Gamma as GammaCdf,
    Normal as NormalCdf,
};

use crate::duality::{sip_d, DiffusionFamily, DiscreteFamily, DualConfig};
use crate::error::{Error, Result};
use crate::model::OccupationConfig;
use crate::num::{factorial, pow, qi, rising_factorial, serde_q, to_f64, Q};

/// Per-site marginal family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum MeasureFamily {
    /// Negative binomial `ν^m_λ`; profile entries are `λ(x) ∈ [0,1)`.
    DiscreteGamma {
        #[serde(with = "serde_q")]
        m: Q,
    },
    /// `Bin(n, ρ(x))`; profile entries are `ρ(x) ∈ [0,1]`.
    Binomial { n: u32 },
    /// Centered normal; profile entries are variances `>= 0`.
    Gaussian,
    /// Gamma with shape `m/2`; profile entries are scales `θ(x) > 0`.
    Gamma {
        #[serde(with = "serde_q")]
        m: Q,
    },
}

/// Which duality a D-moment is taken with.
#[derive(Debug, Clone, PartialEq)]
pub enum DualityKind {
    Discrete(DiscreteFamily),
    Diffusion(DiffusionFamily),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductMeasureSpec {
    #[serde(flatten)]
    pub family: MeasureFamily,
    #[serde(with = "serde_q::vec")]
    pub profile: Vec<Q>,
}

/// One draw from a product measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Discrete(OccupationConfig),
    Continuous(Vec<f64>),
}

impl Sample {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sample::Discrete(c) => c.counts().iter().map(|&k| k as f64).collect(),
            Sample::Continuous(v) => v.clone(),
        }
    }
}

impl ProductMeasureSpec {
    pub fn new(family: MeasureFamily, profile: Vec<Q>) -> Result<Self> {
        let spec = ProductMeasureSpec { family, profile };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(family: MeasureFamily, value: Q, sites: usize) -> Result<Self> {
        Self::new(family, vec![value; sites])
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |x: usize, v: &Q, range: &str| {
            Err(Error::InvalidParameter(format!(
                "profile value {v} at site {x} outside {range}"
            )))
        };
        match &self.family {
            MeasureFamily::DiscreteGamma { m } | MeasureFamily::Gamma { m } if !m.is_positive() => {
                return Err(Error::InvalidParameter(format!("m must be > 0, got {m}")));
            }
            MeasureFamily::Binomial { n: 0 } => {
                return Err(Error::InvalidParameter("binomial n must be >= 1".into()));
            }
            _ => {}
        }
        for (x, v) in self.profile.iter().enumerate() {
            match &self.family {
                MeasureFamily::DiscreteGamma { .. } if v.is_negative() || *v >= Q::one() => {
                    return bad(x, v, "[0,1)")
                }
                MeasureFamily::Binomial { .. } if v.is_negative() || *v > Q::one() => {
                    return bad(x, v, "[0,1]")
                }
                MeasureFamily::Gaussian if v.is_negative() => return bad(x, v, "[0,inf)"),
                MeasureFamily::Gamma { .. } if !v.is_positive() => return bad(x, v, "(0,inf)"),
                _ => {}
            }
        }
        Ok(())
    }

    /// Duality density `ρ(x)`.
    pub fn rho(&self, x: usize) -> Q {
        let v = &self.profile[x];
        match &self.family {
            MeasureFamily::DiscreteGamma { .. } => v / (Q::one() - v),
            MeasureFamily::Binomial { .. } | MeasureFamily::Gaussian => v.clone(),
            MeasureFamily::Gamma { .. } => v / qi(2),
        }
    }

    pub fn rho_profile(&self) -> Vec<Q> {
        (0..self.len()).map(|x| self.rho(x)).collect()
    }

    /// The duality this measure family is paired with.
    pub fn pairing(&self) -> DualityKind {
        match &self.family {
            MeasureFamily::DiscreteGamma { m } => {
                DualityKind::Discrete(DiscreteFamily::Sip { m: m.clone() })
            }
            MeasureFamily::Binomial { n } => DualityKind::Discrete(DiscreteFamily::Sep { n: *n }),
            MeasureFamily::Gaussian => DualityKind::Diffusion(DiffusionFamily::Bmp),
            MeasureFamily::Gamma { m } => {
                DualityKind::Diffusion(DiffusionFamily::Bep { m: m.clone() })
            }
        }
    }

    /// Local-stationary measure with density profile `rho` for the given duality.
    pub fn from_rho(kind: &DualityKind, rho: &[Q]) -> Result<Self> {
        let (family, profile) = match kind {
            DualityKind::Discrete(DiscreteFamily::Sip { m }) => (
                MeasureFamily::DiscreteGamma { m: m.clone() },
                rho.iter().map(|r| r / (Q::one() + r)).collect(),
            ),
            DualityKind::Discrete(DiscreteFamily::Sep { n }) => {
                (MeasureFamily::Binomial { n: *n }, rho.to_vec())
            }
            DualityKind::Diffusion(DiffusionFamily::Bmp) => (MeasureFamily::Gaussian, rho.to_vec()),
            DualityKind::Diffusion(DiffusionFamily::Bep { m }) => (
                MeasureFamily::Gamma { m: m.clone() },
                rho.iter().map(|r| r * qi(2)).collect(),
            ),
        };
        if rho.iter().any(|r| r.is_negative()) {
            return Err(Error::InvalidParameter("densities must be >= 0".into()));
        }
        Self::new(family, profile)
    }
}

/// Unnormalized discrete-gamma weight `λ^k/k! · (m/2)_k`; the pmf is this times `(1-λ)^{m/2}`.
pub fn nu_weight(k: u32, m: &Q, lambda: &Q) -> Q {
    pow(lambda, k) * rising_factorial(&(m / qi(2)), k) / Q::from_integer(factorial(k as u64))
}

fn check_nu(m: &Q, lambda: &Q) -> Result<()> {
    if !m.is_positive() {
        return Err(Error::InvalidParameter(format!("m must be > 0, got {m}")));
    }
    if lambda.is_negative() || *lambda >= Q::one() {
        return Err(Error::InvalidParameter(format!(
            "λ must lie in [0,1), got {lambda}"
        )));
    }
    Ok(())
}

/// `(1-λ)^{m/2}` exactly, when `m/2` is an integer.
pub fn nu_normalizer_exact(m: &Q, lambda: &Q) -> Option<Q> {
    let half = m / qi(2);
    if !half.is_integer() {
        return None;
    }
    Some(pow(&(Q::one() - lambda), half.to_integer().to_u32()?))
}

/// `ν^m_λ(k)`, with the exact value when the normalizer is rational.
#[derive(Debug, Clone, PartialEq)]
pub struct NuPmf {
    pub exact: Option<Q>,
    pub value: f64,
}

pub fn nu_pmf(k: u32, m: &Q, lambda: &Q) -> Result<NuPmf> {
    check_nu(m, lambda)?;
    let w = nu_weight(k, m, lambda);
    let exact = nu_normalizer_exact(m, lambda).map(|z| &w * z);
    let value = match &exact {
        Some(e) => to_f64(e),
        None => to_f64(&w) * (1.0 - to_f64(lambda)).powf(to_f64(m) / 2.0),
    };
    Ok(NuPmf { exact, value })
}

/// Max entrywise deviation between `ν^m * ν^l` and `ν^{m+l}` on `0..=k_max`.
///
/// The normalizers multiply exactly, so the comparison is carried out on the
/// unnormalized weights and is exact for rational inputs.
pub fn convolve_check(m: &Q, l: &Q, lambda: &Q, k_max: u32) -> Result<Q> {
    check_nu(m, lambda)?;
    check_nu(l, lambda)?;
    let a: Vec<Q> = (0..=k_max).map(|k| nu_weight(k, m, lambda)).collect();
    let b: Vec<Q> = (0..=k_max).map(|k| nu_weight(k, l, lambda)).collect();
    let sum = m + l;
    let mut worst = Q::zero();
    for k in 0..=k_max as usize {
        let conv: Q = (0..=k).map(|j| &a[j] * &b[k - j]).sum();
        let dev = (conv - nu_weight(k as u32, &sum, lambda)).abs();
        if dev > worst {
            worst = dev;
        }
    }
    Ok(worst)
}

/// `∫ D(ξ, ·) dμ = Π_x ρ(x)^{ξ_x}`.
pub fn d_moment(xi: &DualConfig, spec: &ProductMeasureSpec, kind: &DualityKind) -> Result<Q> {
    if spec.pairing() != *kind {
        return Err(Error::InvalidPairing(format!(
            "measure {:?} is not paired with {:?}",
            spec.family, kind
        )));
    }
    if xi.len() != spec.len() {
        return Err(Error::InvalidConfig(format!(
            "dual configuration has {} sites, profile has {}",
            xi.len(),
            spec.len()
        )));
    }
    if let DualityKind::Discrete(DiscreteFamily::Sep { n }) = kind {
        xi.check_cap(Some(*n))?;
    }
    Ok(xi
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(x, &k)| pow(&spec.rho(x), k))
        .product())
}

/// `sup_{|ξ| = n} ∫ D(ξ, ·) dμ = (max_x ρ(x))^n`.
pub fn uniform_moment_bound(spec: &ProductMeasureSpec, n: u32) -> Result<Q> {
    if n == 0 {
        return Ok(Q::one());
    }
    let max = spec
        .rho_profile()
        .into_iter()
        .max()
        .ok_or_else(|| Error::InvalidParameter("empty profile".into()))?;
    Ok(pow(&max, n))
}

/// A truncated series `Σ_{l <= last} t_l` with a certified bound on the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSum {
    pub partial: Q,
    pub last: u32,
    pub tail_bound: f64,
}

/// `Σ_l d(k, l) · w(l)` over unnormalized discrete-gamma weights, truncated once
/// the geometric tail bound falls below `tol` (relative to the partial sum).
///
/// For `l >= k` consecutive terms have ratio `λ(m/2 + l)/(l + 1 - k)`, which is
/// bounded by `λ·max(that ratio, 1)` for every later index.
pub fn sip_moment_series(k: u32, m: &Q, lambda: &Q, tol: f64) -> Result<TruncatedSum> {
    check_nu(m, lambda)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    let lam = to_f64(lambda);
    let half = to_f64(m) / 2.0;
    let mut partial = Q::zero();
    let mut l = k;
    loop {
        let term = sip_d(k, l, m) * nu_weight(l, m, lambda);
        partial += &term;
        if lambda.is_zero() {
            return Ok(TruncatedSum {
                partial,
                last: l,
                tail_bound: 0.0,
            });
        }
        let ratio = lam * ((half + l as f64) / (l + 1 - k) as f64).max(1.0);
        if ratio < 1.0 {
            let next = to_f64(&term) * lam * (half + l as f64) / (l + 1 - k) as f64;
            let tail = next / (1.0 - ratio);
            if tail <= tol * to_f64(&partial).max(f64::MIN_POSITIVE) {
                return Ok(TruncatedSum {
                    partial,
                    last: l,
                    tail_bound: tail,
                });
            }
        }
        l += 1;
        if l > 1_000_000 {
            return Err(Error::Resource("moment series did not converge".into()));
        }
    }
}

/// Result of checking `∫ d(k, ·) dν^m_λ = (λ/(1-λ))^k` by summation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub k: u32,
    pub target: Q,
    /// `|normalized partial sum - target|`; exact when the normalizer is rational.
    pub deviation: f64,
    /// Certified bound on the normalized truncated tail.
    pub tail_bound: f64,
    pub exact: bool,
    pub terms: u32,
}

impl MomentCheck {
    /// The partial sum never exceeds the target and misses it by at most the tail.
    /// The bound itself is a rounded float, hence the relative slack.
    pub fn passed(&self, tol: f64) -> bool {
        let slack = self.tail_bound * 1e-9 + if self.exact { 0.0 } else { 1e-14 };
        self.tail_bound < tol && self.deviation <= self.tail_bound + slack
    }
}

pub fn check_sip_moment(k: u32, m: &Q, lambda: &Q, tol: f64) -> Result<MomentCheck> {
    let target = pow(&(lambda / (Q::one() - lambda)), k);
    // the relative truncation criterion, scaled by the target, keeps the normalized tail below tol
    let scale = to_f64(&target).max(1.0);
    let series = sip_moment_series(k, m, lambda, tol / scale / 2.0)?;
    let (deviation, tail_bound, exact) = match nu_normalizer_exact(m, lambda) {
        Some(z) => {
            let dev = to_f64(&(&target - &series.partial * &z).abs());
            (dev, series.tail_bound * to_f64(&z), true)
        }
        None => {
            let z = (1.0 - to_f64(lambda)).powf(to_f64(m) / 2.0);
            let dev = (to_f64(&target) - to_f64(&series.partial) * z).abs();
            (dev, series.tail_bound * z, false)
        }
    };
    Ok(MomentCheck {
        k,
        target,
        deviation,
        tail_bound,
        exact,
        terms: series.last - k + 1,
    })
}

fn sample_site<R: Rng + ?Sized>(family: &MeasureFamily, v: f64, rng: &mut R) -> Result<f64> {
    let fail = |e: String| Error::InvalidParameter(e);
    Ok(match family {
        MeasureFamily::DiscreteGamma { m } => {
            if v == 0.0 {
                return Ok(0.0);
            }
            let half = m / qi(2);
            if half.is_integer() {
                // sum of m/2 geometric variables P(k) = λ^k (1-λ)
                let geo = Geometric::new(1.0 - v).map_err(|e| fail(e.to_string()))?;
                let r = half.to_integer().to_u64().unwrap_or(0);
                (0..r).map(|_| geo.sample(rng)).sum::<u64>() as f64
            } else {
                let g = GammaDist::new(to_f64(&half), v / (1.0 - v))
                    .map_err(|e| fail(e.to_string()))?;
                let intensity = g.sample(rng);
                if intensity <= 0.0 {
                    0.0
                } else {
                    Poisson::new(intensity)
                        .map_err(|e| fail(e.to_string()))?
                        .sample(rng)
                }
            }
        }
        MeasureFamily::Binomial { n } => rand_distr::Binomial::new(*n as u64, v)
            .map_err(|e| fail(e.to_string()))?
            .sample(rng) as f64,
        MeasureFamily::Gaussian => {
            if v == 0.0 {
                0.0
            } else {
                Normal::new(0.0, v.sqrt())
                    .map_err(|e| fail(e.to_string()))?
                    .sample(rng)
            }
        }
        MeasureFamily::Gamma { m } => GammaDist::new(to_f64(m) / 2.0, v)
            .map_err(|e| fail(e.to_string()))?
            .sample(rng),
    })
}

/// Independent per-site draw from the product measure.
pub fn sample_product<R: Rng + ?Sized>(spec: &ProductMeasureSpec, rng: &mut R) -> Result<Sample> {
    let values: Vec<f64> = spec
        .profile
        .iter()
        .map(|v| sample_site(&spec.family, to_f64(v), rng))
        .collect::<Result<_>>()?;
    Ok(match spec.family {
        MeasureFamily::DiscreteGamma { .. } | MeasureFamily::Binomial { .. } => Sample::Discrete(
            OccupationConfig::new(values.iter().map(|&v| v as u32).collect()),
        ),
        _ => Sample::Continuous(values),
    })
}

/// Draws from a single site of the given family and parameter.
pub fn sample_marginal<R: Rng + ?Sized>(
    family: &MeasureFamily,
    param: &Q,
    rng: &mut R,
) -> Result<f64> {
    ProductMeasureSpec::new(family.clone(), vec![param.clone()])?;
    sample_site(family, to_f64(param), rng)
}

/// Writes `site,value` rows.
pub fn write_sample_csv<W: Write>(sample: &Sample, mut w: W) -> Result<()> {
    writeln!(w, "site,value")?;
    for (x, v) in sample.values().iter().enumerate() {
        writeln!(w, "{x},{v}")?;
    }
    Ok(())
}

/// Pearson chi-square goodness-of-fit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub draws: usize,
}

fn chi_square(observed: &[f64], expected: &[f64]) -> Result<GofReport> {
    // merge adjacent cells until every expected count is at least 5
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(o), Some(e)) => {
                *o += o_acc;
                *e += e_acc;
            }
            _ => {
                obs.push(o_acc);
                exp.push(e_acc);
            }
        }
    }
    if obs.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two cells for a chi-square test".into(),
        ));
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let draws = observed.iter().sum::<f64>() as usize;
    Ok(GofReport {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
        draws,
    })
}

/// Chi-square test of `draws` samples of one marginal against its law.
///
/// Discrete families use one cell per value (plus a tail cell); continuous
/// families use `bins` equiprobable cells through the CDF.
pub fn goodness_of_fit<R: Rng + ?Sized>(
    family: &MeasureFamily,
    param: &Q,
    draws: usize,
    bins: usize,
    rng: &mut R,
) -> Result<GofReport> {
    ProductMeasureSpec::new(family.clone(), vec![param.clone()])?;
    let v = to_f64(param);
    let samples: Vec<f64> = (0..draws)
        .map(|_| sample_site(family, v, rng))
        .collect::<Result<_>>()?;
    let n = draws as f64;
    let err = |e: String| Error::InvalidParameter(e);
    match family {
        MeasureFamily::DiscreteGamma { .. } | MeasureFamily::Binomial { .. } => {
            let pmf = |k: u64| -> Result<f64> {
                match family {
                    MeasureFamily::DiscreteGamma { m } => Ok(nu_pmf(k as u32, m, param)?.value),
                    MeasureFamily::Binomial { n } => Ok(BinomialCdf::new(v, *n as u64)
                        .map_err(|e| err(e.to_string()))?
                        .pmf(k)),
                    _ => unreachable!(),
                }
            };
            let max = samples.iter().cloned().fold(0.0, f64::max) as u64;
            let mut expected = Vec::new();
            let mut mass = 0.0;
            for k in 0..=max {
                let p = pmf(k)?;
                expected.push(p * n);
                mass += p;
            }
            // everything above the largest observed value goes in a tail cell
            expected.push((1.0 - mass).max(0.0) * n);
            let mut observed = vec![0.0; expected.len()];
            for s in &samples {
                observed[*s as usize] += 1.0;
            }
            chi_square(&observed, &expected)
        }
        MeasureFamily::Gaussian | MeasureFamily::Gamma { .. } => {
            let cdf: Box<dyn Fn(f64) -> f64> = match family {
                MeasureFamily::Gaussian => {
                    let d = NormalCdf::new(0.0, v.sqrt()).map_err(|e| err(e.to_string()))?;
                    Box::new(move |x| d.cdf(x))
                }
                MeasureFamily::Gamma { m } => {
                    // statrs parametrizes by rate
                    let d =
                        GammaCdf::new(to_f64(m) / 2.0, 1.0 / v).map_err(|e| err(e.to_string()))?;
                    Box::new(move |x| d.cdf(x))
                }
                _ => unreachable!(),
            };
            let bins = bins.max(2);
            let mut observed = vec![0.0; bins];
            for s in &samples {
                let u = cdf(*s);
                observed[((u * bins as f64) as usize).min(bins - 1)] += 1.0;
            }
            chi_square(&observed, &vec![n / bins as f64; bins])
        }
    }
}
