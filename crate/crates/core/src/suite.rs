//! The verification battery: ten criteria, each split into an exact part
//! (rational identities and certified semigroups) and a stochastic part
//! (seeded Monte Carlo). Tolerances and seeds are pinned here.

use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duality::{
    reservoir_identity_residual, sip_d, verify_boundary_duality, verify_diffusion_duality,
    verify_self_duality, DiffusionFamily, DiscreteFamily, DualityReport,
};
use crate::engine::{build_sector_generator, detailed_balance_check};
use crate::error::{Error, Result};
use crate::inequalities::correlations::dual_expectation;
use crate::inequalities::{
    boundary_correlation_check, boundary_moment, density_profile, random_test_function,
    sep_correlation_check, sip_correlation_check, ComparisonSetup,
};
use crate::measures::{
    check_sip_moment, convolve_check, goodness_of_fit, nu_weight, DualityKind, MeasureFamily,
    ProductMeasureSpec,
};
use crate::model::{OccupationConfig, Process, ProcessSpec, SiteGraph};
use crate::montecarlo::{
    estimate_k, replica_rng, replicate, simulate_bep, simulate_bmp, simulate_ctmc,
    stationary_time_average, Dynamics,
};
use crate::num::{binomial, format_rational, pow, q, qi, to_f64, Q};

/// Uniformization tolerance for semigroup evaluations.
pub const EPS: f64 = 1e-12;
/// Margin floor for the comparison inequality: `2ε + 1e-10`.
pub const COMPARISON_TOL: f64 = 2.0 * EPS + 1e-10;
/// Margin floor for the boundary correlation inequalities.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Certified truncation bound for the stationary moment series.
pub const MOMENT_TAIL_TOL: f64 = 1e-12;
/// Chi-square acceptance level.
pub const GOF_P_MIN: f64 = 1e-3;
/// Standard errors allowed between an estimate and its exact value.
pub const SIGMAS: f64 = 3.0;
/// Relative drift of `Σ η²` allowed for the momentum scheme.
pub const BMP_DRIFT_TOL: f64 = 1e-12;
/// Monte Carlo replicas for duality-moment estimates.
pub const REPLICAS: u64 = 10_000;
pub const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    Exact,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PaperExact,
    PaperStochastic,
    All,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "paper-exact" => Ok(Preset::PaperExact),
            "paper-stochastic" => Ok(Preset::PaperStochastic),
            "all" => Ok(Preset::All),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset {other:?}; expected paper-exact, paper-stochastic or all"
            ))),
        }
    }

    pub fn parts(self) -> Vec<(u8, Part)> {
        let exact = EXACT_PARTS.iter().map(|&c| (c, Part::Exact));
        let stochastic = STOCHASTIC_PARTS.iter().map(|&c| (c, Part::Stochastic));
        let mut all: Vec<(u8, Part)> = match self {
            Preset::PaperExact => exact.collect(),
            Preset::PaperStochastic => stochastic.collect(),
            Preset::All => exact.chain(stochastic).collect(),
        };
        all.sort();
        all
    }
}

/// Criteria with an exact part.
pub const EXACT_PARTS: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];
/// Criteria with a stochastic part.
pub const STOCHASTIC_PARTS: [u8; 4] = [7, 8, 9, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartOutcome {
    pub criterion: u8,
    pub part: Part,
    pub title: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
    pub seconds: f64,
}

pub fn title(criterion: u8) -> &'static str {
    match criterion {
        1 => "SIP(m) self-duality",
        2 => "SEP(n) self-duality",
        3 => "diffusion dualities",
        4 => "boundary duality and reservoir identity",
        5 => "comparison inequality",
        6 => "detailed balance of product measures",
        7 => "positive and negative correlations",
        8 => "boundary-driven steady state",
        9 => "stationary measures",
        10 => "conservation and reproducibility",
        _ => "unknown",
    }
}

/// Runs one part of one criterion.
pub fn run_part(criterion: u8, part: Part) -> Result<PartOutcome> {
    let started = Instant::now();
    let (passed, cases, detail) = match (criterion, part) {
        (1, Part::Exact) => criterion_1()?,
        (2, Part::Exact) => criterion_2()?,
        (3, Part::Exact) => criterion_3()?,
        (4, Part::Exact) => criterion_4()?,
        (5, Part::Exact) => criterion_5()?,
        (6, Part::Exact) => criterion_6()?,
        (7, Part::Exact) => criterion_7_exact()?,
        (7, Part::Stochastic) => criterion_7_stochastic()?,
        (8, Part::Exact) => criterion_8_exact()?,
        (8, Part::Stochastic) => criterion_8_stochastic()?,
        (9, Part::Exact) => criterion_9_exact()?,
        (9, Part::Stochastic) => criterion_9_stochastic()?,
        (10, Part::Stochastic) => criterion_10()?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "criterion {criterion} has no {part:?} part"
            )))
        }
    };
    Ok(PartOutcome {
        criterion,
        part,
        title: title(criterion).to_string(),
        passed,
        cases,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn has_part(criterion: u8, part: Part) -> bool {
    match part {
        Part::Exact => EXACT_PARTS.contains(&criterion),
        Part::Stochastic => STOCHASTIC_PARTS.contains(&criterion),
    }
}

type Verdict = (bool, usize, String);

fn small_graphs() -> Result<Vec<(&'static str, SiteGraph)>> {
    Ok(vec![
        ("two-site", SiteGraph::two_site()),
        ("path3", SiteGraph::path(3)?),
        ("path4", SiteGraph::path(4)?),
        ("triangle", SiteGraph::complete(3)?),
    ])
}

fn sip_params() -> Vec<Q> {
    vec![q(1, 2), qi(1), qi(2), q(7, 3)]
}

fn duality_sweep(reports: Vec<(String, DualityReport)>) -> Verdict {
    let cases = reports.iter().map(|(_, r)| r.cases_checked as usize).sum();
    let failed: Vec<String> = reports
        .iter()
        .filter(|(_, r)| !r.passed())
        .map(|(g, r)| {
            format!(
                "{} on {g}: residual {} at {:?}",
                r.family, r.max_abs_residual, r.worst_case
            )
        })
        .collect();
    let detail = if failed.is_empty() {
        format!("{} sweeps, max residual 0", reports.len())
    } else {
        failed.join("; ")
    };
    (failed.is_empty(), cases, detail)
}

fn criterion_1() -> Result<Verdict> {
    let mut reports = Vec::new();
    for m in sip_params() {
        for (name, g) in small_graphs()? {
            let p = Process::new(ProcessSpec::sip(m.clone()), g)?;
            reports.push((name.to_string(), verify_self_duality(&p, 3, 4)?));
        }
    }
    Ok(duality_sweep(reports))
}

fn criterion_2() -> Result<Verdict> {
    let mut reports = Vec::new();
    for n in 1..=3 {
        for (name, g) in small_graphs()? {
            let p = Process::new(ProcessSpec::sep(n), g)?;
            reports.push((name.to_string(), verify_self_duality(&p, 3, 4)?));
        }
    }
    Ok(duality_sweep(reports))
}

fn criterion_3() -> Result<Verdict> {
    let mut reports = Vec::new();
    let mut families = vec![DiffusionFamily::Bmp];
    families.extend(sip_params().into_iter().map(|m| DiffusionFamily::Bep { m }));
    for family in &families {
        for (name, g) in small_graphs()? {
            reports.push((name.to_string(), verify_diffusion_duality(&g, family, 3)?));
        }
    }
    let scaled: Vec<String> = reports
        .iter()
        .filter_map(|(g, r)| {
            r.scale
                .as_ref()
                .map(|s| format!("{} on {g}: scale {s}", r.family))
        })
        .collect();
    let (passed, cases, mut detail) = duality_sweep(reports);
    if !scaled.is_empty() {
        detail = format!("{detail}; scaling discrepancies: {}", scaled.join(", "));
    }
    Ok((passed, cases, detail))
}

fn criterion_4() -> Result<Verdict> {
    let mut reports = Vec::new();
    for n_sites in 2..=4 {
        for m in [q(1, 2), qi(1), qi(2)] {
            for (ll, lr) in [(q(1, 3), q(1, 2)), (qi(0), q(9, 10))] {
                let p = Process::boundary(m.clone(), ll, lr, n_sites)?;
                reports.push((format!("N={n_sites}"), verify_boundary_duality(&p, 3, 3)?));
            }
        }
    }
    let (mut passed, mut cases, mut detail) = duality_sweep(reports);
    let mut worst = Q::zero();
    for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
        for lambda in [qi(0), q(1, 3), q(1, 2), q(9, 10)] {
            worst = worst.max(reservoir_identity_residual(&m, &lambda, 10)?);
            cases += 55;
        }
    }
    passed &= worst.is_zero();
    detail = format!(
        "{detail}; reservoir identity k<=n<=10 max residual {}",
        format_rational(&worst)
    );
    Ok((passed, cases, detail))
}

fn criterion_5() -> Result<Verdict> {
    let graphs = vec![
        ("two-site", SiteGraph::two_site()),
        ("path3", SiteGraph::path(3)?),
        ("triangle", SiteGraph::complete(3)?),
        ("path4", SiteGraph::path(4)?),
        ("cycle4", SiteGraph::cycle(4)?),
    ];
    let times = [0.1, 0.5, 1.0, 5.0];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let mut cases = 0;
    let mut worst = (f64::INFINITY, String::new());
    let mut failures = 0;
    for (name, g) in &graphs {
        for n in [2usize, 3] {
            // (2m, 4) for SIP(m) and (cap, -1) for SEP(cap), when the cap fits n particles
            let mut setups = vec![(qi(1), qi(4)), (qi(2), qi(4)), (q(14, 3), qi(4))];
            for cap in [1i64, 2] {
                if (cap as usize) * g.len() >= n {
                    setups.push((qi(cap), qi(-1)));
                }
            }
            let setups: Vec<ComparisonSetup> = setups
                .iter()
                .map(|(a, b)| ComparisonSetup::new(g, n, a, b))
                .collect::<Result<_>>()?;
            for _ in 0..100 {
                let f = random_test_function(g.len(), n, &mut rng).to_pd_function(g.len(), n)?;
                for setup in &setups {
                    for &t in &times {
                        let r = setup.check(&f, t, EPS)?;
                        cases += 1;
                        failures += (!r.passed || r.tolerance != COMPARISON_TOL) as usize;
                        if r.worst_margin < worst.0 {
                            worst = (
                                r.worst_margin,
                                format!("{name} {} {}", r.name, r.worst_case),
                            );
                        }
                    }
                }
            }
        }
    }
    Ok((
        failures == 0,
        cases,
        format!(
            "{failures} failures; smallest oriented margin {:.3e} ({})",
            worst.0, worst.1
        ),
    ))
}

fn criterion_6() -> Result<Verdict> {
    let graphs = vec![
        SiteGraph::path(3)?,
        SiteGraph::complete(3)?,
        SiteGraph::path(4)?,
        SiteGraph::cycle(4)?,
    ];
    let mut cases = 0;
    let mut largest = 0;
    let mut bad = Vec::new();
    for g in &graphs {
        for m in [q(1, 2), qi(1), q(7, 3)] {
            let p = Process::new(ProcessSpec::sip(m.clone()), g.clone())?;
            let lambda = q(1, 3);
            for total in 1..=12 {
                let gen = build_sector_generator(&p, total)?;
                if gen.len() > 200 {
                    break;
                }
                let mu: Vec<Q> = gen
                    .states()
                    .iter()
                    .map(|eta| {
                        eta.counts()
                            .iter()
                            .map(|&k| nu_weight(k, &m, &lambda))
                            .product()
                    })
                    .collect();
                let r = detailed_balance_check(&gen, &mu)?;
                cases += 1;
                largest = largest.max(gen.len());
                if !r.is_zero() {
                    bad.push(format!(
                        "SIP({}) total {total}: {}",
                        format_rational(&m),
                        format_rational(&r)
                    ));
                }
            }
        }
        for n in 1..=3u32 {
            let p = Process::new(ProcessSpec::sep(n), g.clone())?;
            let rho = q(2, 5);
            for total in 1..=(n * g.len() as u32) {
                let gen = build_sector_generator(&p, total)?;
                if gen.len() > 200 {
                    break;
                }
                let mu: Vec<Q> = gen
                    .states()
                    .iter()
                    .map(|eta| {
                        eta.counts()
                            .iter()
                            .map(|&k| {
                                Q::from_integer(binomial(n as u64, k as u64))
                                    * pow(&rho, k)
                                    * pow(&(Q::one() - &rho), n - k)
                            })
                            .product()
                    })
                    .collect();
                let r = detailed_balance_check(&gen, &mu)?;
                cases += 1;
                largest = largest.max(gen.len());
                if !r.is_zero() {
                    bad.push(format!("SEP({n}) total {total}: {}", format_rational(&r)));
                }
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("all residuals 0, largest sector {largest} states")
    } else {
        bad.join("; ")
    };
    Ok((bad.is_empty(), cases, detail))
}

fn random_rational<R: Rng>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Q {
    q(rng.gen_range(lo * den..=hi * den), den)
}

fn correlation_graphs() -> Result<Vec<SiteGraph>> {
    Ok(vec![
        SiteGraph::path(3)?,
        SiteGraph::complete(3)?,
        SiteGraph::path(4)?,
        SiteGraph::cycle(4)?,
    ])
}

fn criterion_7_exact() -> Result<Verdict> {
    let graphs = correlation_graphs()?;
    let times = [0.1, 0.5, 1.0, 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut failures = Vec::new();
    let (mut sip_min, mut sep_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for case in 0..100 {
        let g = &graphs[rng.gen_range(0..graphs.len())];
        let m = sip_params()[rng.gen_range(0..4)].clone();
        let rho: Vec<Q> = (0..g.len())
            .map(|_| random_rational(&mut rng, 0, 3, 8))
            .collect();
        let mu =
            ProductMeasureSpec::from_rho(&DualityKind::Discrete(DiscreteFamily::Sip { m }), &rho)?;
        let n = rng.gen_range(2..=3);
        let points: Vec<usize> = (0..n).map(|_| rng.gen_range(0..g.len())).collect();
        let t = times[rng.gen_range(0..times.len())];
        let r = sip_correlation_check(g, &mu, &points, t, EPS)?;
        sip_min = sip_min.min(r.check.worst_margin);
        if !r.check.passed {
            failures.push(format!("SIP case {case}: {}", r.check.worst_case));
        }
    }
    for case in 0..100 {
        let g = &graphs[rng.gen_range(0..graphs.len())];
        let cap = rng.gen_range(1..=3u32);
        let rho: Vec<Q> = (0..g.len())
            .map(|_| random_rational(&mut rng, 0, 1, 16))
            .collect();
        let mu = ProductMeasureSpec::new(MeasureFamily::Binomial { n: cap }, rho)?;
        let n = rng.gen_range(2..=3);
        let mut points = Vec::new();
        while points.len() < n {
            let x = rng.gen_range(0..g.len());
            if points.iter().filter(|&&y| y == x).count() < cap as usize {
                points.push(x);
            }
        }
        let t = times[rng.gen_range(0..times.len())];
        let r = sep_correlation_check(g, &mu, &points, t, EPS)?;
        sep_max = sep_max.max(r.lhs - r.rhs);
        if !r.check.passed {
            failures.push(format!("SEP case {case}: {}", r.check.worst_case));
        }
    }
    let detail = format!(
        "{} failures; min SIP margin {sip_min:.3e}; max SEP lhs-rhs {sep_max:.3e}{}",
        failures.len(),
        if failures.is_empty() {
            String::new()
        } else {
            format!("; {}", failures.join("; "))
        }
    );
    Ok((failures.is_empty(), 200, detail))
}

fn criterion_7_stochastic() -> Result<Verdict> {
    let g = SiteGraph::path(3)?;
    let t = 0.5;
    let xi = OccupationConfig::new(vec![1, 0, 1]);
    let points = xi.to_points();
    let rho = vec![qi(1), qi(2), qi(3)];
    let rho_f: Vec<f64> = rho.iter().map(to_f64).collect();
    let sip = DiscreteFamily::Sip { m: qi(1) };
    let sep_rho = vec![q(1, 5), q(1, 2), q(9, 10)];
    let sep_f: Vec<f64> = sep_rho.iter().map(to_f64).collect();
    let cases: Vec<(String, Dynamics, ProductMeasureSpec, f64)> = vec![
        (
            "SIP(1)".into(),
            Dynamics::Jump(Process::new(ProcessSpec::sip(qi(1)), g.clone())?),
            ProductMeasureSpec::from_rho(&DualityKind::Discrete(sip), &rho)?,
            dual_expectation(&g, &qi(2), &qi(4), &rho_f, &points, t, EPS)?,
        ),
        (
            "SEP(2)".into(),
            Dynamics::Jump(Process::new(ProcessSpec::sep(2), g.clone())?),
            ProductMeasureSpec::new(MeasureFamily::Binomial { n: 2 }, sep_rho)?,
            dual_expectation(&g, &qi(2), &qi(-1), &sep_f, &points, t, EPS)?,
        ),
        (
            "BMP".into(),
            Dynamics::Diffusion {
                graph: g.clone(),
                family: DiffusionFamily::Bmp,
                dt: 1e-3,
            },
            ProductMeasureSpec::new(MeasureFamily::Gaussian, rho.clone())?,
            dual_expectation(&g, &qi(2), &qi(4), &rho_f, &points, t, EPS)?,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, dynamics, mu, exact)) in cases.iter().enumerate() {
        let e = estimate_k(dynamics, mu, &xi, t, REPLICAS, SEED + i as u64)?;
        let within = e.within(*exact, SIGMAS);
        ok &= within;
        parts.push(format!(
            "{name}: {:.4} ± {:.4} vs exact {:.4} ({:+.2}σ)",
            e.mean,
            e.stderr,
            exact,
            (e.mean - exact) / e.stderr
        ));
    }
    Ok((ok, cases.len(), parts.join("; ")))
}

fn boundary_points(n_sites: usize) -> Vec<Vec<usize>> {
    let mut sets = Vec::new();
    for i in 1..=n_sites {
        for j in i..=n_sites {
            sets.push(vec![i, j]);
            for k in j..=n_sites {
                sets.push(vec![i, j, k]);
            }
        }
    }
    sets
}

fn criterion_8_exact() -> Result<Verdict> {
    let reservoirs = [
        (qi(0), q(1, 2)),
        (q(1, 3), q(3, 4)),
        (q(1, 2), q(1, 2)),
        (q(2, 3), q(1, 5)),
    ];
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut deviations = Vec::new();
    let mut min_driven = f64::INFINITY;
    for n_sites in 2..=6 {
        for m in [q(1, 2), qi(1), qi(2)] {
            for (ll, lr) in &reservoirs {
                let profile = density_profile(n_sites, &m, ll, lr)?;
                cases += 1;
                if !profile.affine {
                    failures.push(format!(
                        "profile N={n_sites} m={} not affine",
                        format_rational(&m)
                    ));
                }
                if n_sites == 4 && ll.is_zero() {
                    deviations.push(format!(
                        "m={}: max deviation {:.4}",
                        format_rational(&m),
                        profile.max_deviation
                    ));
                }
                let equilibrium = ll == lr;
                for points in boundary_points(n_sites) {
                    let r = boundary_correlation_check(n_sites, &m, ll, lr, &points)?;
                    cases += 1;
                    let exact_zero = r.exact_margin.as_deref() == Some("0");
                    if !r.passed || r.tolerance != BOUNDARY_TOL || equilibrium != exact_zero {
                        failures.push(format!(
                            "{} {}: margin {:?}",
                            r.name, r.worst_case, r.exact_margin
                        ));
                    }
                    if !equilibrium {
                        min_driven = min_driven.min(r.worst_margin);
                    }
                }
            }
        }
    }
    let detail = format!(
        "{} failures; smallest driven margin {min_driven:.3e}; linear-formula deviation at N=4, ρL=0, ρR=1: {}{}",
        failures.len(),
        deviations.join(", "),
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    Ok((failures.is_empty(), cases, detail))
}

fn criterion_8_stochastic() -> Result<Verdict> {
    let (m, ll, lr, n_sites) = (qi(1), q(1, 3), q(1, 2), 3usize);
    let p = Process::boundary(m.clone(), ll.clone(), lr.clone(), n_sites)?;
    let rho = |l: &Q| l / (Q::one() - l);
    let (rl, rr) = (rho(&ll), rho(&lr));
    type Observable = Box<dyn Fn(&OccupationConfig) -> f64>;
    let observables: Vec<(Vec<usize>, Observable)> = vec![
        (
            vec![2],
            Box::new(|eta: &OccupationConfig| to_f64(&sip_d(1, eta.get(1), &qi(1)))),
        ),
        (
            vec![1, 3],
            Box::new(|eta: &OccupationConfig| {
                to_f64(&(sip_d(1, eta.get(0), &qi(1)) * sip_d(1, eta.get(2), &qi(1))))
            }),
        ),
        (
            vec![2, 2],
            Box::new(|eta: &OccupationConfig| to_f64(&sip_d(2, eta.get(1), &qi(1)))),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (points, f)) in observables.iter().enumerate() {
        let exact = to_f64(&boundary_moment(n_sites, &m, &rl, &rr, points)?);
        let e = stationary_time_average(
            &p,
            &OccupationConfig::zeros(n_sites),
            f,
            50.0,
            20_050.0,
            40,
            SEED + i as u64,
        )?;
        let within = e.within(exact, SIGMAS);
        ok &= within;
        parts.push(format!(
            "{points:?}: {:.4} ± {:.4} vs exact {exact:.4}",
            e.mean, e.stderr
        ));
    }
    Ok((ok, observables.len(), parts.join("; ")))
}

fn criterion_9_exact() -> Result<Verdict> {
    let mut cases = 0;
    let mut bad = Vec::new();
    for (m, l) in [(qi(1), qi(1)), (q(1, 2), q(7, 3)), (qi(2), qi(3))] {
        for lambda in [q(1, 3), q(1, 2)] {
            let r = convolve_check(&m, &l, &lambda, 50)?;
            cases += 1;
            if !r.is_zero() {
                bad.push(format!("convolution m={m} l={l}: {}", format_rational(&r)));
            }
        }
    }
    let mut worst_tail: f64 = 0.0;
    for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
        for lambda in [q(1, 3), q(1, 2)] {
            for k in 0..=4 {
                let r = check_sip_moment(k, &m, &lambda, MOMENT_TAIL_TOL)?;
                cases += 1;
                worst_tail = worst_tail.max(r.tail_bound);
                if !r.passed(MOMENT_TAIL_TOL) {
                    bad.push(format!(
                        "moment k={k} m={m} λ={lambda}: deviation {:.3e}",
                        r.deviation
                    ));
                }
            }
        }
    }
    let detail = format!(
        "{} failures; largest certified tail {worst_tail:.2e}{}",
        bad.len(),
        if bad.is_empty() {
            String::new()
        } else {
            format!("; {}", bad.join("; "))
        }
    );
    Ok((bad.is_empty(), cases, detail))
}

fn family_label(family: &MeasureFamily) -> String {
    match family {
        MeasureFamily::DiscreteGamma { m } => format!("DiscreteGamma[m={}]", format_rational(m)),
        MeasureFamily::Binomial { n } => format!("Binomial[n={n}]"),
        MeasureFamily::Gaussian => "Gaussian".to_string(),
        MeasureFamily::Gamma { m } => format!("Gamma[m={}]", format_rational(m)),
    }
}

fn criterion_9_stochastic() -> Result<Verdict> {
    let laws = [
        (MeasureFamily::DiscreteGamma { m: qi(1) }, q(1, 3)),
        (MeasureFamily::DiscreteGamma { m: q(7, 3) }, q(1, 2)),
        (MeasureFamily::Binomial { n: 3 }, q(2, 5)),
        (MeasureFamily::Gaussian, qi(2)),
        (MeasureFamily::Gamma { m: q(7, 3) }, qi(2)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (family, param)) in laws.iter().enumerate() {
        let mut rng = replica_rng(SEED ^ 9, i as u64);
        let r = goodness_of_fit(family, param, 20_000, 20, &mut rng)?;
        ok &= r.p_value > GOF_P_MIN;
        parts.push(format!(
            "{}({}): p={:.3}",
            family_label(family),
            format_rational(param),
            r.p_value
        ));
    }
    Ok((ok, laws.len(), parts.join("; ")))
}

fn criterion_10() -> Result<Verdict> {
    let g = SiteGraph::path(4)?;
    let mut notes = Vec::new();
    let mut ok = true;
    let mut cases = 0;

    let start = [1.0, -0.5, 2.0, 0.25];
    let initial: f64 = start.iter().map(|v| v * v).sum();
    let run = simulate_bmp(&g, &start, 5.0, 1e-3, false, &mut replica_rng(SEED, 10))?;
    let fin: f64 = run.final_state.iter().map(|v| v * v).sum();
    let drift = (fin - initial).abs() / initial;
    ok &= drift <= BMP_DRIFT_TOL;
    cases += 1;
    notes.push(format!(
        "BMP relative drift of Σ η² {drift:.2e} over {} steps",
        run.steps
    ));

    let start = [1.5, 0.0, 2.25, 0.75];
    for m in [q(1, 2), qi(4)] {
        let run = simulate_bep(&g, &m, &start, 5.0, 1e-3, false, &mut replica_rng(SEED, 11))?;
        let (before, after): (f64, f64) = (start.iter().sum(), run.final_state.iter().sum());
        ok &= before == after;
        cases += 1;
        notes.push(format!(
            "BEP({}) Σ η {before} -> {after}",
            format_rational(&m)
        ));
    }

    let specs = [
        ProcessSpec::sip(q(1, 2)),
        ProcessSpec::sep(2),
        ProcessSpec::GeneralizedAb {
            a: qi(3),
            b: qi(-1),
        },
        ProcessSpec::Irw { rate: qi(1) },
    ];
    let eta = OccupationConfig::new(vec![2, 0, 1, 2]);
    let mut jumps = 0;
    for spec in specs {
        let p = Process::new(spec, g.clone())?;
        let tr = simulate_ctmc(&p, &eta, 20.0, &mut replica_rng(SEED, 12))?;
        jumps += tr.jumps();
        cases += 1;
        ok &= tr.states.iter().all(|s| s.total() == eta.total());
    }
    notes.push(format!("{jumps} jumps with |η| conserved"));

    let p = Process::new(ProcessSpec::sip(qi(1)), g.clone())?;
    let csv = |seed: u64| -> Result<Vec<u8>> {
        let mut out = Vec::new();
        simulate_ctmc(&p, &eta, 10.0, &mut replica_rng(seed, 0))?.write_csv(&mut out)?;
        Ok(out)
    };
    let same = csv(SEED)? == csv(SEED)?;
    let observe = |rng: &mut ChaCha8Rng| -> Result<f64> {
        Ok(simulate_ctmc(&p, &eta, 1.0, rng)?.final_state().get(0) as f64)
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?
        .install(|| replicate(200, SEED, observe))?;
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?
        .install(|| replicate(200, SEED, observe))?;
    let bitwise =
        one.mean.to_bits() == four.mean.to_bits() && one.stderr.to_bits() == four.stderr.to_bits();
    ok &= same && bitwise;
    cases += 2;
    notes.push(format!(
        "rerun CSV identical: {same}; 1 vs 4 threads bitwise equal: {bitwise}"
    ));
    Ok((ok, cases, notes.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(Preset::parse("all").unwrap(), Preset::All);
        assert!(Preset::parse("paper").is_err());
        let all = Preset::All.parts();
        let union: usize = Preset::PaperExact.parts().len() + Preset::PaperStochastic.parts().len();
        assert_eq!(all.len(), union);
    }

    #[test]
    fn boundary_point_sets() {
        // pairs and triples with repetition on 2 sites: 3 + 4
        assert_eq!(boundary_points(2).len(), 7);
    }
}
