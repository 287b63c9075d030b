//! One function per experiment, each producing an [`Outcome`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::config::{Experiment, ExperimentConfig};
use super::output::{fmt_f64, Outcome, Table};
use crate::duality::{
    reservoir_identity_residual, verify_boundary_duality, verify_diffusion_duality,
    verify_self_duality, DiffusionFamily, DiscreteFamily, DualityReport,
};
use crate::error::{Error, Result};
use crate::inequalities::{
    boundary_correlation_check, density_profile, diffusion_correlation_check,
    meeting_probability_report, random_test_function, sep_correlation_check, sip_correlation_check,
    CheckReport, ComparisonSetup, CorrelationReport, TestFunction,
};
use crate::measures::{goodness_of_fit, sample_product, write_sample_csv, DualityKind};
use crate::model::{OccupationConfig, Process, ProcessSpec};
use crate::montecarlo::{
    estimate_k, replica_rng, simulate_bep, simulate_bmp, simulate_ctmc, Dynamics, Estimate,
};
use crate::num::{format_rational, qi, Q};

pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    match config.experiment {
        Experiment::VerifyDuality => verify_duality(config),
        Experiment::Comparison => comparison(config),
        Experiment::SipCorrelations
        | Experiment::SepCorrelations
        | Experiment::DiffusionCorrelations => correlations(config),
        Experiment::Boundary => boundary(config),
        Experiment::Profile => profile(config),
        Experiment::Meeting => meeting(config),
        Experiment::Simulate => simulate(config),
        Experiment::Sample => sample(config),
    }
}

fn process(config: &ExperimentConfig) -> Result<Process> {
    let spec = config.require(&config.process, "process")?;
    match spec {
        ProcessSpec::BoundaryDrivenSip {
            m,
            lambda_l,
            lambda_r,
            n_sites,
        } => Process::boundary(m.clone(), lambda_l.clone(), lambda_r.clone(), *n_sites),
        other => Process::new(other.clone(), config.graph()?),
    }
}

fn boundary_params(config: &ExperimentConfig) -> Result<(Q, Q, Q, usize)> {
    match config.require(&config.process, "process")? {
        ProcessSpec::BoundaryDrivenSip {
            m,
            lambda_l,
            lambda_r,
            n_sites,
        } => Ok((m.clone(), lambda_l.clone(), lambda_r.clone(), *n_sites)),
        other => Err(Error::InvalidConfig(format!(
            "{} needs a BoundaryDrivenSIP process, got {}",
            config.experiment.name(),
            other.name()
        ))),
    }
}

fn finish(
    passed: bool,
    worst_case: Option<String>,
    summary: serde_json::Value,
    table: Table,
) -> Outcome {
    Outcome {
        passed,
        worst_case,
        summary,
        table,
    }
}

fn verify_duality(config: &ExperimentConfig) -> Result<Outcome> {
    let max_dual = config.max_dual.unwrap_or(3);
    let mut reports: Vec<(String, DualityReport)> = Vec::new();
    let mut extra: Vec<(String, Q)> = Vec::new();
    if let Some(family) = &config.diffusion {
        reports.push((
            "diffusion".into(),
            verify_diffusion_duality(&config.graph()?, family, max_dual)?,
        ));
    } else {
        let p = process(config)?;
        if let ProcessSpec::BoundaryDrivenSip {
            m,
            lambda_l,
            lambda_r,
            ..
        } = p.spec()
        {
            let occupancy = config.max_occupancy.unwrap_or(3);
            reports.push((
                "boundary".into(),
                verify_boundary_duality(&p, max_dual, occupancy)?,
            ));
            for (side, lambda) in [("left", lambda_l), ("right", lambda_r)] {
                extra.push((
                    format!("reservoir-identity-{side}"),
                    reservoir_identity_residual(m, lambda, 10)?,
                ));
            }
        } else {
            let occupancy = config.max_occupancy.unwrap_or(4);
            reports.push(("self".into(), verify_self_duality(&p, max_dual, occupancy)?));
        }
    }
    let mut table = Table::new(&[
        "check",
        "family",
        "cases",
        "max_abs_residual",
        "scale",
        "passed",
        "worst_case",
    ]);
    let mut passed = true;
    let mut worst = None;
    for (check, r) in &reports {
        passed &= r.passed();
        if !r.passed() && worst.is_none() {
            worst = Some(format!(
                "{check} {}: {}",
                r.family,
                r.worst_case.clone().unwrap_or_default()
            ));
        }
        table.push(vec![
            check.clone(),
            r.family.clone(),
            r.cases_checked.to_string(),
            r.max_abs_residual.clone(),
            r.scale.clone().unwrap_or_default(),
            r.passed().to_string(),
            r.worst_case.clone().unwrap_or_default(),
        ]);
    }
    for (check, residual) in &extra {
        let ok = residual == &qi(0);
        passed &= ok;
        if !ok && worst.is_none() {
            worst = Some(format!("{check}: residual {}", format_rational(residual)));
        }
        table.push(vec![
            check.clone(),
            "k<=n<=10".into(),
            "55".into(),
            format_rational(residual),
            String::new(),
            ok.to_string(),
            String::new(),
        ]);
    }
    let summary = json!({
        "reports": reports.iter().map(|(_, r)| r).collect::<Vec<_>>(),
        "reservoir_identity": extra.iter().map(|(c, r)| json!({"check": c, "max_abs_residual": format_rational(r)})).collect::<Vec<_>>(),
    });
    Ok(finish(passed, worst, summary, table))
}

fn comparison(config: &ExperimentConfig) -> Result<Outcome> {
    let graph = config.graph()?;
    let n = *config.require(&config.particles, "particles")?;
    let spec = config.require(&config.process, "process")?;
    let (a, b) = spec
        .ab()
        .filter(|_| !matches!(spec, ProcessSpec::BoundaryDrivenSip { .. }))
        .ok_or_else(|| {
            Error::InvalidConfig("comparison needs a SIP, SEP, GeneralizedAB or IRW process".into())
        })?;
    let times = config.times()?;
    let functions: Vec<TestFunction> = match (&config.function, config.functions) {
        (Some(f), _) => vec![f.clone()],
        (None, Some(k)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed()?);
            (0..k)
                .map(|_| random_test_function(graph.len(), n, &mut rng))
                .collect()
        }
        (None, None) => {
            return Err(Error::InvalidConfig(
                "comparison needs `function` or `functions`".into(),
            ))
        }
    };
    let setup = ComparisonSetup::new(&graph, n, &a, &b)?;
    let pd = functions
        .iter()
        .map(|f| f.to_pd_function(graph.len(), n))
        .collect::<Result<Vec<_>>>()?;
    let cases: Vec<(usize, f64)> = (0..pd.len())
        .flat_map(|i| times.iter().map(move |&t| (i, t)))
        .collect();
    let reports = cases
        .par_iter()
        .map(|&(i, t)| setup.check(&pd[i], t, config.eps))
        .collect::<Result<Vec<CheckReport>>>()?;
    let mut table = Table::new(&[
        "function",
        "t",
        "states",
        "worst_margin",
        "tolerance",
        "passed",
        "worst_case",
    ]);
    for (&(i, t), r) in cases.iter().zip(&reports) {
        table.push(vec![
            i.to_string(),
            fmt_f64(t),
            r.cases.to_string(),
            fmt_f64(r.worst_margin),
            fmt_f64(r.tolerance),
            r.passed.to_string(),
            r.worst_case.clone(),
        ]);
    }
    let worst = reports
        .iter()
        .zip(&cases)
        .min_by(|x, y| x.0.worst_margin.total_cmp(&y.0.worst_margin))
        .map(|(r, (i, t))| {
            format!(
                "function {i} t={t}: margin {:e} at {}",
                r.worst_margin, r.worst_case
            )
        });
    let passed = reports.iter().all(|r| r.passed);
    let summary = json!({
        "a": format_rational(&a),
        "b": format_rational(&b),
        "particles": n,
        "functions": functions,
        "min_margin": reports.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min),
    });
    Ok(finish(passed, worst, summary, table))
}

fn correlations(config: &ExperimentConfig) -> Result<Outcome> {
    let graph = config.graph()?;
    let measure = config.require(&config.measure, "measure")?;
    let points = config.require(&config.points, "points")?;
    let times = config.times()?;
    let check = |t: f64| -> Result<CorrelationReport> {
        match config.experiment {
            Experiment::SipCorrelations => {
                sip_correlation_check(&graph, measure, points, t, config.eps)
            }
            Experiment::SepCorrelations => {
                sep_correlation_check(&graph, measure, points, t, config.eps)
            }
            _ => diffusion_correlation_check(&graph, measure, points, t, config.eps),
        }
    };
    let reports = times
        .par_iter()
        .map(|&t| check(t))
        .collect::<Result<Vec<_>>>()?;
    // optional Monte Carlo estimate of the left side, started from the measure itself
    let estimates: Vec<Option<Estimate>> = match config.replicas {
        None => vec![None; times.len()],
        Some(replicas) => {
            let seed = config.seed()?;
            let dynamics = match measure.pairing() {
                DualityKind::Discrete(DiscreteFamily::Sip { m }) => {
                    Dynamics::Jump(Process::new(ProcessSpec::sip(m), graph.clone())?)
                }
                DualityKind::Discrete(DiscreteFamily::Sep { n }) => {
                    Dynamics::Jump(Process::new(ProcessSpec::sep(n), graph.clone())?)
                }
                DualityKind::Diffusion(family) => Dynamics::Diffusion {
                    graph: graph.clone(),
                    family,
                    dt: config.dt.unwrap_or(1e-3),
                },
            };
            let xi = OccupationConfig::from_points(graph.len(), points)?;
            times
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    estimate_k(
                        &dynamics,
                        measure,
                        &xi,
                        t,
                        replicas,
                        seed.wrapping_add(i as u64),
                    )
                    .map(Some)
                })
                .collect::<Result<_>>()?
        }
    };
    let mut table = Table::new(&[
        "t",
        "lhs",
        "rhs",
        "margin",
        "tolerance",
        "passed",
        "covariance",
        "mc_mean",
        "mc_stderr",
        "mc_agrees",
    ]);
    let mut mc_ok = true;
    for ((t, r), e) in times.iter().zip(&reports).zip(&estimates) {
        let agrees = e.as_ref().map(|e| e.within(r.lhs, config.sigmas));
        mc_ok &= agrees.unwrap_or(true);
        table.push(vec![
            fmt_f64(*t),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.check.worst_margin),
            fmt_f64(r.check.tolerance),
            r.check.passed.to_string(),
            r.covariance.map(fmt_f64).unwrap_or_default(),
            e.as_ref().map(|e| fmt_f64(e.mean)).unwrap_or_default(),
            e.as_ref().map(|e| fmt_f64(e.stderr)).unwrap_or_default(),
            agrees.map(|a| a.to_string()).unwrap_or_default(),
        ]);
    }
    let passed = reports.iter().all(|r| r.check.passed) && mc_ok;
    let worst = if mc_ok {
        reports
            .iter()
            .min_by(|x, y| x.check.worst_margin.total_cmp(&y.check.worst_margin))
            .map(|r| format!("{}: margin {:e}", r.check.worst_case, r.check.worst_margin))
    } else {
        Some(format!(
            "Monte Carlo estimate disagrees with the exact value beyond {} standard errors",
            config.sigmas
        ))
    };
    Ok(finish(
        passed,
        worst,
        json!({ "checks": reports, "estimates": estimates }),
        table,
    ))
}

fn boundary(config: &ExperimentConfig) -> Result<Outcome> {
    let (m, ll, lr, n_sites) = boundary_params(config)?;
    let sets: Vec<Vec<usize>> = match (&config.point_sets, &config.points) {
        (Some(sets), _) => sets.clone(),
        (None, Some(points)) => vec![points.clone()],
        (None, None) => {
            return Err(Error::InvalidConfig(
                "boundary needs `points` or `point_sets`".into(),
            ))
        }
    };
    let reports = sets
        .par_iter()
        .map(|p| boundary_correlation_check(n_sites, &m, &ll, &lr, p))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "points",
        "exact_margin",
        "margin",
        "tolerance",
        "passed",
        "detail",
    ]);
    for (p, r) in sets.iter().zip(&reports) {
        let pts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        table.push(vec![
            pts.join(" "),
            r.exact_margin.clone().unwrap_or_default(),
            fmt_f64(r.worst_margin),
            fmt_f64(r.tolerance),
            r.passed.to_string(),
            r.worst_case.clone(),
        ]);
    }
    let passed = reports.iter().all(|r| r.passed);
    let worst = reports
        .iter()
        .min_by(|x, y| x.worst_margin.total_cmp(&y.worst_margin))
        .map(|r| {
            format!(
                "{}: exact margin {}",
                r.worst_case,
                r.exact_margin.clone().unwrap_or_default()
            )
        });
    let summary = json!({ "equilibrium": ll == lr, "checks": reports });
    Ok(finish(passed, worst, summary, table))
}

fn profile(config: &ExperimentConfig) -> Result<Outcome> {
    let (m, ll, lr, n_sites) = boundary_params(config)?;
    let r = density_profile(n_sites, &m, &ll, &lr)?;
    let mut table = Table::new(&["site", "profile", "linear_formula", "deviation"]);
    for i in 0..n_sites {
        table.push(vec![
            (i + 1).to_string(),
            format_rational(&r.profile[i]),
            format_rational(&r.linear_formula[i]),
            format_rational(&r.deviation[i]),
        ]);
    }
    let worst = (!r.affine).then(|| {
        let d: Vec<String> = r.second_differences.iter().map(format_rational).collect();
        format!("second differences {}", d.join(" "))
    });
    Ok(finish(r.affine, worst, json!(r), table))
}

fn meeting(config: &ExperimentConfig) -> Result<Outcome> {
    let graph = config.graph()?;
    let m = match config.require(&config.process, "process")? {
        ProcessSpec::Sip { m } => m.clone(),
        other => {
            return Err(Error::InvalidConfig(format!(
                "meeting needs a SIP process, got {}",
                other.name()
            )));
        }
    };
    let points = config.require(&config.points, "points")?;
    let r = meeting_probability_report(&graph, &m, points, config.times()?, config.eps)?;
    let mut table = Table::new(&["t", "q1", "q2", "q3", "q4", "q5", "q6", "q7", "ordered"]);
    for row in &r.rows {
        let mut cells = vec![fmt_f64(row.t)];
        cells.extend([row.q1, row.q2, row.q3, row.q4, row.q5, row.q6, row.q7].map(fmt_f64));
        cells.push(row.ordered.to_string());
        table.push(cells);
    }
    let worst = r
        .rows
        .iter()
        .find(|row| !row.ordered)
        .map(|row| format!("ordering fails at t={}", row.t));
    Ok(finish(r.ordering_holds, worst, json!(r), table))
}

fn horizon(config: &ExperimentConfig) -> Result<f64> {
    Ok(config.times()?.iter().cloned().fold(0.0, f64::max))
}

fn simulate(config: &ExperimentConfig) -> Result<Outcome> {
    let seed = config.seed()?;
    let start = config.require(&config.start, "start")?;
    let horizon = horizon(config)?;
    let mut rng = replica_rng(seed, 0);
    let mut csv = Vec::new();
    let (passed, summary) = if let Some(family) = &config.diffusion {
        let graph = config.graph()?;
        let dt = config.dt.unwrap_or(1e-3);
        let run = match family {
            DiffusionFamily::Bmp => simulate_bmp(&graph, start, horizon, dt, true, &mut rng)?,
            DiffusionFamily::Bep { m } => {
                simulate_bep(&graph, m, start, horizon, dt, true, &mut rng)?
            }
        };
        run.write_csv(&mut csv)?;
        let (before, after, exact) = match family {
            DiffusionFamily::Bmp => {
                let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
                (sq(start), sq(&run.final_state), false)
            }
            DiffusionFamily::Bep { .. } => (start.iter().sum(), run.final_state.iter().sum(), true),
        };
        // rotations lose at most a few ulps each; energies are conserved bit for bit
        let allowed = if exact {
            0.0
        } else {
            8.0 * f64::EPSILON * run.steps.max(1) as f64 * before.abs()
        };
        let ok = (after - before).abs() <= allowed;
        (
            ok,
            json!({"family": family.name(), "steps": run.steps, "clamps": run.clamps,
                   "conserved_before": before, "conserved_after": after, "final_state": run.final_state}),
        )
    } else {
        let p = process(config)?;
        let counts: Vec<u32> = start
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as u32)
                } else {
                    Err(Error::InvalidConfig(format!(
                        "`start` entry {v} is not an occupation number"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        let eta = OccupationConfig::new(counts);
        let tr = simulate_ctmc(&p, &eta, horizon, &mut rng)?;
        tr.write_csv(&mut csv)?;
        let conserved =
            !p.spec().is_conservative() || tr.states.iter().all(|s| s.total() == eta.total());
        (
            conserved,
            json!({"process": p.spec().name(), "jumps": tr.jumps(), "final_state": tr.final_state().counts()}),
        )
    };
    let table = csv_table(&csv);
    Ok(finish(
        passed,
        (!passed).then(|| "conservation violated".to_string()),
        summary,
        table,
    ))
}

fn csv_table(bytes: &[u8]) -> Table {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let mut table = Table::new(&header);
    for line in lines {
        table.push(line.split(',').map(str::to_string).collect());
    }
    table
}

fn sample(config: &ExperimentConfig) -> Result<Outcome> {
    let seed = config.seed()?;
    let measure = config.require(&config.measure, "measure")?;
    let draws = config.replicas.unwrap_or(1000) as usize;
    let mut rng = replica_rng(seed, 0);
    let mut table = Table::new(&["draw", "site", "value"]);
    for d in 0..draws {
        let mut buf = Vec::new();
        write_sample_csv(&sample_product(measure, &mut rng)?, &mut buf)?;
        for row in csv_table(&buf).rows {
            let mut cells = vec![d.to_string()];
            cells.extend(row);
            table.push(cells);
        }
    }
    let bins = config.bins.unwrap_or(20);
    let mut fits = Vec::new();
    let mut passed = true;
    let mut worst = None;
    for (x, param) in measure.profile.iter().enumerate() {
        let degenerate = param == &qi(0);
        if degenerate || draws < 100 {
            continue;
        }
        let r = goodness_of_fit(
            &measure.family,
            param,
            draws,
            bins,
            &mut replica_rng(seed, 1 + x as u64),
        )?;
        if r.p_value <= 1e-3 {
            passed = false;
            worst.get_or_insert(format!("site {x}: chi-square p = {:e}", r.p_value));
        }
        fits.push(json!({"site": x, "param": format_rational(param), "gof": r}));
    }
    Ok(finish(
        passed,
        worst,
        json!({"draws": draws, "goodness_of_fit": fits}),
        table,
    ))
}
