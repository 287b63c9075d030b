use crate::duality::{duality_product, DiffusionFamily, DiscreteFamily, DualConfig};
use crate::error::{Error, Result};
use crate::measures::{sample_product, DualityKind, ProductMeasureSpec, Sample};
use crate::model::{OccupationConfig, Process, ProcessSpec, SiteGraph};
use crate::num::to_f64;

use super::ctmc::run_ctmc;
use super::diffusion::{simulate_bep, simulate_bmp};
use super::{replicate, Estimate, Welford};

/// Dynamics along which a duality moment is transported.
#[derive(Debug, Clone)]
pub enum Dynamics {
    Jump(Process),
    Diffusion {
        graph: SiteGraph,
        family: DiffusionFamily,
        dt: f64,
    },
}

impl Dynamics {
    fn kind(&self) -> Result<DualityKind> {
        match self {
            Dynamics::Jump(p) => match p.spec() {
                ProcessSpec::Sip { m } => {
                    Ok(DualityKind::Discrete(DiscreteFamily::Sip { m: m.clone() }))
                }
                ProcessSpec::Sep { n } => Ok(DualityKind::Discrete(DiscreteFamily::Sep { n: *n })),
                other => Err(Error::InvalidPairing(format!(
                    "{} has no product duality moment",
                    other.name()
                ))),
            },
            Dynamics::Diffusion { family, .. } => Ok(DualityKind::Diffusion(family.clone())),
        }
    }

    fn sites(&self) -> usize {
        match self {
            Dynamics::Jump(p) => p.graph().len(),
            Dynamics::Diffusion { graph, .. } => graph.len(),
        }
    }
}

/// Monte Carlo estimate of `∫ D(ξ, η_t) μ(dη_0)`: sample `η_0 ~ μ`, run to
/// time `t`, evaluate the duality function.
pub fn estimate_k(
    dynamics: &Dynamics,
    measure: &ProductMeasureSpec,
    xi: &DualConfig,
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<Estimate> {
    let kind = dynamics.kind()?;
    if measure.pairing() != kind {
        return Err(Error::InvalidPairing(format!(
            "measure {:?} does not match the dynamics",
            measure.family
        )));
    }
    if xi.len() != dynamics.sites() || measure.len() != dynamics.sites() {
        return Err(Error::InvalidConfig(
            "dual configuration, measure and graph differ in size".into(),
        ));
    }
    if replicas < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicas, got {replicas}"
        )));
    }
    if xi.total() == 0 {
        return Ok(Estimate {
            mean: 1.0,
            stderr: 0.0,
            replicas,
            seed,
        });
    }
    let polynomial = match &kind {
        DualityKind::Diffusion(family) => Some(family.duality_polynomial(xi)),
        DualityKind::Discrete(_) => None,
    };
    replicate(replicas, seed, |rng| {
        let start = sample_product(measure, rng)?;
        match (dynamics, start, &kind) {
            (Dynamics::Jump(p), Sample::Discrete(eta), DualityKind::Discrete(family)) => {
                let end = run_ctmc(p, &eta, t, rng, |_, _| {})?;
                Ok(to_f64(&duality_product(xi, &end, family)?))
            }
            (Dynamics::Diffusion { graph, family, dt }, Sample::Continuous(eta), _) => {
                let run = match family {
                    DiffusionFamily::Bmp => simulate_bmp(graph, &eta, t, *dt, false, rng)?,
                    DiffusionFamily::Bep { m } => simulate_bep(graph, m, &eta, t, *dt, false, rng)?,
                };
                Ok(polynomial
                    .as_ref()
                    .expect("diffusion polynomial")
                    .eval_f64(&run.final_state))
            }
            _ => Err(Error::InvalidPairing(
                "sample type does not match the dynamics".into(),
            )),
        }
    })
}

/// Time average of `observable` over `[burn_in, horizon]` along one
/// trajectory, with a batch-means standard error over `batches` equal
/// time windows.
pub fn stationary_time_average<F>(
    process: &Process,
    start: &OccupationConfig,
    observable: F,
    burn_in: f64,
    horizon: f64,
    batches: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: Fn(&OccupationConfig) -> f64,
{
    if !(horizon > burn_in) || burn_in < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= burn-in < horizon, got {burn_in} and {horizon}"
        )));
    }
    if batches < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 batches, got {batches}"
        )));
    }
    let width = (horizon - burn_in) / batches as f64;
    // weighted running mean per batch; a constant observable stays exactly constant
    let mut means = vec![0.0f64; batches];
    let mut weights = vec![0.0f64; batches];
    let mut add = |from: f64, to: f64, value: f64| {
        let (mut a, b) = (from.max(burn_in), to.min(horizon));
        while a < b {
            let k = (((a - burn_in) / width) as usize).min(batches - 1);
            let end = (burn_in + (k + 1) as f64 * width).min(b);
            let end = if k + 1 == batches { b } else { end };
            let w = end - a;
            if w > 0.0 {
                weights[k] += w;
                means[k] += w / weights[k] * (value - means[k]);
            }
            if end <= a {
                break;
            }
            a = end;
        }
    };
    let mut last: Option<(f64, f64)> = None;
    let mut rng = super::replica_rng(seed, 0);
    run_ctmc(process, start, horizon, &mut rng, |t, eta| {
        if let Some((t0, v)) = last {
            add(t0, t, v);
        }
        last = Some((t, observable(eta)));
    })?;
    if let Some((t0, v)) = last {
        add(t0, horizon, v);
    }
    let mut acc = Welford::default();
    for m in means {
        acc.push(m);
    }
    Ok(acc.estimate(seed))
}
