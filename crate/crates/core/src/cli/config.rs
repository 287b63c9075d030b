//! Experiment configuration files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::duality::DiffusionFamily;
use crate::error::{Error, Result};
use crate::inequalities::TestFunction;
use crate::measures::ProductMeasureSpec;
use crate::model::{KernelKind, ProcessSpec, SiteGraph};
use crate::num::{from_f64, parse_rational, serde_q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyDuality,
    Comparison,
    SipCorrelations,
    SepCorrelations,
    DiffusionCorrelations,
    Boundary,
    Profile,
    Meeting,
    Simulate,
    Sample,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::VerifyDuality => "verify-duality",
            Experiment::Comparison => "comparison",
            Experiment::SipCorrelations => "sip-correlations",
            Experiment::SepCorrelations => "sep-correlations",
            Experiment::DiffusionCorrelations => "diffusion-correlations",
            Experiment::Boundary => "boundary",
            Experiment::Profile => "profile",
            Experiment::Meeting => "meeting",
            Experiment::Simulate => "simulate",
            Experiment::Sample => "sample",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Experiment::Simulate | Experiment::Sample)
    }
}

/// Site graph description; kernel entries may be exact strings (`"1/2"`), integers or floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    TwoSite,
    Path {
        sites: usize,
        #[serde(
            default,
            with = "serde_q::option",
            skip_serializing_if = "Option::is_none"
        )]
        weight: Option<Q>,
    },
    Cycle {
        sites: usize,
    },
    Complete {
        sites: usize,
    },
    Kernel {
        kernel: Vec<Vec<serde_json::Value>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        names: Option<Vec<String>>,
        #[serde(default = "default_kernel_kind")]
        weights: KernelKind,
    },
}

fn default_kernel_kind() -> KernelKind {
    KernelKind::Stochastic
}

impl GraphSpec {
    pub fn build(&self) -> Result<SiteGraph> {
        match self {
            GraphSpec::TwoSite => Ok(SiteGraph::two_site()),
            GraphSpec::Path {
                sites,
                weight: None,
            } => SiteGraph::path(*sites),
            GraphSpec::Path {
                sites,
                weight: Some(w),
            } => SiteGraph::path_with_weight(*sites, w.clone()),
            GraphSpec::Cycle { sites } => SiteGraph::cycle(*sites),
            GraphSpec::Complete { sites } => SiteGraph::complete(*sites),
            GraphSpec::Kernel {
                kernel,
                names,
                weights,
            } => {
                let mut float_origin = false;
                let mut rows = Vec::with_capacity(kernel.len());
                for (x, row) in kernel.iter().enumerate() {
                    let mut out = Vec::with_capacity(row.len());
                    for (y, v) in row.iter().enumerate() {
                        float_origin |= serde_q::is_float_literal(v);
                        out.push(kernel_entry(v).map_err(|e| Error::Parse {
                            path: format!("graph.kernel[{x}][{y}]"),
                            message: e.to_string(),
                        })?);
                    }
                    rows.push(out);
                }
                let names = names
                    .clone()
                    .unwrap_or_else(|| (0..rows.len()).map(|i| i.to_string()).collect());
                if names.len() != rows.len() {
                    return Err(Error::InvalidConfig(format!(
                        "{} site names for a {}-row kernel",
                        names.len(),
                        rows.len()
                    )));
                }
                SiteGraph::with_kind(names, rows, *weights, float_origin)
            }
        }
    }
}

fn kernel_entry(v: &serde_json::Value) -> Result<Q> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Q::from_integer(i.into())),
            None => from_f64(n.as_f64().unwrap_or(f64::NAN)),
        },
        other => Err(Error::InvalidConfig(format!(
            "expected a number, got {other}"
        ))),
    }
}

/// One experiment run. Only the fields the experiment needs are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<ProductMeasureSpec>,
    /// Diffusion checked against its dual SIP, or simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<usize>>,
    /// Several point tuples for the boundary experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_sets: Option<Vec<Vec<usize>>>,
    /// Initial state for `simulate`: occupations or diffusion values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Monte Carlo replicas (draws for `sample`; enables the estimate cross-check for correlations).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Uniformization tolerance.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Standard errors allowed between a Monte Carlo estimate and its exact value.
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dual: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_occupancy: Option<u32>,
    /// Number of labeled particles in the comparison experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<TestFunction>,
    /// Number of seeded random test functions when `function` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<usize>,
    /// Diffusion time step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Chi-square cells for continuous laws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_eps() -> f64 {
    1e-12
}

fn default_sigmas() -> f64 {
    3.0
}

impl ExperimentConfig {
    /// Parses JSON, naming the offending path on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| {
            Error::InvalidConfig(format!("{} needs field `{name}`", self.experiment.name()))
        })
    }

    pub fn graph(&self) -> Result<SiteGraph> {
        self.require(&self.graph, "graph")?.build()
    }

    pub fn times(&self) -> Result<&[f64]> {
        let times = self.require(&self.times, "times")?;
        if times.is_empty() {
            return Err(Error::InvalidConfig("`times` is empty".into()));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "`times` entry {t} is not a finite time >= 0"
            )));
        }
        Ok(times)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{} is stochastic and needs `seed`",
                self.experiment.name()
            ))
        })
    }

    /// Structural checks that do not depend on running anything.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "`eps` must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !(self.sigmas > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "`sigmas` must be > 0, got {}",
                self.sigmas
            )));
        }
        if self.times.is_some() {
            self.times()?;
        }
        if self.experiment.is_stochastic() {
            self.seed()?;
        }
        if let Some(spec) = &self.process {
            spec.validate()?;
        }
        if let Some(measure) = &self.measure {
            measure.validate()?;
        }
        if let (Some(graph), Some(points)) = (&self.graph, &self.points) {
            let sites = graph.build()?.len();
            if let Some(x) = points.iter().find(|&&x| x >= sites) {
                return Err(Error::InvalidConfig(format!(
                    "point {x} is not a site of the {sites}-site graph"
                )));
            }
        }
        Ok(())
    }
}
