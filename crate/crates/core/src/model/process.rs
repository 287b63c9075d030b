//! Process variants and every jump/birth/death rate they use.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::config::{LabeledConfig, OccupationConfig};
use super::graph::SiteGraph;
use crate::error::{Error, Result};
use crate::num::{qi, qu, serde_q, Q};

/// Which interacting particle system is meant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ProcessSpec {
    #[serde(rename = "SIP")]
    Sip {
        #[serde(with = "serde_q")]
        m: Q,
    },
    #[serde(rename = "SEP")]
    Sep { n: u32 },
    #[serde(rename = "GeneralizedAB")]
    GeneralizedAb {
        #[serde(with = "serde_q")]
        a: Q,
        #[serde(with = "serde_q")]
        b: Q,
    },
    #[serde(rename = "IRW")]
    Irw {
        #[serde(with = "serde_q")]
        rate: Q,
    },
    #[serde(rename = "BoundaryDrivenSIP")]
    BoundaryDrivenSip {
        #[serde(with = "serde_q")]
        m: Q,
        #[serde(with = "serde_q")]
        lambda_l: Q,
        #[serde(with = "serde_q")]
        lambda_r: Q,
        n_sites: usize,
    },
}

impl ProcessSpec {
    pub fn sip(m: Q) -> Self {
        ProcessSpec::Sip { m }
    }

    pub fn sep(n: u32) -> Self {
        ProcessSpec::Sep { n }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Sip { m } => positive(m, "SIP parameter m"),
            ProcessSpec::Sep { n } => {
                if *n == 0 {
                    Err(Error::InvalidSpec("SEP(n) requires n >= 1".into()))
                } else {
                    Ok(())
                }
            }
            ProcessSpec::GeneralizedAb { a, b } => {
                positive(a, "generalized parameter a")?;
                if b.is_negative() {
                    let ratio = a / (-b);
                    if !ratio.is_integer() {
                        return Err(Error::InvalidSpec(format!(
                            "b < 0 requires a/(-b) to be a positive integer, got {ratio}"
                        )));
                    }
                }
                Ok(())
            }
            ProcessSpec::Irw { rate } => positive(rate, "IRW rate"),
            ProcessSpec::BoundaryDrivenSip {
                m,
                lambda_l,
                lambda_r,
                n_sites,
            } => {
                positive(m, "SIP parameter m")?;
                reservoir(lambda_l)?;
                reservoir(lambda_r)?;
                if *n_sites == 0 {
                    return Err(Error::InvalidSpec("boundary chain needs N >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// `(a, b)` such that the occupation rate is `eta_x p(x,y) (a + b eta_y)`.
    pub fn ab(&self) -> Option<(Q, Q)> {
        match self {
            ProcessSpec::Sip { m } => Some((qi(2) * m, qi(4))),
            ProcessSpec::Sep { n } => Some((qu(*n as u64), qi(-1))),
            ProcessSpec::GeneralizedAb { a, b } => Some((a.clone(), b.clone())),
            ProcessSpec::Irw { rate } => Some((rate.clone(), Q::zero())),
            ProcessSpec::BoundaryDrivenSip { m, .. } => Some((qi(2) * m, qi(4))),
        }
    }

    /// Per-site occupancy cap, if the dynamics has one.
    pub fn cap(&self) -> Option<u32> {
        match self {
            ProcessSpec::Sep { n } => Some(*n),
            ProcessSpec::GeneralizedAb { a, b } if b.is_negative() => {
                let r = (a / (-b)).to_integer();
                Some(u32::try_from(r).unwrap_or(u32::MAX))
            }
            _ => None,
        }
    }

    pub fn is_conservative(&self) -> bool {
        !matches!(self, ProcessSpec::BoundaryDrivenSip { .. })
    }

    pub fn name(&self) -> String {
        match self {
            ProcessSpec::Sip { m } => format!("SIP({})", crate::num::format_rational(m)),
            ProcessSpec::Sep { n } => format!("SEP({n})"),
            ProcessSpec::GeneralizedAb { a, b } => format!(
                "AB({},{})",
                crate::num::format_rational(a),
                crate::num::format_rational(b)
            ),
            ProcessSpec::Irw { rate } => format!("IRW({})", crate::num::format_rational(rate)),
            ProcessSpec::BoundaryDrivenSip { m, n_sites, .. } => {
                format!(
                    "BoundaryDrivenSIP({},N={n_sites})",
                    crate::num::format_rational(m)
                )
            }
        }
    }
}

fn positive(x: &Q, what: &str) -> Result<()> {
    if x.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{what} must be > 0, got {x}")))
    }
}

fn reservoir(lambda: &Q) -> Result<()> {
    if lambda.is_negative() || *lambda >= Q::one() {
        Err(Error::InvalidSpec(format!(
            "reservoir parameter must lie in [0,1), got {lambda}"
        )))
    } else {
        Ok(())
    }
}

/// A process bound to the graph it runs on.
///
/// The boundary-driven chain always runs on the unit-weight path `1..=N`
/// (stored 0-based), whatever graph the caller has in mind.
#[derive(Debug, Clone)]
pub struct Process {
    spec: ProcessSpec,
    graph: SiteGraph,
}

impl Process {
    pub fn new(spec: ProcessSpec, graph: SiteGraph) -> Result<Self> {
        spec.validate()?;
        if let ProcessSpec::BoundaryDrivenSip { n_sites, .. } = &spec {
            return Ok(Process {
                graph: SiteGraph::path_with_weight(*n_sites, Q::one())?,
                spec,
            });
        }
        Ok(Process { spec, graph })
    }

    pub fn boundary(m: Q, lambda_l: Q, lambda_r: Q, n_sites: usize) -> Result<Self> {
        let spec = ProcessSpec::BoundaryDrivenSip {
            m,
            lambda_l,
            lambda_r,
            n_sites,
        };
        spec.validate()?;
        Ok(Process {
            graph: SiteGraph::path_with_weight(n_sites, Q::one())?,
            spec,
        })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn graph(&self) -> &SiteGraph {
        &self.graph
    }

    pub fn check_state(&self, eta: &OccupationConfig) -> Result<()> {
        if eta.len() != self.graph.len() {
            return Err(Error::InvalidConfig(format!(
                "configuration has {} sites, graph has {}",
                eta.len(),
                self.graph.len()
            )));
        }
        eta.check_cap(self.spec.cap())
    }
}

/// `p(x,y) * 2 eta_x (m + 2 eta_y)`.
pub fn sip_jump_rate(
    eta: &OccupationConfig,
    x: usize,
    y: usize,
    m: &Q,
    graph: &SiteGraph,
) -> Result<Q> {
    distinct(x, y)?;
    let ex = qu(eta.get(x) as u64);
    let ey = qu(eta.get(y) as u64);
    Ok(graph.p(x, y) * qi(2) * ex * (m + qi(2) * ey))
}

/// `eta_x (n - eta_y) p(x,y)`.
pub fn sep_jump_rate(
    eta: &OccupationConfig,
    x: usize,
    y: usize,
    n: u32,
    graph: &SiteGraph,
) -> Result<Q> {
    distinct(x, y)?;
    let (ex, ey) = (eta.get(x), eta.get(y));
    if ex > n || ey > n {
        return Err(Error::InvalidConfig(format!(
            "occupancy ({ex},{ey}) above SEP cap {n}"
        )));
    }
    Ok(qu(ex as u64) * qu((n - ey) as u64) * graph.p(x, y))
}

/// `p(x_i, y) (a + b #{j : x_j = y})`.
pub fn labeled_jump_rate(
    config: &LabeledConfig,
    i: usize,
    y: usize,
    a: &Q,
    b: &Q,
    graph: &SiteGraph,
) -> Result<Q> {
    let xi = config.positions()[i];
    if xi == y {
        return Err(Error::InvalidMove(format!(
            "particle {i} is already at {y}"
        )));
    }
    let count = qu(config.count_at(y) as u64);
    let rate = graph.p(xi, y) * (a + b * count);
    if rate.is_negative() {
        return Err(Error::InvalidSpec(format!(
            "negative labeled rate {rate} for particle {i} -> {y}"
        )));
    }
    Ok(rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Reservoir birth rate `(m/2 + k) lambda / (1 - lambda)`.
pub fn boundary_birth_rate(k: u32, m: &Q, lambda: &Q) -> Result<Q> {
    reservoir(lambda).map_err(|_| {
        Error::InvalidSpec(format!("reservoir parameter must be < 1, got {lambda}"))
    })?;
    Ok((m / qi(2) + qu(k as u64)) * lambda / (Q::one() - lambda))
}

/// Reservoir death rate `k / (1 - lambda)`.
pub fn boundary_death_rate(k: u32, lambda: &Q) -> Result<Q> {
    reservoir(lambda).map_err(|_| {
        Error::InvalidSpec(format!("reservoir parameter must be < 1, got {lambda}"))
    })?;
    Ok(qu(k as u64) / (Q::one() - lambda))
}

fn distinct(x: usize, y: usize) -> Result<()> {
    if x == y {
        Err(Error::InvalidMove(format!("jump from {x} to itself")))
    } else {
        Ok(())
    }
}

/// `eta^{x,y}`: one particle moved from `x` to `y`.
pub fn apply_move(eta: &OccupationConfig, x: usize, y: usize) -> Result<OccupationConfig> {
    if eta.get(x) == 0 {
        return Err(Error::InvalidMove(format!("no particle at site {x}")));
    }
    let mut c = eta.0.clone();
    c[x] -= 1;
    c[y] += 1;
    Ok(OccupationConfig(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Jump { from: usize, to: usize },
    Birth { site: usize },
    Death { site: usize },
}

/// One positive-rate transition out of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub target: OccupationConfig,
    pub rate: Q,
}

/// Every positive-rate transition out of `eta`.
pub fn enumerate_moves(process: &Process, eta: &OccupationConfig) -> Result<Vec<Move>> {
    process.check_state(eta)?;
    let graph = process.graph();
    let (a, b) = process.spec().ab().expect("every variant has (a, b)");
    let mut out = Vec::new();
    for x in 0..graph.len() {
        let ex = eta.get(x);
        if ex == 0 {
            continue;
        }
        for (y, p) in graph.neighbors(x) {
            let rate = p * qu(ex as u64) * (&a + &b * qu(eta.get(*y) as u64));
            if rate.is_positive() {
                out.push(Move {
                    kind: MoveKind::Jump { from: x, to: *y },
                    target: apply_move(eta, x, *y)?,
                    rate,
                });
            }
        }
    }
    if let ProcessSpec::BoundaryDrivenSip {
        m,
        lambda_l,
        lambda_r,
        n_sites,
    } = process.spec()
    {
        let ends: &[(usize, &Q)] = &[(0, lambda_l), (*n_sites - 1, lambda_r)];
        // N = 1: both reservoirs act on the same site
        for &(site, lambda) in ends {
            let k = eta.get(site);
            let birth = boundary_birth_rate(k, m, lambda)?;
            if birth.is_positive() {
                let mut c = eta.0.clone();
                c[site] += 1;
                out.push(Move {
                    kind: MoveKind::Birth { site },
                    target: OccupationConfig(c),
                    rate: birth,
                });
            }
            let death = boundary_death_rate(k, lambda)?;
            if death.is_positive() {
                let mut c = eta.0.clone();
                c[site] -= 1;
                out.push(Move {
                    kind: MoveKind::Death { site },
                    target: OccupationConfig(c),
                    rate: death,
                });
            }
        }
    }
    Ok(out)
}

/// Every positive-rate transition of the labeled `(a, b)` dynamics.
pub fn enumerate_labeled_moves(
    config: &LabeledConfig,
    a: &Q,
    b: &Q,
    graph: &SiteGraph,
) -> Result<Vec<(LabeledConfig, Q)>> {
    config.check_sites(graph.len())?;
    let mut out = Vec::new();
    for (i, &xi) in config.positions().iter().enumerate() {
        for (y, _) in graph.neighbors(xi) {
            let rate = labeled_jump_rate(config, i, *y, a, b, graph)?;
            if rate.is_positive() {
                out.push((config.moved(i, *y), rate));
            }
        }
    }
    Ok(out)
}

/// Moves of the absorbing dual of the boundary-driven chain.
///
/// `xi` lives on `0..=N+1`; sites `1..=N` carry bulk inclusion dynamics with
/// unit edge weights, and each particle at `1` (resp. `N`) is absorbed into
/// `0` (resp. `N+1`) at rate 1.
pub fn enumerate_absorbing_dual_moves(
    n_sites: usize,
    m: &Q,
    xi: &OccupationConfig,
) -> Result<Vec<(OccupationConfig, Q)>> {
    if xi.len() != n_sites + 2 {
        return Err(Error::InvalidConfig(format!(
            "dual configuration has {} sites, expected N+2 = {}",
            xi.len(),
            n_sites + 2
        )));
    }
    let mut out = Vec::new();
    for x in 1..=n_sites {
        let k = xi.get(x);
        if k == 0 {
            continue;
        }
        for y in [x.wrapping_sub(1), x + 1] {
            if (1..=n_sites).contains(&y) {
                let rate = qu(k as u64) * qi(2) * (m + qi(2) * qu(xi.get(y) as u64));
                out.push((apply_move(xi, x, y)?, rate));
            }
        }
    }
    if xi.get(1) > 0 {
        out.push((apply_move(xi, 1, 0)?, qu(xi.get(1) as u64)));
    }
    if xi.get(n_sites) > 0 {
        out.push((
            apply_move(xi, n_sites, n_sites + 1)?,
            qu(xi.get(n_sites) as u64),
        ));
    }
    Ok(out)
}
