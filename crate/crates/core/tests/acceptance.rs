//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Each criterion runs the library battery part(s) and, next to them,
//! independent oracles written here from closed forms on small systems.
//! Tolerances and runtime budgets are pinned below.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_traits::{One, Zero};
use statrs::distribution::{Discrete, NegativeBinomial};

use dualiscope::duality::{
    apply_diffusion_generator, verify_diffusion_duality, DiffusionFamily, SitePolynomial,
};
use dualiscope::engine::{
    build_labeled_generator, build_sector_generator, detailed_balance_check, semigroup_apply,
};
use dualiscope::inequalities::boundary::{boundary_moment, density_profile};
use dualiscope::inequalities::comparison::comparison_check;
use dualiscope::inequalities::correlations::dual_expectation;
use dualiscope::inequalities::pd::PDFunction;
use dualiscope::measures::nu_pmf;
use dualiscope::model::{
    configs_with_max, configs_with_total_at_most, enumerate_moves, LabeledConfig, MoveKind,
    OccupationConfig, Process, ProcessSpec, SiteGraph,
};
use dualiscope::num::{q, qi, to_f64, Q};
use dualiscope::suite::{has_part, run_part, title, Part};

/// Uniformization tolerance.
const EPS: f64 = 1e-12;
/// Agreement between a semigroup value and its closed form.
const CLOSED_FORM_TOL: f64 = 1e-10;
/// Comparison margins may undershoot zero by this much.
const COMPARISON_TOL: f64 = 2.0 * EPS + 1e-10;
/// Relative agreement of the negative-binomial pmf with an independent implementation.
const PMF_REL_TOL: f64 = 1e-12;
/// Relative agreement of a truncated moment sum with `ρ^k`.
const MOMENT_REL_TOL: f64 = 1e-9;
/// Runtime budgets in seconds.
const BUDGET_CRITERION_1: f64 = 60.0;
const BUDGET_CRITERION_5: f64 = 300.0;
const BUDGET_EXACT_TOTAL: f64 = 600.0;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rising(x: &Q, k: u32) -> Q {
    (0..k).fold(Q::one(), |acc, i| acc * (x + qi(i as i64)))
}

fn falling(l: u32, k: u32) -> Q {
    if k > l {
        return Q::zero();
    }
    (0..k).fold(Q::one(), |acc, i| acc * qi((l - i) as i64))
}

fn choose(n: u32, k: u32) -> Q {
    if k > n {
        return Q::zero();
    }
    falling(n, k) / falling(k, k)
}

/// Single-site jump rate factor of the process on the move `x -> y`.
#[derive(Clone)]
enum Rates {
    Sip(Q),
    Sep(u32),
}

impl Rates {
    fn rate(&self, from: u32, to: u32) -> Q {
        match self {
            Rates::Sip(m) => qi(from as i64) * (qi(2) * m + qi(4 * to as i64)),
            Rates::Sep(n) => {
                if to >= *n {
                    Q::zero()
                } else {
                    qi(from as i64 * (*n - to) as i64)
                }
            }
        }
    }

    fn d(&self, k: u32, l: u32) -> Q {
        match self {
            Rates::Sip(m) => falling(l, k) / rising(&(m / qi(2)), k),
            Rates::Sep(n) => {
                if k > *n {
                    Q::zero()
                } else {
                    choose(l, k) / choose(*n, k)
                }
            }
        }
    }

    fn product(&self, xi: &[u32], eta: &[u32]) -> Q {
        xi.iter()
            .zip(eta)
            .fold(Q::one(), |acc, (&k, &l)| acc * self.d(k, l))
    }

    /// `Σ_{x≠y} p(x,y) rate(s_x, s_y) (f(s - δ_x + δ_y) - f(s))`.
    fn generator(&self, kernel: &[Vec<Q>], s: &[u32], f: impl Fn(&[u32]) -> Q) -> Q {
        let base = f(s);
        let mut acc = Q::zero();
        for x in 0..s.len() {
            for y in 0..s.len() {
                if x == y || s[x] == 0 || kernel[x][y].is_zero() {
                    continue;
                }
                let r = &kernel[x][y] * self.rate(s[x], s[y]);
                if r.is_zero() {
                    continue;
                }
                let mut t = s.to_vec();
                t[x] -= 1;
                t[y] += 1;
                acc += r * (f(&t) - &base);
            }
        }
        acc
    }
}

/// Hand-rolled self-duality and rate cross-check over all small states.
fn self_duality_oracle(rates: Rates, spec: ProcessSpec, max_dual: u32, max_occ: u32) -> Check {
    let graphs = [
        SiteGraph::two_site(),
        SiteGraph::path(3).unwrap(),
        SiteGraph::complete(3).unwrap(),
        SiteGraph::path(4).unwrap(),
    ];
    let cap = match &rates {
        Rates::Sep(n) => Some(*n),
        Rates::Sip(_) => None,
    };
    let mut cases = 0usize;
    for g in &graphs {
        let kernel = g.kernel().to_vec();
        let process = Process::new(spec.clone(), g.clone()).map_err(|e| e.to_string())?;
        let etas = configs_with_max(g.len(), cap.map_or(max_occ, |c| c.min(max_occ)));
        let xis = configs_with_total_at_most(g.len(), max_dual, cap);
        for eta in &etas {
            let eta = eta.counts();
            // library rates agree with the oracle, move by move
            let moves = enumerate_moves(&process, &OccupationConfig::new(eta.to_vec()))
                .map_err(|e| e.to_string())?;
            let mut positive = 0;
            for x in 0..eta.len() {
                for y in 0..eta.len() {
                    if x != y && !(&kernel[x][y] * rates.rate(eta[x], eta[y])).is_zero() {
                        positive += 1;
                    }
                }
            }
            ensure(moves.len() == positive, || {
                format!("move count {} vs {positive} at {eta:?}", moves.len())
            })?;
            for mv in &moves {
                let MoveKind::Jump { from, to } = mv.kind else {
                    return Err("non-jump move in a conservative process".into());
                };
                let expect = &kernel[from][to] * rates.rate(eta[from], eta[to]);
                ensure(mv.rate == expect, || {
                    format!("rate {from}->{to} at {eta:?}: {} vs {expect}", mv.rate)
                })?;
            }
            for xi in &xis {
                let xi = xi.counts();
                let lhs = rates.generator(&kernel, eta, |e| rates.product(xi, e));
                let rhs = rates.generator(&kernel, xi, |x| rates.product(x, eta));
                ensure(lhs == rhs, || {
                    format!("xi={xi:?} eta={eta:?}: {lhs} vs {rhs}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} hand-computed duality cases, rates match"))
}

type Poly2 = BTreeMap<(u32, u32), Q>;

fn p_add(a: &Poly2, b: &Poly2, c: &Q) -> Poly2 {
    let mut out = a.clone();
    for (e, v) in b {
        *out.entry(*e).or_insert_with(Q::zero) += c * v;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn p_map(a: &Poly2, f: impl Fn(u32, u32) -> Option<((u32, u32), Q)>) -> Poly2 {
    let mut out = Poly2::new();
    for (&(i, j), v) in a {
        if let Some((e, c)) = f(i, j) {
            *out.entry(e).or_insert_with(Q::zero) += c * v;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn dx(a: &Poly2) -> Poly2 {
    p_map(a, |i, j| (i > 0).then(|| ((i - 1, j), qi(i as i64))))
}

fn dy(a: &Poly2) -> Poly2 {
    p_map(a, |i, j| (j > 0).then(|| ((i, j - 1), qi(j as i64))))
}

fn mx(a: &Poly2) -> Poly2 {
    p_map(a, |i, j| Some(((i + 1, j), Q::one())))
}

fn my(a: &Poly2) -> Poly2 {
    p_map(a, |i, j| Some(((i, j + 1), Q::one())))
}

fn double_factorial_odd(k: u32) -> Q {
    (1..=k).fold(Q::one(), |acc, i| acc * qi(2 * i as i64 - 1))
}

/// Two-site diffusion duality `L D(ξ,·) = Σ ξ_x(2m+4ξ_y)(D(ξ^{x→y},·) - D(ξ,·))` by hand.
fn diffusion_oracle() -> Check {
    let bmp_d = |k: u32, l: u32| -> Poly2 {
        Poly2::from([(
            (2 * k, 2 * l),
            Q::one() / (double_factorial_odd(k) * double_factorial_odd(l)),
        )])
    };
    let bep_d = |k: u32, l: u32, m: &Q| -> Poly2 {
        let half = m / qi(2);
        let c = |k: u32| Q::one() / (dualiscope::num::pow(&qi(2), k) * rising(&half, k));
        Poly2::from([((k, l), c(k) * c(l))])
    };
    let bmp_gen = |f: &Poly2| -> Poly2 {
        let rot = |g: &Poly2| p_add(&mx(&dy(g)), &my(&dx(g)), &qi(-1));
        rot(&rot(f))
    };
    let bep_gen = |f: &Poly2, m: &Q| -> Poly2 {
        let tr = |g: &Poly2| p_add(&dx(g), &dy(g), &qi(-1));
        let t1 = tr(f);
        let second = mx(&my(&tr(&t1)));
        let drift = p_add(&mx(&t1), &my(&t1), &qi(-1));
        p_add(
            &p_add(&Poly2::new(), &second, &qi(4)),
            &drift,
            &-(qi(2) * m),
        )
    };
    let dual_side = |k: u32, l: u32, m: &Q, d: &dyn Fn(u32, u32) -> Poly2| -> Poly2 {
        let mut out = Poly2::new();
        let base = d(k, l);
        if k > 0 {
            let r = qi(k as i64) * (qi(2) * m + qi(4 * l as i64));
            out = p_add(&p_add(&out, &d(k - 1, l + 1), &r), &base, &-r.clone());
        }
        if l > 0 {
            let r = qi(l as i64) * (qi(2) * m + qi(4 * k as i64));
            out = p_add(&p_add(&out, &d(k + 1, l - 1), &r), &base, &-r.clone());
        }
        out
    };
    let g = SiteGraph::two_site();
    let to_poly2 = |p: &SitePolynomial| -> Poly2 {
        let mut out = Poly2::new();
        for (e, c) in p.terms() {
            if !c.is_zero() {
                out.insert((e[0], e[1]), c.clone());
            }
        }
        out
    };
    let mut cases = 0;
    for k in 0..=4u32 {
        for l in 0..=(4 - k) {
            let xi = OccupationConfig::new(vec![k, l]);
            let lhs = bmp_gen(&bmp_d(k, l));
            let rhs = dual_side(k, l, &qi(1), &bmp_d);
            ensure(lhs == rhs, || format!("BMP oracle xi=({k},{l})"))?;
            let lib = apply_diffusion_generator(
                &DiffusionFamily::Bmp.duality_polynomial(&xi),
                &g,
                &DiffusionFamily::Bmp,
            );
            ensure(to_poly2(&lib) == lhs, || {
                format!("library BMP image xi=({k},{l})")
            })?;
            cases += 1;
            for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
                let d = |a: u32, b: u32| bep_d(a, b, &m);
                let lhs = bep_gen(&d(k, l), &m);
                let rhs = dual_side(k, l, &m, &d);
                ensure(lhs == rhs, || format!("BEP({m}) oracle xi=({k},{l})"))?;
                let family = DiffusionFamily::Bep { m: m.clone() };
                let lib = apply_diffusion_generator(&family.duality_polynomial(&xi), &g, &family);
                ensure(to_poly2(&lib) == lhs, || {
                    format!("library BEP({m}) image xi=({k},{l})")
                })?;
                cases += 1;
            }
        }
    }
    for family in [DiffusionFamily::Bmp, DiffusionFamily::Bep { m: q(7, 3) }] {
        let r = verify_diffusion_duality(&g, &family, 4).map_err(|e| e.to_string())?;
        ensure(r.passed() && r.scale.is_none(), || format!("{r:?}"))?;
    }
    Ok(format!(
        "{cases} two-site polynomial images match a hand-rolled calculus, no rescaling"
    ))
}

/// Boundary chain on `N` sites: bulk SIP with unit weights, reservoirs on both ends.
fn boundary_oracle() -> Check {
    let mut cases = 0usize;
    for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
        let half = &m / qi(2);
        for lambda in [q(1, 3), q(1, 2), q(3, 4)] {
            let one = Q::one();
            let birth = |k: u32| (&half + qi(k as i64)) * &lambda / (&one - &lambda);
            let death = |k: u32| qi(k as i64) / (&one - &lambda);
            let rho = &lambda / (&one - &lambda);
            let d = |k: u32, n: u32| falling(n, k) / rising(&half, k);
            for n in 1..=10u32 {
                for k in 1..=n {
                    let lhs =
                        birth(n) * (d(k, n + 1) - d(k, n)) + death(n) * (d(k, n - 1) - d(k, n));
                    let rhs = qi(k as i64) * (d(k - 1, n) * &rho - d(k, n));
                    ensure(lhs == rhs, || {
                        format!("reservoir identity m={m} λ={lambda} k={k} n={n}")
                    })?;
                    cases += 1;
                }
            }
        }
    }
    // full boundary duality, hand-built on both sides
    for n_sites in [2usize, 3] {
        for m in [q(1, 2), qi(1), qi(2)] {
            let half = &m / qi(2);
            for (ll, lr) in [(q(1, 3), q(1, 2)), (q(1, 5), q(2, 3))] {
                let one = Q::one();
                let rho_l = &ll / (&one - &ll);
                let rho_r = &lr / (&one - &lr);
                let d = |k: u32, n: u32| falling(n, k) / rising(&half, k);
                let dual_fn = |xi: &[u32], eta: &[u32]| -> Q {
                    let mut v = dualiscope::num::pow(&rho_l, xi[0])
                        * dualiscope::num::pow(&rho_r, xi[n_sites + 1]);
                    for x in 0..n_sites {
                        v *= d(xi[x + 1], eta[x]);
                    }
                    v
                };
                let bulk = Rates::Sip(m.clone());
                let unit: Vec<Vec<Q>> = (0..n_sites)
                    .map(|x| {
                        (0..n_sites)
                            .map(|y| {
                                if x.abs_diff(y) == 1 {
                                    Q::one()
                                } else {
                                    Q::zero()
                                }
                            })
                            .collect()
                    })
                    .collect();
                let unit_dual: Vec<Vec<Q>> = (0..n_sites + 2)
                    .map(|x| {
                        (0..n_sites + 2)
                            .map(|y| {
                                let bulk_edge = x.abs_diff(y) == 1
                                    && (1..=n_sites).contains(&x)
                                    && (1..=n_sites).contains(&y);
                                if bulk_edge {
                                    Q::one()
                                } else {
                                    Q::zero()
                                }
                            })
                            .collect()
                    })
                    .collect();
                for eta in configs_with_max(n_sites, 3) {
                    let eta = eta.counts();
                    for xi in configs_with_total_at_most(n_sites + 2, 3, None) {
                        let xi = xi.counts();
                        let base = dual_fn(xi, eta);
                        let mut lhs = bulk.generator(&unit, eta, |e| dual_fn(xi, e));
                        for (site, lam) in [(0usize, &ll), (n_sites - 1, &lr)] {
                            let k = eta[site];
                            let b = (&half + qi(k as i64)) * lam / (&one - lam);
                            let dd = qi(k as i64) / (&one - lam);
                            let mut up = eta.to_vec();
                            up[site] += 1;
                            lhs += b * (dual_fn(xi, &up) - &base);
                            if k > 0 {
                                let mut down = eta.to_vec();
                                down[site] -= 1;
                                lhs += dd * (dual_fn(xi, &down) - &base);
                            }
                        }
                        let mut rhs = bulk.generator(&unit_dual, xi, |x| dual_fn(x, eta));
                        for (from, to) in [(1usize, 0usize), (n_sites, n_sites + 1)] {
                            if xi[from] > 0 {
                                let mut t = xi.to_vec();
                                t[from] -= 1;
                                t[to] += 1;
                                rhs += qi(xi[from] as i64) * (dual_fn(&t, eta) - &base);
                            }
                        }
                        ensure(lhs == rhs, || {
                            format!("boundary N={n_sites} m={m} xi={xi:?} eta={eta:?}")
                        })?;
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{cases} reservoir-identity and hand-built boundary duality cases"
    ))
}

/// Two labeled walkers on two sites: from apart, P(together at t) is a two-state chain.
fn together_probability(a: f64, b: f64, t: f64) -> f64 {
    let alpha = 2.0 * (a + b);
    let beta = 2.0 * a;
    if alpha + beta == 0.0 {
        return 0.0;
    }
    alpha / (alpha + beta) * (1.0 - (-(alpha + beta) * t).exp())
}

fn comparison_oracle() -> Check {
    let g = SiteGraph::two_site();
    let f =
        PDFunction::from_fn(2, 2, |x| (x[0] == x[1]) as u8 as f64).map_err(|e| e.to_string())?;
    let mut cases = 0;
    let setups: Vec<(Q, Q, f64)> = vec![
        (qi(1), qi(4), 1.0),
        (qi(2), qi(4), 1.0),
        (q(14, 3), qi(4), 1.0),
        (qi(1), qi(-1), -1.0),
        (qi(2), qi(-1), -1.0),
        (qi(3), qi(-1), -1.0),
    ];
    for (a, b, sign) in setups {
        let gen = build_labeled_generator(&g, 2, &a, &b).map_err(|e| e.to_string())?;
        let indep = build_labeled_generator(&g, 2, &a, &Q::zero()).map_err(|e| e.to_string())?;
        let apart = LabeledConfig::new(vec![0, 1]);
        let values = |gen: &dualiscope::engine::GeneratorMatrix<LabeledConfig>, t: f64| {
            let ind: Vec<f64> = gen
                .states()
                .iter()
                .map(|s| (s.positions()[0] == s.positions()[1]) as u8 as f64)
                .collect();
            semigroup_apply(&gen.to_float(), &ind, t, EPS)
                .map(|r| r.values[gen.index_of(&apart).unwrap()])
        };
        for t in [0.1, 0.5, 1.0, 5.0] {
            let (af, bf) = (to_f64(&a), to_f64(&b));
            let exact_int = together_probability(af, bf, t);
            let exact_ind = together_probability(af, 0.0, t);
            let lib_int = values(&gen, t).map_err(|e| e.to_string())?;
            let lib_ind = values(&indep, t).map_err(|e| e.to_string())?;
            ensure((lib_int - exact_int).abs() <= CLOSED_FORM_TOL, || {
                format!("a={a} b={b} t={t}: semigroup {lib_int} vs closed form {exact_int}")
            })?;
            ensure((lib_ind - exact_ind).abs() <= CLOSED_FORM_TOL, || {
                format!("independent a={a} t={t}: {lib_ind} vs {exact_ind}")
            })?;
            ensure(sign * (exact_int - exact_ind) >= 0.0, || {
                format!("closed form violates the inequality at a={a} b={b} t={t}")
            })?;
            let r = comparison_check(&g, 2, &a, &b, &f, t, EPS).map_err(|e| e.to_string())?;
            ensure(r.passed && r.worst_margin >= -COMPARISON_TOL, || {
                format!("{r:?}")
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} two-walker meeting probabilities match closed forms within {CLOSED_FORM_TOL:e}"
    ))
}

fn balance_oracle() -> Check {
    let g = SiteGraph::two_site();
    let mut cases = 0;
    for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
        let half = &m / qi(2);
        let w =
            |k: u32, l: u32| rising(&half, k) / falling(k, k) * rising(&half, l) / falling(l, l);
        let process = Process::new(ProcessSpec::sip(m.clone()), g.clone()).unwrap();
        for total in 1..=6u32 {
            for k in 1..=total {
                let forward =
                    w(k, total - k) * qi(k as i64) * (qi(2) * &m + qi(4 * (total - k) as i64));
                let backward = w(k - 1, total - k + 1)
                    * qi((total - k + 1) as i64)
                    * (qi(2) * &m + qi(4 * (k - 1) as i64));
                ensure(forward == backward, || {
                    format!("SIP({m}) oracle N={total} k={k}")
                })?;
            }
            let gen = build_sector_generator(&process, total).map_err(|e| e.to_string())?;
            let mu: Vec<Q> = gen.states().iter().map(|s| w(s.get(0), s.get(1))).collect();
            let r = detailed_balance_check(&gen, &mu).map_err(|e| e.to_string())?;
            ensure(r.is_zero(), || {
                format!("library SIP({m}) sector {total}: {r}")
            })?;
            let mut perturbed = mu.clone();
            perturbed[0] *= qi(2);
            let r = detailed_balance_check(&gen, &perturbed).map_err(|e| e.to_string())?;
            ensure(!r.is_zero(), || {
                format!("perturbed weights pass at SIP({m}) N={total}")
            })?;
            cases += 1;
        }
    }
    for n in 1..=3u32 {
        let process = Process::new(ProcessSpec::sep(n), g.clone()).unwrap();
        let w = |k: u32, l: u32| choose(n, k) * choose(n, l);
        for total in 1..=2 * n {
            let gen = build_sector_generator(&process, total).map_err(|e| e.to_string())?;
            let mu: Vec<Q> = gen.states().iter().map(|s| w(s.get(0), s.get(1))).collect();
            let r = detailed_balance_check(&gen, &mu).map_err(|e| e.to_string())?;
            ensure(r.is_zero(), || {
                format!("library SEP({n}) sector {total}: {r}")
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} two-site sectors balance with hand-derived weights; perturbed weights rejected"
    ))
}

fn correlation_oracle() -> Check {
    let g = SiteGraph::two_site();
    let mut cases = 0;
    let profiles: [[f64; 2]; 4] = [[0.5, 2.0], [1.0, 3.0], [0.1, 0.9], [2.5, 0.25]];
    for (a, b, sign) in [
        (1.0, 4.0, 1.0),
        (2.0, 4.0, 1.0),
        (2.0, -1.0, -1.0),
        (3.0, -1.0, -1.0),
    ] {
        for rho in profiles {
            let rho = if sign < 0.0 {
                [rho[0].min(1.0), rho[1].min(1.0)]
            } else {
                rho
            };
            for t in [0.1, 0.5, 1.0, 5.0] {
                let p = together_probability(a, b, t);
                let pair =
                    p * (rho[0] * rho[0] + rho[1] * rho[1]) / 2.0 + (1.0 - p) * rho[0] * rho[1];
                let e = (-2.0 * a * t).exp();
                let mean = (rho[0] + rho[1]) / 2.0;
                let half = (rho[0] - rho[1]) / 2.0;
                let singles = (mean + half * e) * (mean - half * e);
                let (qa, qb) = (
                    dualiscope::num::from_f64(a).unwrap(),
                    dualiscope::num::from_f64(b).unwrap(),
                );
                let lib = dual_expectation(&g, &qa, &qb, &rho, &[0, 1], t, EPS)
                    .map_err(|e| e.to_string())?;
                ensure(
                    (lib - pair).abs() <= CLOSED_FORM_TOL * pair.max(1.0),
                    || format!("a={a} b={b} ρ={rho:?} t={t}: {lib} vs {pair}"),
                )?;
                ensure(sign * (pair - singles) >= -CLOSED_FORM_TOL, || {
                    format!("closed-form margin has the wrong sign at a={a} b={b} ρ={rho:?} t={t}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} two-site dual moments match closed forms, signs as claimed"
    ))
}

fn steady_state_oracle() -> Check {
    let mut cases = 0;
    for n_sites in 2..=6usize {
        for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
            for (ll, lr) in [(qi(0), q(1, 2)), (q(1, 3), q(3, 4)), (q(2, 3), q(1, 5))] {
                let one = Q::one();
                let rho_l = &ll / (&one - &ll);
                let rho_r = &lr / (&one - &lr);
                let r = density_profile(n_sites, &m, &ll, &lr).map_err(|e| e.to_string())?;
                for (i, p) in r.profile.iter().enumerate() {
                    let i = qi(i as i64 + 1);
                    let hit = (&i + qi(2) * &m - qi(1)) / (qi(n_sites as i64) + qi(4) * &m - qi(1));
                    let expect = &rho_l + (&rho_r - &rho_l) * hit;
                    ensure(*p == expect, || {
                        format!("profile N={n_sites} m={m} site {i}: {p} vs {expect}")
                    })?;
                }
                cases += 1;
            }
            let lam = q(2, 5);
            let rho = &lam / (Q::one() - &lam);
            for points in [vec![1, n_sites], vec![1, 1], vec![1, 2, n_sites]] {
                let v =
                    boundary_moment(n_sites, &m, &rho, &rho, &points).map_err(|e| e.to_string())?;
                let expect = dualiscope::num::pow(&rho, points.len() as u32);
                ensure(v == expect, || {
                    format!("equilibrium moment N={n_sites} {points:?}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} profiles equal ρL + (ρR-ρL)(i+2m-1)/(N+4m-1) exactly; equilibrium moments are ρ^k"
    ))
}

fn measure_oracle() -> Check {
    let mut cases = 0;
    for m in [q(1, 2), qi(1), qi(2), q(7, 3), qi(6)] {
        for lambda in [q(1, 10), q(1, 3), q(1, 2), q(4, 5)] {
            let (mf, lf) = (to_f64(&m), to_f64(&lambda));
            let nb = NegativeBinomial::new(mf / 2.0, 1.0 - lf).map_err(|e| e.to_string())?;
            for k in 0..=50u32 {
                let lib = nu_pmf(k, &m, &lambda).map_err(|e| e.to_string())?.value;
                let reference = nb.pmf(k as u64);
                ensure(
                    (lib - reference).abs() <= PMF_REL_TOL * reference.max(1e-300) + 1e-300,
                    || format!("pmf m={m} λ={lambda} k={k}: {lib} vs {reference}"),
                )?;
                cases += 1;
            }
            let rho = lf / (1.0 - lf);
            for j in 0..=4u32 {
                let mut acc = 0.0;
                for k in 0..=5000u64 {
                    let pk = nb.pmf(k);
                    if pk == 0.0 && k > 50 {
                        break;
                    }
                    let mut d = 1.0;
                    for i in 0..j as u64 {
                        d *= (k as f64 - i as f64) / (mf / 2.0 + i as f64);
                    }
                    acc += pk * d.max(0.0);
                }
                let target = rho.powi(j as i32);
                ensure(
                    (acc - target).abs() <= MOMENT_REL_TOL * target.max(1.0),
                    || format!("moment m={m} λ={lambda} j={j}: {acc} vs {target}"),
                )?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} pmf values and moments agree with statrs' negative binomial"
    ))
}

fn run_cli(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_dualiscope"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())
}

fn conservation_oracle() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (
            "sep",
            r#"{"experiment":"simulate","process":{"variant":"SEP","n":2},"graph":{"kind":"cycle","sites":4},"start":[2,0,1,1],"times":[10],"seed":5}"#,
        ),
        (
            "bep",
            r#"{"experiment":"simulate","diffusion":{"family":"BEP","m":"2"},"graph":{"kind":"path","sites":4},"start":[1.5,0,2.25,0.75],"times":[1],"dt":0.01,"seed":5}"#,
        ),
    ];
    let mut rows = 0;
    for (name, json) in configs {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, json).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for jobs in ["1", "4", "1"] {
            let out = dir.path().join(format!("{name}-{jobs}-{}", outputs.len()));
            let o = run_cli(&[
                "run",
                "--config",
                path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--jobs",
                jobs,
            ])?;
            ensure(o.status.code() == Some(0), || {
                format!(
                    "{name}: exit {:?}: {}",
                    o.status.code(),
                    String::from_utf8_lossy(&o.stderr)
                )
            })?;
            outputs.push(std::fs::read(out.join("cases.csv")).map_err(|e| e.to_string())?);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{name}: reruns are not byte-identical")
        })?;
        let text = String::from_utf8(outputs[0].clone()).map_err(|e| e.to_string())?;
        let mut totals: BTreeMap<String, f64> = BTreeMap::new();
        for line in text.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            let v: f64 = cells[2].parse().map_err(|e| format!("{e}"))?;
            *totals.entry(cells[0].to_string()).or_default() += v;
            rows += 1;
        }
        let first = *totals.values().next().ok_or("empty trajectory")?;
        ensure(totals.values().all(|&s| s == first), || {
            format!("{name}: total not conserved exactly in cases.csv")
        })?;
    }
    Ok(format!(
        "{rows} CSV rows from CLI reruns (1 and 4 threads) are byte-identical and conserve totals"
    ))
}

fn oracle(criterion: u8) -> Check {
    match criterion {
        1 => self_duality_oracle(Rates::Sip(q(7, 3)), ProcessSpec::sip(q(7, 3)), 3, 3).and_then(
            |a| {
                self_duality_oracle(Rates::Sip(q(1, 2)), ProcessSpec::sip(q(1, 2)), 2, 3)
                    .map(|b| format!("{a}; {b}"))
            },
        ),
        2 => self_duality_oracle(Rates::Sep(2), ProcessSpec::sep(2), 3, 4).and_then(|a| {
            self_duality_oracle(Rates::Sep(1), ProcessSpec::sep(1), 3, 4)
                .map(|b| format!("{a}; {b}"))
        }),
        3 => diffusion_oracle(),
        4 => boundary_oracle(),
        5 => comparison_oracle(),
        6 => balance_oracle(),
        7 => correlation_oracle(),
        8 => steady_state_oracle(),
        9 => measure_oracle(),
        10 => conservation_oracle(),
        _ => Err("no oracle".into()),
    }
}

fn budget(criterion: u8) -> Option<f64> {
    match criterion {
        1 => Some(BUDGET_CRITERION_1),
        5 => Some(BUDGET_CRITERION_5),
        _ => None,
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut exact_seconds = 0.0;
    let mut lines = Vec::new();
    for criterion in 1..=10u8 {
        let mut passed = true;
        let mut notes = Vec::new();
        for part in [Part::Exact, Part::Stochastic] {
            if !has_part(criterion, part) {
                continue;
            }
            match run_part(criterion, part) {
                Ok(o) => {
                    if part == Part::Exact {
                        exact_seconds += o.seconds;
                    }
                    if let Some(limit) = budget(criterion).filter(|_| part == Part::Exact) {
                        if o.seconds > limit {
                            passed = false;
                            notes.push(format!("over budget: {:.1}s > {limit}s", o.seconds));
                        }
                    }
                    passed &= o.passed;
                    notes.push(format!(
                        "{part:?}: {} ({} cases, {:.1}s) {}",
                        if o.passed { "pass" } else { "FAIL" },
                        o.cases,
                        o.seconds,
                        o.detail
                    ));
                }
                Err(e) => {
                    passed = false;
                    notes.push(format!("{part:?}: error: {e}"));
                }
            }
        }
        let started = Instant::now();
        match oracle(criterion) {
            Ok(msg) => notes.push(format!(
                "oracle: pass ({msg}, {:.1}s)",
                started.elapsed().as_secs_f64()
            )),
            Err(msg) => {
                passed = false;
                notes.push(format!("oracle: FAIL {msg}"));
            }
        }
        all &= passed;
        let line = format!(
            "criterion {criterion:>2} {}: {}",
            if passed { "PASS" } else { "FAIL" },
            title(criterion)
        );
        println!("{line}");
        for n in &notes {
            println!("    {n}");
        }
        lines.push(line);
    }
    let within = exact_seconds <= BUDGET_EXACT_TOTAL;
    all &= within;
    println!(
        "exact battery: {exact_seconds:.1}s (budget {BUDGET_EXACT_TOTAL}s) {}",
        if within { "ok" } else { "OVER BUDGET" }
    );
    println!();
    for line in &lines {
        println!("{line}");
    }
    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
