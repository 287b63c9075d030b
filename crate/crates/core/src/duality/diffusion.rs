//! Generators of the momentum (BMP) and energy (BEP) diffusions acting on polynomials.

use serde::{Deserialize, Serialize};

use super::poly::SitePolynomial;
use super::single::{bep_d, bmp_d};
use super::DualConfig;
use crate::model::SiteGraph;
use crate::num::{qi, serde_q, Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum DiffusionFamily {
    #[serde(rename = "BMP")]
    Bmp,
    #[serde(rename = "BEP")]
    Bep {
        #[serde(with = "serde_q")]
        m: Q,
    },
}

impl DiffusionFamily {
    /// Parameter `m` of the inclusion process dual to this diffusion.
    pub fn dual_sip_m(&self) -> Q {
        match self {
            DiffusionFamily::Bmp => qi(1),
            DiffusionFamily::Bep { m } => m.clone(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DiffusionFamily::Bmp => "BMP".to_string(),
            DiffusionFamily::Bep { m } => format!("BEP({})", crate::num::format_rational(m)),
        }
    }

    /// `D(xi, .)` as a polynomial in the site variables.
    pub fn duality_polynomial(&self, xi: &DualConfig) -> SitePolynomial {
        let vars = xi.len();
        let mut out = SitePolynomial::constant(vars, qi(1));
        for (x, &k) in xi.counts().iter().enumerate() {
            if k == 0 {
                continue;
            }
            let single = match self {
                DiffusionFamily::Bmp => bmp_d(k),
                DiffusionFamily::Bep { m } => bep_d(k, m),
            };
            out = &out * &single.embed(vars, &[x]);
        }
        out
    }
}

/// Rotation generator `eta_x d/d eta_y - eta_y d/d eta_x`.
fn rotation(f: &SitePolynomial, x: usize, y: usize) -> SitePolynomial {
    &f.derivative(y).times_var(x) - &f.derivative(x).times_var(y)
}

/// `d/d eta_x - d/d eta_y`.
fn transfer(f: &SitePolynomial, x: usize, y: usize) -> SitePolynomial {
    &f.derivative(x) - &f.derivative(y)
}

/// Edge operator acting on the pair `{x, y}`.
pub fn edge_operator(
    f: &SitePolynomial,
    x: usize,
    y: usize,
    family: &DiffusionFamily,
) -> SitePolynomial {
    match family {
        DiffusionFamily::Bmp => rotation(&rotation(f, x, y), x, y),
        DiffusionFamily::Bep { m } => {
            let d1 = transfer(f, x, y);
            let d2 = transfer(&d1, x, y);
            let second = d2.times_var(x).times_var(y).scale(&qi(4));
            let drift = &d1.times_var(x) - &d1.times_var(y);
            &second - &drift.scale(&(qi(2) * m))
        }
    }
}

/// Exact image of `f` under `sum_{x<y} p(x,y) A_{xy}` (unordered pairs).
pub fn apply_diffusion_generator(
    f: &SitePolynomial,
    graph: &SiteGraph,
    family: &DiffusionFamily,
) -> SitePolynomial {
    assert_eq!(
        f.vars(),
        graph.len(),
        "polynomial and graph disagree on the site count"
    );
    let mut out = SitePolynomial::zero(f.vars());
    for (x, y, p) in graph.edges() {
        out = &out + &edge_operator(f, x, y, family).scale(&p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: usize, x: usize) -> SitePolynomial {
        SitePolynomial::var(n, x)
    }

    #[test]
    fn bmp_on_square() {
        let g = SiteGraph::two_site();
        let f = &var(2, 0) * &var(2, 0);
        let lf = apply_diffusion_generator(&f, &g, &DiffusionFamily::Bmp);
        let expected = &(&(&var(2, 1) * &var(2, 1)) - &f).scale(&qi(2)) + &SitePolynomial::zero(2);
        assert_eq!(lf, expected);
    }

    #[test]
    fn bep_on_linear() {
        let g = SiteGraph::two_site();
        // with m = 1 the image of eta_0 is 2 (eta_1 - eta_0); in general 2m (eta_1 - eta_0)
        for (m, factor) in [(qi(1), qi(2)), (qi(3), qi(6))] {
            let lf = apply_diffusion_generator(&var(2, 0), &g, &DiffusionFamily::Bep { m });
            assert_eq!(lf, (&var(2, 1) - &var(2, 0)).scale(&factor));
        }
    }

    #[test]
    fn conserved_quantities_are_annihilated() {
        let g = SiteGraph::complete(3).unwrap();
        let energy = (0..3).fold(SitePolynomial::zero(3), |acc, x| &acc + &var(3, x));
        let kinetic = (0..3).fold(SitePolynomial::zero(3), |acc, x| {
            &acc + &(&var(3, x) * &var(3, x))
        });
        assert!(
            apply_diffusion_generator(&energy, &g, &DiffusionFamily::Bep { m: qi(5) }).is_zero()
        );
        assert!(apply_diffusion_generator(&kinetic, &g, &DiffusionFamily::Bmp).is_zero());
    }
}
