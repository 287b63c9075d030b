//! Duality functions, the polynomial calculus for the diffusions, and exact
//! duality-identity checks.

pub mod check;
pub mod diffusion;
pub mod poly;
pub mod single;

use num_traits::{One, Signed, Zero};

pub use check::{
    boundary_duality_residual, diffusion_duality_residual, reservoir_identity_residual,
    self_duality_residual, verify_boundary_duality, verify_diffusion_duality, verify_self_duality,
    DualityReport,
};
pub use diffusion::{apply_diffusion_generator, DiffusionFamily};
pub use poly::SitePolynomial;
pub use single::{bep_d, bmp_d, sep_d, sip_d, DiscreteFamily, SingleSiteTable};

use crate::error::{Error, Result};
use crate::model::OccupationConfig;
use crate::num::{pow, Q};

/// Finite dual particle configuration `xi`; same representation as an occupation.
pub type DualConfig = OccupationConfig;

/// `D(xi, eta) = prod_x d(xi_x, eta_x)`.
pub fn duality_product(
    xi: &DualConfig,
    eta: &OccupationConfig,
    family: &DiscreteFamily,
) -> Result<Q> {
    if xi.len() != eta.len() {
        return Err(Error::InvalidConfig(format!(
            "dual configuration has {} sites, configuration has {}",
            xi.len(),
            eta.len()
        )));
    }
    eta.check_cap(family.cap())?;
    let mut acc = Q::one();
    for (&k, &l) in xi.counts().iter().zip(eta.counts()) {
        if k == 0 {
            continue;
        }
        acc *= family.single(k, l)?;
        if acc.is_zero() {
            break;
        }
    }
    Ok(acc)
}

/// Same as [`duality_product`] with memoized single-site values.
pub fn duality_product_cached(
    xi: &DualConfig,
    eta: &OccupationConfig,
    table: &SingleSiteTable,
) -> Result<Q> {
    let mut acc = Q::one();
    for (&k, &l) in xi.counts().iter().zip(eta.counts()) {
        if k == 0 {
            continue;
        }
        acc *= table.get(k, l)?;
        if acc.is_zero() {
            break;
        }
    }
    Ok(acc)
}

/// Boundary duality `rho_L^{xi_0} D(xi|_{1..N}, eta) rho_R^{xi_{N+1}}`;
/// `xi` has `N + 2` entries, `eta` has `N`.
pub fn boundary_duality(
    xi: &DualConfig,
    eta: &OccupationConfig,
    m: &Q,
    rho_l: &Q,
    rho_r: &Q,
) -> Result<Q> {
    let n = eta.len();
    if xi.len() != n + 2 {
        return Err(Error::InvalidConfig(format!(
            "boundary dual needs N+2 = {} sites, got {}",
            n + 2,
            xi.len()
        )));
    }
    if rho_l.is_negative() || rho_r.is_negative() {
        return Err(Error::InvalidParameter(
            "reservoir densities must be >= 0".into(),
        ));
    }
    let mut acc = pow(rho_l, xi.get(0)) * pow(rho_r, xi.get(n + 1));
    for x in 1..=n {
        let k = xi.get(x);
        if k > 0 {
            acc *= sip_d(k, eta.get(x - 1), m);
        }
    }
    Ok(acc)
}

/// `|D(sum_i delta_{x_i}, eta) - prod_i D(delta_{x_i}, eta)|`.
pub fn factorization_defect(
    points: &[usize],
    eta: &OccupationConfig,
    family: &DiscreteFamily,
) -> Result<Q> {
    let xi = OccupationConfig::from_points(eta.len(), points)?;
    let joint = duality_product(&xi, eta, family)?;
    let mut product = Q::one();
    for &x in points {
        let single = OccupationConfig::from_points(eta.len(), &[x])?;
        product *= duality_product(&single, eta, family)?;
    }
    Ok((joint - product).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    fn occ(v: &[u32]) -> OccupationConfig {
        OccupationConfig::new(v.to_vec())
    }

    #[test]
    fn product_examples() {
        let sip2 = DiscreteFamily::Sip { m: qi(2) };
        assert_eq!(
            duality_product(&occ(&[0, 0]), &occ(&[3, 1]), &sip2).unwrap(),
            qi(1)
        );
        assert_eq!(
            duality_product(&occ(&[1, 1]), &occ(&[1, 2]), &sip2).unwrap(),
            qi(2)
        );
        let sep = DiscreteFamily::Sep { n: 1 };
        assert!(duality_product(&occ(&[1, 0]), &occ(&[2, 0]), &sep).is_err());
    }

    #[test]
    fn second_factorial_moment_relation() {
        // m = 1: eta^2 - eta = (3/4) D(2 delta_z, eta)
        let sip1 = DiscreteFamily::Sip { m: qi(1) };
        for n in 0..10u32 {
            let d = duality_product(&occ(&[2]), &occ(&[n]), &sip1).unwrap();
            assert_eq!(q(3, 4) * d, qi((n * n) as i64 - n as i64));
        }
    }

    #[test]
    fn boundary_examples() {
        let (rl, rr) = (q(1, 3), qi(3));
        let eta = occ(&[1, 0]);
        let m = qi(2);
        assert_eq!(
            boundary_duality(&occ(&[1, 0, 0, 0]), &eta, &m, &rl, &rr).unwrap(),
            rl
        );
        assert_eq!(
            boundary_duality(&occ(&[1, 0, 0, 1]), &eta, &m, &rl, &rr).unwrap(),
            &rl * &rr
        );
        assert_eq!(
            boundary_duality(&occ(&[1, 1, 0, 0]), &eta, &m, &rl, &rr).unwrap(),
            rl
        );
        // interior-only dual reduces to the plain product
        let xi = occ(&[0, 1, 1, 0]);
        let plain = duality_product(
            &occ(&[1, 1]),
            &occ(&[2, 3]),
            &DiscreteFamily::Sip { m: m.clone() },
        )
        .unwrap();
        assert_eq!(
            boundary_duality(&xi, &occ(&[2, 3]), &m, &rl, &rr).unwrap(),
            plain
        );
    }

    #[test]
    fn defect_examples() {
        let sip1 = DiscreteFamily::Sip { m: qi(1) };
        let eta = occ(&[2, 5, 1]);
        assert_eq!(
            factorization_defect(&[0, 1, 2], &eta, &sip1).unwrap(),
            qi(0)
        );
        assert_eq!(factorization_defect(&[], &eta, &sip1).unwrap(), qi(0));
        assert_eq!(
            factorization_defect(&[0, 0], &eta, &sip1).unwrap(),
            q(40, 3)
        );
    }
}
