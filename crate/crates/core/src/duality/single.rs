//! Single-site duality functions.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::poly::SitePolynomial;
use crate::error::{Error, Result};
use crate::num::{
    binomial, double_factorial_odd, falling_factorial, pow, qi, rising_factorial, serde_q, Q,
};

/// Inclusion duality `d(k,l) = l!/(l-k)! * Γ(m/2)/Γ(m/2+k)`, zero for `k > l`.
pub fn sip_d(k: u32, l: u32, m: &Q) -> Q {
    if k > l {
        return Q::zero();
    }
    let half = m / qi(2);
    Q::from_integer(falling_factorial(l as u64, k as u64)) / rising_factorial(&half, k)
}

/// Exclusion duality `d(k,l) = C(l,k)/C(n,k)`.
pub fn sep_d(k: u32, l: u32, n: u32) -> Result<Q> {
    if k > n {
        return Err(Error::InvalidDual(format!(
            "dual occupancy {k} above SEP cap {n}"
        )));
    }
    if l > n {
        return Err(Error::InvalidConfig(format!(
            "occupancy {l} above SEP cap {n}"
        )));
    }
    Ok(Q::new(
        binomial(l as u64, k as u64),
        binomial(n as u64, k as u64),
    ))
}

/// Momentum duality polynomial `z^{2k}/(2k-1)!!` in a single variable.
pub fn bmp_d(k: u32) -> SitePolynomial {
    SitePolynomial::monomial(
        vec![2 * k],
        Q::one() / Q::from_integer(double_factorial_odd(k)),
    )
}

/// Coefficient of the energy duality monomial: `Γ(m/2)/(2^k Γ(m/2+k))`.
pub fn bep_coefficient(k: u32, m: &Q) -> Q {
    let half = m / qi(2);
    Q::one() / (pow(&qi(2), k) * rising_factorial(&half, k))
}

/// Energy duality polynomial `y^k Γ(m/2)/(2^k Γ(m/2+k))` in a single variable.
pub fn bep_d(k: u32, m: &Q) -> SitePolynomial {
    SitePolynomial::monomial(vec![k], bep_coefficient(k, m))
}

/// Discrete duality families with product-form duality functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum DiscreteFamily {
    #[serde(rename = "SIP")]
    Sip {
        #[serde(with = "serde_q")]
        m: Q,
    },
    #[serde(rename = "SEP")]
    Sep { n: u32 },
}

impl DiscreteFamily {
    pub fn single(&self, k: u32, l: u32) -> Result<Q> {
        match self {
            DiscreteFamily::Sip { m } => Ok(sip_d(k, l, m)),
            DiscreteFamily::Sep { n } => sep_d(k, l, *n),
        }
    }

    pub fn cap(&self) -> Option<u32> {
        match self {
            DiscreteFamily::Sip { .. } => None,
            DiscreteFamily::Sep { n } => Some(*n),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DiscreteFamily::Sip { m } => format!("SIP({})", crate::num::format_rational(m)),
            DiscreteFamily::Sep { n } => format!("SEP({n})"),
        }
    }
}

/// Memoized `d(k, l)` for `k <= max_k`, `l <= max_l`; falls back to direct evaluation.
#[derive(Debug, Clone)]
pub struct SingleSiteTable {
    family: DiscreteFamily,
    table: Vec<Vec<Option<Q>>>,
}

impl SingleSiteTable {
    pub fn new(family: DiscreteFamily, max_k: u32, max_l: u32) -> Self {
        let table = (0..=max_k)
            .map(|k| (0..=max_l).map(|l| family.single(k, l).ok()).collect())
            .collect();
        SingleSiteTable { family, table }
    }

    pub fn family(&self) -> &DiscreteFamily {
        &self.family
    }

    pub fn get(&self, k: u32, l: u32) -> Result<Q> {
        if let Some(Some(v)) = self
            .table
            .get(k as usize)
            .and_then(|row| row.get(l as usize))
        {
            return Ok(v.clone());
        }
        self.family.single(k, l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    #[test]
    fn sip_examples() {
        for l in 0..6 {
            assert_eq!(sip_d(0, l, &q(7, 3)), qi(1));
        }
        assert_eq!(sip_d(3, 2, &qi(1)), qi(0));
        assert_eq!(sip_d(2, 3, &qi(2)), qi(3));
        // m = 1, l = 2: d(1,2) = 2/(1/2), d(2,2) = 2/(3/4)
        assert_eq!(sip_d(1, 2, &qi(1)), qi(4));
        assert_eq!(sip_d(2, 2, &qi(1)), q(8, 3));
    }

    #[test]
    fn sip_recursion() {
        for m in [q(1, 2), qi(1), qi(2), q(7, 3)] {
            for l in 0..=12u32 {
                for k in 0..l {
                    let lhs = sip_d(k + 1, l, &m) / sip_d(k, l, &m);
                    let rhs = qi((l - k) as i64) / (&m / qi(2) + qi(k as i64));
                    assert_eq!(lhs, rhs, "k={k} l={l} m={m}");
                }
            }
        }
    }

    #[test]
    fn sep_examples() {
        assert_eq!(sep_d(0, 2, 3).unwrap(), qi(1));
        assert_eq!(sep_d(2, 1, 3).unwrap(), qi(0));
        assert_eq!(sep_d(1, 1, 2).unwrap(), q(1, 2));
        assert_eq!(sep_d(2, 2, 2).unwrap(), qi(1));
        assert!(matches!(sep_d(3, 3, 2), Err(Error::InvalidDual(_))));
    }

    #[test]
    fn diffusion_monomials() {
        assert_eq!(bmp_d(0), SitePolynomial::constant(1, qi(1)));
        assert_eq!(bmp_d(1), SitePolynomial::monomial(vec![2], qi(1)));
        assert_eq!(bmp_d(2), SitePolynomial::monomial(vec![4], q(1, 3)));
        assert_eq!(bep_d(0, &qi(3)), SitePolynomial::constant(1, qi(1)));
        assert_eq!(bep_d(1, &qi(2)), SitePolynomial::monomial(vec![1], q(1, 2)));
        assert_eq!(bep_d(2, &qi(1)), SitePolynomial::monomial(vec![2], q(1, 3)));
    }

    #[test]
    fn table_matches_direct() {
        let t = SingleSiteTable::new(DiscreteFamily::Sip { m: q(1, 2) }, 3, 5);
        assert_eq!(t.get(2, 4).unwrap(), sip_d(2, 4, &q(1, 2)));
        assert_eq!(t.get(7, 9).unwrap(), sip_d(7, 9, &q(1, 2)));
        let s = SingleSiteTable::new(DiscreteFamily::Sep { n: 2 }, 2, 2);
        assert!(s.get(3, 1).is_err());
    }
}
