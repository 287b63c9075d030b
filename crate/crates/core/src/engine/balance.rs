use std::fmt::Debug;
use std::hash::Hash;

use num_traits::{Signed, Zero};

use super::generator::GeneratorMatrix;
use crate::error::{Error, Result};
use crate::num::Q;

/// Largest violation `|mu(s) G(s,s') - mu(s') G(s',s)|` over all transitions.
/// Zero certifies that `mu` is reversible (hence stationary) for `G`.
pub fn detailed_balance_check<S>(gen: &GeneratorMatrix<S>, mu: &[Q]) -> Result<Q>
where
    S: Clone + Eq + Hash + Debug,
{
    if mu.len() != gen.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} states",
            mu.len(),
            gen.len()
        )));
    }
    if let Some(i) = mu.iter().position(|w| !w.is_positive()) {
        return Err(Error::InvalidParameter(format!(
            "weight of state {:?} must be > 0",
            gen.states()[i]
        )));
    }
    let mut worst = Q::zero();
    for i in 0..gen.len() {
        for (j, r) in gen.row(i) {
            let v = (&mu[i] * r - &mu[*j] * gen.rate(*j, i)).abs();
            if v > worst {
                worst = v;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::build_sector_generator;
    use crate::model::{Process, ProcessSpec, SiteGraph};
    use crate::num::{binomial, factorial, q, qi, rising_factorial};

    #[test]
    fn sip_sector_is_reversible_for_discrete_gamma_weights() {
        let m = q(7, 3);
        let p = Process::new(ProcessSpec::sip(m.clone()), SiteGraph::path(3).unwrap()).unwrap();
        let gen = build_sector_generator(&p, 4).unwrap();
        let mu: Vec<Q> = gen
            .states()
            .iter()
            .map(|eta| {
                eta.counts()
                    .iter()
                    .map(|&k| {
                        rising_factorial(&(&m / qi(2)), k) / Q::from_integer(factorial(k as u64))
                    })
                    .product()
            })
            .collect();
        assert_eq!(detailed_balance_check(&gen, &mu).unwrap(), qi(0));
    }

    #[test]
    fn sep_sector_is_reversible_for_binomial_weights() {
        let p = Process::new(ProcessSpec::sep(2), SiteGraph::complete(3).unwrap()).unwrap();
        let gen = build_sector_generator(&p, 3).unwrap();
        let mu: Vec<Q> = gen
            .states()
            .iter()
            .map(|eta| {
                eta.counts()
                    .iter()
                    .map(|&k| Q::from_integer(binomial(2, k as u64)))
                    .product()
            })
            .collect();
        assert_eq!(detailed_balance_check(&gen, &mu).unwrap(), qi(0));
    }

    #[test]
    fn rotation_is_not_reversible() {
        let gen =
            GeneratorMatrix::from_transitions(vec![0u8, 1, 2], |s| Ok(vec![((s + 1) % 3, qi(1))]))
                .unwrap();
        let v = detailed_balance_check(&gen, &[qi(1), qi(1), qi(1)]).unwrap();
        assert_eq!(v, qi(1));
        assert!(detailed_balance_check(&gen, &[qi(1), qi(0), qi(1)]).is_err());
    }
}
