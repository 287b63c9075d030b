//! Transient analysis by uniformization.
//!
//! `e^{tG} f = sum_k Pois(Λh; k) P^k f` with `P = I + G/Λ`, applied over
//! time slices `h` with `Λh <= MAX_SLICE_MASS` so the Poisson weights never
//! underflow. `P` is stochastic, so each slice's truncation error is at most
//! its Poisson tail times `max|f|`; the slice budgets add up to `ε`.

use serde::{Deserialize, Serialize};

use super::generator::FloatGenerator;
use crate::error::{Error, Result};

const MAX_SLICE_MASS: f64 = 256.0;

/// `e^{tG} f` together with a bound on its sup-norm truncation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupResult {
    pub values: Vec<f64>,
    pub error_bound: f64,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn step(gen: &FloatGenerator, lambda: f64, v: &[f64], out: &mut [f64]) {
    for (i, row) in gen.rows.iter().enumerate() {
        let mut acc = 0.0;
        for &(j, r) in row {
            acc += r * (v[j] - v[i]);
        }
        out[i] = v[i] + acc / lambda;
    }
}

/// Applies one slice of mass `mu = Λh`, truncating once the certified tail
/// bound drops below `budget / max|f|`. Returns the tail actually incurred.
fn slice(gen: &FloatGenerator, lambda: f64, mu: f64, f: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let norm = sup_norm(f);
    let n = f.len();
    let mut result = vec![0.0; n];
    if norm == 0.0 {
        return (result, 0.0);
    }
    let mut weight = (-mu).exp();
    let mut power = f.to_vec();
    let mut scratch = vec![0.0; n];
    let mut k: u64 = 0;
    loop {
        for (r, p) in result.iter_mut().zip(&power) {
            *r += weight * p;
        }
        let next_weight = weight * mu / (k + 1) as f64;
        // sum_{j > k} w_j <= w_{k+1} / (1 - mu/(k+2)) once k + 2 > mu
        let ratio = mu / (k + 2) as f64;
        if ratio < 1.0 {
            let tail = next_weight / (1.0 - ratio);
            if tail * norm <= budget {
                return (result, tail * norm);
            }
        }
        step(gen, lambda, &power, &mut scratch);
        std::mem::swap(&mut power, &mut scratch);
        weight = next_weight;
        k += 1;
    }
}

/// `e^{tG} f` within `eps` in sup-norm.
pub fn semigroup_apply(
    gen: &FloatGenerator,
    f: &[f64],
    t: f64,
    eps: f64,
) -> Result<SemigroupResult> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {eps}"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    if f.len() != gen.len() {
        return Err(Error::InvalidParameter(format!(
            "vector of length {} for a generator on {} states",
            f.len(),
            gen.len()
        )));
    }
    let lambda = gen.max_exit();
    if t == 0.0 || lambda == 0.0 {
        return Ok(SemigroupResult {
            values: f.to_vec(),
            error_bound: 0.0,
        });
    }
    let mass = lambda * t;
    let slices = (mass / MAX_SLICE_MASS).ceil().max(1.0) as usize;
    let mu = mass / slices as f64;
    let budget = eps / slices as f64;
    let mut v = f.to_vec();
    let mut error = 0.0;
    for _ in 0..slices {
        let (next, tail) = slice(gen, lambda, mu, &v, budget);
        v = next;
        error += tail;
    }
    Ok(SemigroupResult {
        values: v,
        error_bound: error,
    })
}
