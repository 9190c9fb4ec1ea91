use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// One `Beta(alpha, beta)` variate, drawn as `X / (X + Y)` with
/// `X ~ Gamma(alpha, 1)` and `Y ~ Gamma(beta, 1)`.
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!(
            "Beta shapes must be positive and finite, got ({alpha}, {beta})"
        )));
    }
    let ga = Gamma::new(alpha, 1.0).map_err(|e| Error::Argument(e.to_string()))?;
    let gb = Gamma::new(beta, 1.0).map_err(|e| Error::Argument(e.to_string()))?;
    let x: f64 = ga.sample(rng);
    let y: f64 = gb.sample(rng);
    let sum = x + y;
    if sum > 0.0 {
        return Ok((x / sum).clamp(0.0, 1.0));
    }
    // Both draws underflowed (tiny shapes); the mass sits at the endpoints.
    let p_one = alpha / (alpha + beta);
    Ok(if rng.random::<f64>() < p_one {
        1.0
    } else {
        0.0
    })
}
