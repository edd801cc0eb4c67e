//! Scalar special functions behind every probability expression in the crate:
//! the Gaussian Q-function and its inverse, the modified Bessel function of
//! the first kind, and the right-tail probability of the non-central
//! chi-squared distribution together with its quantile.
//!
//! All probabilities are carried in linear scale. Values below about 1e-300
//! are numerically indistinguishable from zero and no attempt is made to
//! resolve them; log-scale variants are out of scope.

use statrs::function::erf;
use statrs::function::gamma::{gamma_ur, ln_gamma};
use thiserror::Error;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Poisson-mixture series is used up to this non-centrality; beyond it the
/// term count grows like sqrt(lambda) and a saddlepoint evaluation takes over.
const SERIES_LAMBDA_MAX: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("probability {0} must lie strictly inside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("argument {value} is outside the domain: {requirement}")]
    OutOfDomain {
        value: f64,
        requirement: &'static str,
    },
    #[error("invalid chi-squared parameters: {0}")]
    BadChi2Params(String),
}

/// A right-tail probability, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TailProb(f64);

impl TailProb {
    pub fn new(value: f64) -> Result<Self, SpecFunError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(TailProb(value))
        } else {
            Err(SpecFunError::OutOfDomain {
                value,
                requirement: "probability in [0, 1]",
            })
        }
    }

    /// Clamps floating-point excursions just outside `[0, 1]`.
    pub(crate) fn clamped(value: f64) -> Self {
        TailProb(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Validates the open-interval precondition of quantile-type operations.
    pub fn strictly_inside(self) -> Result<f64, SpecFunError> {
        if self.0 > 0.0 && self.0 < 1.0 {
            Ok(self.0)
        } else {
            Err(SpecFunError::ProbabilityOutOfRange(self.0))
        }
    }
}

/// Degrees of freedom and non-centrality of a chi-squared distribution.
///
/// Only even degrees of freedom arise here (the detector statistics stack L
/// complex slots into 2L real squares), so evenness is enforced at
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Params {
    dof: u64,
    noncentrality: f64,
}

impl Chi2Params {
    pub fn new(dof: u64, noncentrality: f64) -> Result<Self, SpecFunError> {
        if dof < 2 || dof % 2 != 0 {
            return Err(SpecFunError::BadChi2Params(format!(
                "degrees of freedom must be even and >= 2, got {dof}"
            )));
        }
        if !noncentrality.is_finite() || noncentrality < 0.0 {
            return Err(SpecFunError::BadChi2Params(format!(
                "non-centrality must be finite and >= 0, got {noncentrality}"
            )));
        }
        Ok(Chi2Params { dof, noncentrality })
    }

    pub fn dof(self) -> u64 {
        self.dof
    }

    pub fn noncentrality(self) -> f64 {
        self.noncentrality
    }
}

/// Right tail of the standard normal distribution, `P{N(0,1) > x}`.
pub fn gaussian_q(x: f64) -> TailProb {
    TailProb::clamped(0.5 * erf::erfc(x / SQRT_2))
}

/// Standard normal density.
fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Inverse of [`gaussian_q`]: the x with `gaussian_q(x) = p` for `0 < p < 1`.
///
/// Seeded by the rational inverse-erfc approximation and polished with two
/// Newton steps so the round trip through `gaussian_q` holds to near machine
/// precision.
pub fn gaussian_q_inv(p: TailProb) -> Result<f64, SpecFunError> {
    let p = p.strictly_inside()?;
    let mut x = SQRT_2 * erf::erfc_inv(2.0 * p);
    for _ in 0..2 {
        let pdf = gaussian_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        x += (gaussian_q(x).value() - p) / pdf;
    }
    Ok(x)
}

/// Modified Bessel function of the first kind, integer order `m >= 0`,
/// evaluated by its power series with term recurrence.
///
/// Arguments beyond ~700 overflow f64; they do not occur in this crate.
pub fn bessel_i(m: u32, x: f64) -> Result<f64, SpecFunError> {
    if !x.is_finite() || x < 0.0 {
        return Err(SpecFunError::OutOfDomain {
            value: x,
            requirement: "bessel_i requires x >= 0",
        });
    }
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    let mf = m as f64;
    let half = 0.5 * x;
    // t0 = (x/2)^m / m!
    let mut term = (mf * half.ln() - ln_gamma(mf + 1.0)).exp();
    let ratio = half * half;
    let mut sum = term;
    for k in 0..1000 {
        let kf = k as f64;
        term *= ratio / ((kf + 1.0) * (mf + kf + 1.0));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    Ok(sum)
}

/// Right tail of the central chi-squared distribution with `dof` degrees of
/// freedom: the regularized upper incomplete gamma Γ(dof/2, x/2)/Γ(dof/2).
fn central_chi2_tail(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if dof == 2.0 {
        return (-0.5 * x).exp();
    }
    gamma_ur(0.5 * dof, 0.5 * x)
}

/// Right-tail probability of the non-central chi-squared distribution.
///
/// Total on `x` (arguments <= 0 return 1, the full mass). The value is a
/// Poisson mixture of central tails, summed outward from the Poisson mode so
/// that the dominant terms are accumulated first and underflow of the
/// off-mode weights cannot erase the result; summation stops once the term
/// ratio falls below 1e-17 past the mode. Very large non-centralities switch
/// to a Lugannani-Rice saddlepoint evaluation.
pub fn nc_chi2_tail(x: f64, params: Chi2Params) -> TailProb {
    if x <= 0.0 {
        return TailProb(1.0);
    }
    let nu = params.dof as f64;
    let lambda = params.noncentrality;
    if lambda == 0.0 {
        return TailProb::clamped(central_chi2_tail(x, nu));
    }
    if lambda > SERIES_LAMBDA_MAX {
        return TailProb::clamped(saddlepoint_tail(x, nu, lambda));
    }
    TailProb::clamped(poisson_mixture_tail(x, nu, lambda))
}

/// Poisson-mixture evaluation: sum_k e^{-l/2}(l/2)^k/k! * centralTail(x, nu+2k),
/// accumulated outward from the mode k0 = floor(lambda/2).
fn poisson_mixture_tail(x: f64, nu: f64, lambda: f64) -> f64 {
    let half_lambda = 0.5 * lambda;
    let z = 0.5 * x;
    let a0 = 0.5 * nu; // integer >= 1 because nu is even
    let k0 = half_lambda.floor();

    // Mode weight and central tail, both through logs so that large modes
    // do not underflow before being combined.
    let w0 = (k0 * half_lambda.ln() - half_lambda - ln_gamma(k0 + 1.0)).exp();
    let a_mode = a0 + k0;
    let t0 = gamma_ur(a_mode, z);
    // d(a) = z^a e^{-z} / Γ(a+1) satisfies T(a+1) = T(a) + d(a).
    let d0 = (a_mode * z.ln() - z - ln_gamma(a_mode + 1.0)).exp();

    let mut sum = w0 * t0;

    // Upward sweep k0+1, k0+2, ...
    let mut w = w0;
    let mut t = t0;
    let mut d = d0;
    let mut k = k0;
    loop {
        w *= half_lambda / (k + 1.0);
        t = (t + d).min(1.0);
        d *= z / (a0 + k + 1.0);
        k += 1.0;
        let term = w * t;
        sum += term;
        if k > half_lambda && term < sum * 1e-17 {
            break;
        }
        if k - k0 > 100_000_000.0 {
            break; // unreachable for lambda <= SERIES_LAMBDA_MAX
        }
    }

    // Downward sweep k0-1, ..., 0.
    let mut w = w0;
    let mut t = t0;
    let mut d = d0;
    let mut k = k0;
    while k > 0.0 {
        w *= k / half_lambda;
        d *= (a0 + k) / z;
        t = (t - d).clamp(0.0, 1.0);
        k -= 1.0;
        let term = w * t;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }

    sum
}

/// Lugannani-Rice saddlepoint tail for very large non-centrality.
///
/// The cumulant generating function is K(t) = -(nu/2)ln(1-2t) + lambda t/(1-2t);
/// its saddlepoint equation K'(s) = x is a quadratic in u = 1/(1-2s).
fn saddlepoint_tail(x: f64, nu: f64, lambda: f64) -> f64 {
    let mean = nu + lambda;
    let var = 2.0 * nu + 4.0 * lambda;
    // u > 0 solving nu*u + lambda*u^2 = x.
    let u = (-nu + (nu * nu + 4.0 * lambda * x).sqrt()) / (2.0 * lambda);
    let s = 0.5 * (1.0 - 1.0 / u);
    let k2_s = 2.0 * nu * u * u + 4.0 * lambda * u * u * u;

    // D = s K'(s) - K(s). The direct expression cancels catastrophically for
    // small s (both terms huge, difference ~ s^2), so switch to the cumulant
    // series D = sum_{j>=2} kappa_j s^j (j-1)/j!, kappa_j = 2^{j-1}(j-1)!(nu + j lambda),
    // whose truncation error is negligible in that regime.
    let d = if s.abs() * var.sqrt() < 0.25 {
        let k2 = 2.0 * (nu + 2.0 * lambda);
        let k3 = 8.0 * (nu + 3.0 * lambda);
        let k4 = 48.0 * (nu + 4.0 * lambda);
        let k5 = 384.0 * (nu + 5.0 * lambda);
        let k6 = 3840.0 * (nu + 6.0 * lambda);
        let s2 = s * s;
        s2 * (k2 / 2.0 + s * (k3 / 3.0 + s * (k4 / 8.0 + s * (k5 / 30.0 + s * k6 / 144.0))))
    } else {
        let k_s = -0.5 * nu * (1.0 - 2.0 * s).ln() + lambda * s * u;
        s * x - k_s
    };
    let w_hat = s.signum() * (2.0 * d).max(0.0).sqrt();
    let u_hat = s * k2_s.sqrt();

    if w_hat.abs() < 1e-7 || u_hat.abs() < 1e-12 {
        // At the mean itself the correction term has a finite limit; the
        // first-order expansion with the skewness term is smooth across it.
        let kappa3 = 8.0 * nu + 24.0 * lambda;
        let base = 0.5 - kappa3 / (6.0 * SQRT_2PI * var.powf(1.5));
        return base - (x - mean) / (SQRT_2PI * var.sqrt());
    }

    gaussian_q(w_hat).value() + gaussian_pdf(w_hat) * (1.0 / u_hat - 1.0 / w_hat)
}

/// Quantile of [`nc_chi2_tail`]: the x with tail(x) = p, for `0 < p < 1`.
///
/// Bracketed bisection seeded by the Wilson-Hilferty / Patnaik normal
/// approximation; capped at 200 iterations. Robustness is preferred over
/// speed here since quantiles are evaluated once per operating point.
pub fn nc_chi2_tail_inv(p: TailProb, params: Chi2Params) -> Result<f64, SpecFunError> {
    let p = p.strictly_inside()?;
    let nu = params.dof as f64;
    let lambda = params.noncentrality;

    // Patnaik two-moment central equivalent, then Wilson-Hilferty cube.
    let seed = {
        let m = nu + lambda;
        let scale = (nu + 2.0 * lambda) / m;
        let nu_eff = m * m / (nu + 2.0 * lambda);
        let z = gaussian_q_inv(TailProb::clamped(p)).unwrap_or(0.0);
        let t = 1.0 - 2.0 / (9.0 * nu_eff) + z * (2.0 / (9.0 * nu_eff)).sqrt();
        (scale * nu_eff * t.powi(3)).max(0.0)
    };

    let tail = |x: f64| nc_chi2_tail(x, params).value();

    // Expand an upper bracket; the lower bracket 0 has tail 1 > p.
    let sd = (2.0 * nu + 4.0 * lambda).sqrt();
    let mut lo = 0.0;
    let mut hi = (seed * 1.5).max(nu + lambda + 10.0 * sd).max(1.0);
    let mut expansions = 0;
    while tail(hi) > p {
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(SpecFunError::BadChi2Params(format!(
                "quantile bracket expansion failed at p = {p}"
            )));
        }
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) >= p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn q_plus_q_of_negation_is_one(x in -8.0f64..8.0) {
            let s = gaussian_q(x).value() + gaussian_q(-x).value();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn q_inv_round_trip(p in 1e-5f64..0.99999) {
            let x = gaussian_q_inv(TailProb::new(p).unwrap()).unwrap();
            let back = gaussian_q(x).value();
            prop_assert!((back - p).abs() < 1e-10 * p.max(1e-3));
        }

        #[test]
        fn nc_tail_decreasing_in_x(
            dof_half in 1u64..64,
            lambda in 0.0f64..200.0,
            x in 0.0f64..400.0,
            dx in 0.01f64..40.0,
        ) {
            let p = Chi2Params::new(2 * dof_half, lambda).unwrap();
            let lo = nc_chi2_tail(x + dx, p).value();
            let hi = nc_chi2_tail(x, p).value();
            prop_assert!(lo <= hi + 1e-13);
        }

        #[test]
        fn nc_quantile_round_trip(
            dof_half in 1u64..32,
            lambda in 0.0f64..500.0,
            p in 0.001f64..0.999,
        ) {
            let params = Chi2Params::new(2 * dof_half, lambda).unwrap();
            let q = nc_chi2_tail_inv(TailProb::new(p).unwrap(), params).unwrap();
            let back = nc_chi2_tail(q, params).value();
            prop_assert!(((back - p) / p).abs() < 1e-8);
        }
    }
}
