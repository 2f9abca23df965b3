//! Closed-form value, derivative, Lipschitz constant, and asymptotic
//! surrogates for every activation family under comparison.
//!
//! The central family is HOSC, `tanh(beta * sin(omega0 * x))`: `omega0` sets
//! the carrier frequency and `beta > 0` the saturation strength, giving the
//! tight activation-level Lipschitz constant `beta * omega0`. The scalar API
//! here uses libm closed forms; the crate-internal batched path used by
//! training runs through the vectorized kernels in `numerics::simd`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::simd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Hosc,
    Sine,
    ScaledSine,
    Finer,
    Gaussian,
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ActivationKind::Hosc => "hosc",
            ActivationKind::Sine => "sine",
            ActivationKind::ScaledSine => "scaled_sine",
            ActivationKind::Finer => "finer",
            ActivationKind::Gaussian => "gaussian",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ActivationError {
    #[error("{kind} has no finite Lipschitz constant: its derivative grows without bound on R")]
    UnboundedLipschitz { kind: ActivationKind },
    #[error("operation defined for {expected}, got {got}")]
    WrongKind { expected: ActivationKind, got: ActivationKind },
}

/// Activation family plus its parameters. Parameters not used by a family are
/// stored as given and ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activation {
    pub kind: ActivationKind,
    /// Saturation strength for HOSC, amplitude for the scaled sine.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Carrier frequency of the sine-based families.
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    /// Gaussian scale.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Half-width of the FINER bias initialization range.
    #[serde(default = "default_finer_bias_range")]
    pub finer_bias_range: f64,
}

fn sincos_into(u: &[f64], sin_out: &mut [f64], cos_stash: Option<&mut [f64]>, n: usize) {
    match cos_stash {
        Some(c) => simd::sincos_slice(u, sin_out, c),
        None => {
            let mut c = vec![0.0; n];
            simd::sincos_slice(u, sin_out, &mut c);
        }
    }
}

fn default_beta() -> f64 {
    1.0
}
fn default_omega0() -> f64 {
    30.0
}
fn default_sigma() -> f64 {
    1.0
}
fn default_finer_bias_range() -> f64 {
    1.0
}

impl Activation {
    pub fn hosc(beta: f64, omega0: f64) -> Self {
        assert!(beta > 0.0 && omega0 > 0.0, "hosc needs beta > 0 and omega0 > 0");
        Self { kind: ActivationKind::Hosc, beta, omega0, sigma: default_sigma(), finer_bias_range: default_finer_bias_range() }
    }

    pub fn sine(omega0: f64) -> Self {
        assert!(omega0 > 0.0, "sine needs omega0 > 0");
        Self { kind: ActivationKind::Sine, beta: default_beta(), omega0, sigma: default_sigma(), finer_bias_range: default_finer_bias_range() }
    }

    pub fn scaled_sine(beta: f64, omega0: f64) -> Self {
        assert!(beta > 0.0 && omega0 > 0.0, "scaled_sine needs beta > 0 and omega0 > 0");
        Self { kind: ActivationKind::ScaledSine, beta, omega0, sigma: default_sigma(), finer_bias_range: default_finer_bias_range() }
    }

    pub fn finer(omega0: f64, bias_range: f64) -> Self {
        assert!(omega0 > 0.0 && bias_range >= 0.0);
        Self { kind: ActivationKind::Finer, beta: default_beta(), omega0, sigma: default_sigma(), finer_bias_range: bias_range }
    }

    pub fn gaussian(sigma: f64) -> Self {
        assert!(sigma > 0.0, "gaussian needs sigma > 0");
        Self { kind: ActivationKind::Gaussian, beta: default_beta(), omega0: default_omega0(), sigma, finer_bias_range: default_finer_bias_range() }
    }

    /// Activation value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            ActivationKind::Hosc => (self.beta * (self.omega0 * x).sin()).tanh(),
            ActivationKind::Sine => (self.omega0 * x).sin(),
            ActivationKind::ScaledSine => self.beta * (self.omega0 * x).sin(),
            ActivationKind::Finer => (self.omega0 * (x.abs() + 1.0) * x).sin(),
            ActivationKind::Gaussian => (-x * x / (2.0 * self.sigma * self.sigma)).exp(),
        }
    }

    /// Closed-form derivative at `x`.
    ///
    /// For HOSC: `beta * omega0 * cos(omega0 x) * sech^2(beta sin(omega0 x))`.
    /// FINER's kink at 0 takes the two-sided limit `omega0` (the formula
    /// `omega0 (2|x|+1) cos(...)` already evaluates to it).
    pub fn derivative(&self, x: f64) -> f64 {
        match self.kind {
            ActivationKind::Hosc => {
                let u = self.omega0 * x;
                let ch = (self.beta * u.sin()).cosh();
                self.beta * self.omega0 * u.cos() / (ch * ch)
            }
            ActivationKind::Sine => self.omega0 * (self.omega0 * x).cos(),
            ActivationKind::ScaledSine => self.beta * self.omega0 * (self.omega0 * x).cos(),
            ActivationKind::Finer => {
                let a = x.abs() + 1.0;
                self.omega0 * (2.0 * x.abs() + 1.0) * (self.omega0 * a * x).cos()
            }
            ActivationKind::Gaussian => {
                let s2 = self.sigma * self.sigma;
                -(x / s2) * (-x * x / (2.0 * s2)).exp()
            }
        }
    }

    /// Tight supremum of `|derivative|` over the reals.
    ///
    /// HOSC and the scaled sine give `beta * omega0`, sine gives `omega0`,
    /// the Gaussian gives `(1/sigma) e^{-1/2}`. FINER's derivative grows with
    /// `|x|` and admits no global constant.
    pub fn lipschitz_constant(&self) -> Result<f64, ActivationError> {
        match self.kind {
            ActivationKind::Hosc | ActivationKind::ScaledSine => Ok(self.beta * self.omega0),
            ActivationKind::Sine => Ok(self.omega0),
            ActivationKind::Gaussian => Ok((-0.5f64).exp() / self.sigma),
            ActivationKind::Finer => {
                Err(ActivationError::UnboundedLipschitz { kind: ActivationKind::Finer })
            }
        }
    }

    /// Two-term small-saturation expansion of HOSC:
    /// `beta sin(omega0 x) - (beta^3/3) sin^3(omega0 x)`.
    pub fn small_beta_surrogate(&self, x: f64) -> Result<f64, ActivationError> {
        if self.kind != ActivationKind::Hosc {
            return Err(ActivationError::WrongKind { expected: ActivationKind::Hosc, got: self.kind });
        }
        let s = (self.omega0 * x).sin();
        Ok(self.beta * s - (self.beta.powi(3) / 3.0) * s * s * s)
    }

    /// Square-wave limit of HOSC for large saturation: `sign(sin(omega0 x))`,
    /// exactly 0 at the carrier zeros (`omega0 x` a numerically integer
    /// multiple of pi).
    pub fn square_wave_limit(&self, x: f64) -> Result<f64, ActivationError> {
        if self.kind != ActivationKind::Hosc {
            return Err(ActivationError::WrongKind { expected: ActivationKind::Hosc, got: self.kind });
        }
        let t = self.omega0 * x / std::f64::consts::PI;
        if (t - t.round()).abs() <= 1e-12 * t.abs().max(1.0) {
            return Ok(0.0);
        }
        let s = (self.omega0 * x).sin();
        Ok(if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        })
    }

    /// Frequency used by the SIREN-style weight initialization: the carrier
    /// for the sine families, 1 for the Gaussian.
    pub(crate) fn init_omega(&self) -> f64 {
        match self.kind {
            ActivationKind::Gaussian => 1.0,
            _ => self.omega0,
        }
    }

    /// Recommended learning rate for a plain (non-encoded) net.
    pub(crate) fn default_lr(&self) -> f64 {
        match self.kind {
            ActivationKind::Gaussian => 5e-3,
            _ => 5e-4,
        }
    }

    /// Batched value over a preactivation slice. `cos_stash`, when present,
    /// receives `cos` of the carrier argument so the backward pass can reuse
    /// it; the Gaussian family leaves it untouched.
    pub(crate) fn apply_batch(
        &self,
        z: &[f64],
        out: &mut [f64],
        cos_stash: Option<&mut [f64]>,
        scratch: &mut Vec<f64>,
    ) {
        let n = z.len();
        debug_assert_eq!(out.len(), n);
        scratch.clear();
        scratch.resize(n, 0.0);
        let u = scratch.as_mut_slice();
        match self.kind {
            ActivationKind::Hosc => {
                for (t, zi) in u.iter_mut().zip(z) {
                    *t = self.omega0 * zi;
                }
                sincos_into(u, out, cos_stash, n);
                for (t, s) in u.iter_mut().zip(out.iter()) {
                    *t = self.beta * *s;
                }
                simd::tanh_slice(u, out);
            }
            ActivationKind::Sine | ActivationKind::ScaledSine => {
                for (t, zi) in u.iter_mut().zip(z) {
                    *t = self.omega0 * zi;
                }
                sincos_into(u, out, cos_stash, n);
                if self.kind == ActivationKind::ScaledSine {
                    for o in out.iter_mut() {
                        *o *= self.beta;
                    }
                }
            }
            ActivationKind::Finer => {
                for (t, zi) in u.iter_mut().zip(z) {
                    *t = self.omega0 * (zi.abs() + 1.0) * zi;
                }
                sincos_into(u, out, cos_stash, n);
            }
            ActivationKind::Gaussian => {
                let inv = -1.0 / (2.0 * self.sigma * self.sigma);
                for (t, zi) in u.iter_mut().zip(z) {
                    *t = inv * zi * zi;
                }
                simd::exp_slice(u, out);
            }
        }
    }

    /// Batched derivative, writing `phi'(z)` into `out`. `y` is the stored
    /// activation output and `cos_u` the stored carrier cosine from
    /// [`Self::apply_batch`] (unused by the Gaussian).
    pub(crate) fn derivative_batch(&self, z: &[f64], y: &[f64], cos_u: &[f64], out: &mut [f64]) {
        let n = z.len();
        debug_assert_eq!(out.len(), n);
        match self.kind {
            ActivationKind::Hosc => {
                // sech^2(beta sin) = 1 - tanh^2, with tanh already stored in y.
                let bw = self.beta * self.omega0;
                for ((o, yi), ci) in out.iter_mut().zip(y).zip(cos_u) {
                    *o = bw * ci * (1.0 - yi * yi);
                }
            }
            ActivationKind::Sine => {
                for (o, ci) in out.iter_mut().zip(cos_u) {
                    *o = self.omega0 * ci;
                }
            }
            ActivationKind::ScaledSine => {
                let bw = self.beta * self.omega0;
                for (o, ci) in out.iter_mut().zip(cos_u) {
                    *o = bw * ci;
                }
            }
            ActivationKind::Finer => {
                for ((o, zi), ci) in out.iter_mut().zip(z).zip(cos_u) {
                    *o = self.omega0 * (2.0 * zi.abs() + 1.0) * ci;
                }
            }
            ActivationKind::Gaussian => {
                let inv = 1.0 / (self.sigma * self.sigma);
                for ((o, zi), yi) in out.iter_mut().zip(z).zip(y) {
                    *o = -(zi * inv) * yi;
                }
            }
        }
    }
}
