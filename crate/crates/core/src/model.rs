//! Concrete model functions: firing rate, dendritic profile, synaptic kernel,
//! initial condition, external input and the a priori constant `K_F`.
//!
//! The dendritic profile is the Gaussian mollifier
//! `δσ(ξ) = exp(−(ξ/σ)²) / (σ√π)`, with the square applied to `ξ/σ`.

use std::f64::consts::PI;
use std::sync::Arc;

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Logistic `1 / (1 + e^{−z})`, evaluated without overflow.
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Sigmoidal firing rate `S(u) = 1 / (1 + exp(−μ(u − θ)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiringRateSpec {
    pub mu: f64,
    pub theta: f64,
}

impl FiringRateSpec {
    pub fn new(mu: f64, theta: f64) -> Self {
        Self { mu, theta }
    }

    #[inline]
    pub fn rate(&self, u: f64) -> f64 {
        let z = self.mu * (u - self.theta);
        // μ = 0 with infinite u would give NaN; the rate is flat anyway.
        if self.mu == 0.0 {
            return 0.5;
        }
        logistic(z)
    }

    /// `S'(u) = μ S (1 − S)`, written in terms of `e^{−|z|}` so the tails stay accurate.
    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        if self.mu == 0.0 {
            return 0.0;
        }
        let e = (-(self.mu * (u - self.theta)).abs()).exp();
        self.mu * e / ((1.0 + e) * (1.0 + e))
    }

    /// Supremum of `|S|`; the logistic approaches but never attains 1.
    pub fn sup(&self) -> f64 {
        1.0
    }

    /// Supremum of `|S'|`, attained at `u = θ`.
    pub fn derivative_sup(&self) -> f64 {
        self.mu / 4.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta must be finite".into()));
        }
        Ok(())
    }
}

pub fn firing_rate(u: f64, spec: &FiringRateSpec) -> f64 {
    spec.rate(u)
}

pub fn firing_rate_deriv(u: f64, spec: &FiringRateSpec) -> f64 {
    spec.derivative(u)
}

#[inline]
pub(crate) fn delta_unchecked(xi: f64, sigma: f64) -> f64 {
    let r = xi / sigma;
    (-r * r).exp() / (sigma * PI.sqrt())
}

/// Gaussian dendritic profile `δσ(ξ)`; unit mass on the real line.
pub fn delta_profile(xi: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("spread sigma must be > 0, got {sigma}")));
    }
    Ok(delta_unchecked(xi, sigma))
}

/// `∫_a^b δσ(ξ)² dξ` in closed form.
fn delta_sq_integral(a: f64, b: f64, sigma: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 / sigma;
    (erf(s * b) - erf(s * a)) / (2.0 * sigma * (2.0 * PI).sqrt())
}

/// Separable synaptic kernel `(κ/2) e^{−|x−x'|} δσ(ξ−ξ0) δσ(ξ')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kappa: f64,
    pub sigma: f64,
    pub xi0: f64,
}

impl KernelSpec {
    pub fn new(kappa: f64, sigma: f64, xi0: f64) -> Self {
        Self { kappa, sigma, xi0 }
    }

    pub fn validate(&self, l_xi: f64) -> Result<()> {
        if !self.kappa.is_finite() {
            return Err(Error::InvalidParameter("kappa must be finite".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.xi0 > -l_xi && self.xi0 < l_xi) {
            return Err(Error::InvalidParameter(format!(
                "xi0 = {} lies outside (-{l_xi}, {l_xi})",
                self.xi0
            )));
        }
        Ok(())
    }

    /// Receiving profile `δσ(ξ − ξ0)`.
    #[inline]
    pub fn target(&self, xi: f64) -> f64 {
        delta_unchecked(xi - self.xi0, self.sigma)
    }

    /// Source profile `δσ(ξ')`.
    #[inline]
    pub fn source(&self, xi: f64) -> f64 {
        delta_unchecked(xi, self.sigma)
    }
}

/// Localised initial condition `v0(x, ξ) = α(|x|) δσ(ξ)` with `α = 1 − S(·; ρ, x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditionSpec {
    pub rho: f64,
    pub x0: f64,
    pub sigma: f64,
}

impl InitialConditionSpec {
    pub fn new(rho: f64, x0: f64, sigma: f64) -> Self {
        Self { rho, x0, sigma }
    }

    /// `α(x) = 1 − S(x; ρ, x0)`, computed as `S(−·)` to keep the tail.
    pub fn alpha(&self, x: f64) -> f64 {
        logistic(-self.rho * (x - self.x0))
    }

    pub fn value(&self, x: f64, xi: f64) -> f64 {
        self.alpha(x.abs()) * delta_unchecked(xi, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.x0.is_finite()) {
            return Err(Error::InvalidParameter("rho and x0 must be finite".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial-condition sigma must be > 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

pub fn initial_condition(grid: &Arc<Grid>, spec: &InitialConditionSpec) -> Field {
    Field::from_fn(grid, |x, xi| spec.value(x, xi))
}

/// External current `G(x, ξ, t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ExternalInput {
    #[default]
    Zero,
    /// Time-independent input.
    Constant(Field),
    /// Samples at strictly increasing times, linearly interpolated and held
    /// constant outside the tabulated range.
    Tabulated { times: Vec<f64>, fields: Vec<Field> },
}

impl ExternalInput {
    pub fn is_zero(&self) -> bool {
        matches!(self, ExternalInput::Zero)
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            ExternalInput::Zero => Ok(()),
            ExternalInput::Constant(g) => {
                if !g.grid().same_as(grid) {
                    return Err(Error::GridMismatch);
                }
                Ok(())
            }
            ExternalInput::Tabulated { times, fields } => {
                if times.is_empty() || times.len() != fields.len() {
                    return Err(Error::InvalidParameter(
                        "tabulated input needs matching, non-empty times and fields".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter(
                        "tabulated input times must be strictly increasing".into(),
                    ));
                }
                if fields.iter().any(|f| !f.grid().same_as(grid)) {
                    return Err(Error::GridMismatch);
                }
                Ok(())
            }
        }
    }

    /// `G(·, ·, t)`, or `None` for the zero input.
    pub fn at(&self, t: f64) -> Option<Field> {
        match self {
            ExternalInput::Zero => None,
            ExternalInput::Constant(g) => Some(g.clone()),
            ExternalInput::Tabulated { times, fields } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return Some(fields[0].clone());
                }
                if k == times.len() {
                    return Some(fields[k - 1].clone());
                }
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                let a = fields[k - 1].values();
                let b = fields[k].values();
                let v = a.iter().zip(b).map(|(p, q)| (1.0 - w) * p + w * q).collect();
                Some(Field::from_values_unchecked(fields[0].grid(), v))
            }
        }
    }

    /// `sup_t ‖G(t)‖_{L²}` over the tabulated samples.
    pub fn sup_l2(&self) -> f64 {
        match self {
            ExternalInput::Zero => 0.0,
            ExternalInput::Constant(g) => crate::grid::l2_norm_sq(g).sqrt(),
            ExternalInput::Tabulated { fields, .. } => fields
                .iter()
                .map(|g| crate::grid::l2_norm_sq(g).sqrt())
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Membrane decay rate γ.
    pub gamma: f64,
    /// Dendritic diffusivity ν.
    pub nu: f64,
    pub firing: FiringRateSpec,
    pub kernel: KernelSpec,
    pub init: InitialConditionSpec,
    pub input: ExternalInput,
}

impl ModelSpec {
    /// Parameters used for the profile and ν-sweep studies.
    pub fn reference() -> Self {
        Self {
            gamma: 0.5,
            nu: 0.0,
            firing: FiringRateSpec::new(1e3, 0.1),
            kernel: KernelSpec::new(1.0, 0.5, 1.0),
            init: InitialConditionSpec::new(5.0, 20.0, 0.5),
            input: ExternalInput::Zero,
        }
    }

    pub fn with_nu(&self, nu: f64) -> Self {
        Self { nu, ..self.clone() }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be >= 0, got {}", self.nu)));
        }
        self.firing.validate()?;
        self.kernel.validate(grid.spec().l_xi)?;
        self.init.validate()?;
        self.input.validate(grid)
    }
}

/// Squared `L²(Ω×Ω)` norm of the separable kernel on the grid's domain.
///
/// The `x` factor uses the periodized exponential on the circle of
/// circumference `C`: `∬ w_per² = C (κ²/4) [(1 − e^{−2C}) + 2C e^{−C}] / (1 − e^{−C})²`.
pub fn kernel_l2_norm_sq(kernel: &KernelSpec, grid: &Grid) -> f64 {
    let spec = grid.spec();
    let c = spec.period();
    let ec = (-c).exp();
    let x_part = c * 0.25 * kernel.kappa * kernel.kappa * ((1.0 - ec * ec) + 2.0 * c * ec)
        / ((1.0 - ec) * (1.0 - ec));
    let l = spec.l_xi;
    let target = delta_sq_integral(-l - kernel.xi0, l - kernel.xi0, kernel.sigma);
    let source = delta_sq_integral(-l, l, kernel.sigma);
    x_part * target * source
}

/// `K_F = ‖W‖ · max(|Ω|^{1/2} ‖S‖∞, ‖S'‖∞)`: bound and Lipschitz constant of `F` on `L²(Ω)`.
pub fn estimate_kf(model: &ModelSpec, grid: &Grid) -> Result<f64> {
    model.firing.validate()?;
    model.kernel.validate(grid.spec().l_xi)?;
    let w = kernel_l2_norm_sq(&model.kernel, grid).sqrt();
    let area_half = grid.spec().area().sqrt();
    Ok(w * (area_half * model.firing.sup()).max(model.firing.derivative_sup()))
}
