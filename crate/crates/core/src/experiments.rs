//! Profile dynamics, the ν-sweep with its linear regression, and
//! convergence-order checks of the stepper against the linear oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{build_grid, l2_distance_sq, Field, Grid, GridSpec};
use crate::model::{ExternalInput, ModelSpec};
use crate::oracle::{linear_exact_regular, CosineBasis};
use crate::stepper::{run, run_from, run_with_initial, SnapshotPolicy, TimeGrid, Trajectory};
use crate::model::initial_condition;

/// Full-scale resolution; the default desk scale is `2¹⁰ × 2⁸`.
pub const FULL_SCALE: (usize, usize) = (1 << 12, 1 << 10);
pub const DESK_SCALE: (usize, usize) = (1 << 10, 1 << 8);

/// Default ν values of the sweep; the leading zero is the reference run.
pub const DEFAULT_NUS: [f64; 5] = [0.0, 0.0125, 0.025, 0.05, 0.1];

/// Model, grid and time horizon shared by every run of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub time: TimeGrid,
}

impl Study {
    /// Desk-scale configuration of the profile and sweep studies:
    /// `γ = 0.5, σ = 0.5, κ = 1, ξ0 = 1, μ = 10³, θ = 0.1, ρ = 5, x0 = 20,
    /// Lξ = 3, Lx = 24π, T = 3, τ = 0.05`.
    pub fn reference() -> Self {
        Self {
            grid: GridSpec::new(DESK_SCALE.0, DESK_SCALE.1, 24.0 * PI, 3.0),
            model: ModelSpec::reference(),
            time: TimeGrid::new(0.05, 3.0).expect("valid reference time grid"),
        }
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        build_grid(self.grid)
    }
}

/// The `ξ`-profile `v(0, ·, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub time: f64,
    pub xi: Vec<f64>,
    pub values: Vec<f64>,
}

impl Slice {
    pub fn at_origin(field: &Field, time: f64) -> Self {
        let grid = field.grid();
        Self {
            time,
            xi: grid.xi_nodes().to_vec(),
            values: field.column(grid.x_origin_index()).to_vec(),
        }
    }

    /// Strict interior local maxima as `(ξ, v)`.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&j| v[j] > v[j - 1] && v[j] > v[j + 1])
            .map(|j| (self.xi[j], v[j]))
            .collect()
    }

    /// Position and value of the global maximum.
    pub fn peak(&self) -> (f64, f64) {
        let (j, &v) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("slice is never empty");
        (self.xi[j], v)
    }

    /// Width of the connected region around the peak where `v ≥ peak / 2`,
    /// with linearly interpolated crossings.
    pub fn half_height_width(&self) -> f64 {
        let v = &self.values;
        let xi = &self.xi;
        let (p, &top) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("slice is never empty");
        let half = 0.5 * top;
        let cross = |a: usize, b: usize| xi[a] + (half - v[a]) / (v[b] - v[a]) * (xi[b] - xi[a]);
        let mut left = xi[0];
        for j in (0..p).rev() {
            if v[j] < half {
                left = cross(j, j + 1);
                break;
            }
        }
        let mut right = xi[xi.len() - 1];
        for j in p + 1..v.len() {
            if v[j] < half {
                right = cross(j - 1, j);
                break;
            }
        }
        right - left
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    pub study: Study,
    /// Diffusivity of the comparison run (the first run always uses ν = 0).
    pub nu: f64,
    /// Output times; each must lie on the time grid.
    pub times: Vec<f64>,
}

impl ProfileConfig {
    pub fn reference() -> Self {
        Self {
            study: Study::reference(),
            nu: 0.1,
            times: vec![1.0, 3.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub nu: f64,
    pub fields: Vec<(f64, Field)>,
    pub slices: Vec<Slice>,
}

impl ProfileRun {
    pub fn slice_at(&self, t: f64) -> Option<&Slice> {
        self.slices.iter().find(|s| (s.time - t).abs() < 1e-12)
    }
}

/// Run the diffusion-less and diffusive problems and extract fields and `x = 0` slices.
pub fn profile_experiment(config: &ProfileConfig, exec: Execution) -> Result<Vec<ProfileRun>> {
    let grid = config.study.build_grid()?;
    let tg = config.study.time;
    let steps: Vec<usize> = config
        .times
        .iter()
        .map(|&t| {
            tg.step_at(t).ok_or_else(|| {
                Error::InvalidParameter(format!("profile time {t} is not on the time grid"))
            })
        })
        .collect::<Result<_>>()?;

    let nus = [0.0, config.nu];
    let runs: Vec<Result<ProfileRun>> = exec.map_range(nus.len(), |k| {
        let model = config.study.model.with_nu(nus[k]);
        let v0 = initial_condition(&grid, &model.init);
        let mut fields = Vec::new();
        run_from(&model, v0, &tg, exec, |step, time, v| {
            if steps.contains(&step) {
                fields.push((time, v.clone()));
            }
            Ok(())
        })?;
        let slices = fields.iter().map(|(t, f)| Slice::at_origin(f, *t)).collect();
        Ok(ProfileRun {
            nu: nus[k],
            fields,
            slices,
        })
    });
    runs.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub study: Study,
    pub nus: Vec<f64>,
}

impl SweepConfig {
    pub fn reference() -> Self {
        Self {
            study: Study::reference(),
            nus: DEFAULT_NUS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nus.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "sweep needs at least 3 nu values, got {}",
                self.nus.len()
            )));
        }
        if self.nus[0] != 0.0 {
            return Err(Error::InvalidParameter("first sweep nu must be 0".into()));
        }
        if self.nus.windows(2).any(|w| !(w[1] > w[0])) || self.nus.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "sweep nus must be finite and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Set when the ordinates have zero spread (`r2` is then reported as 1).
    pub degenerate: bool,
}

/// Ordinary least squares `y = slope · x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len();
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    if ss_tot == 0.0 {
        return Ok(LinearFit {
            slope,
            intercept,
            r2: 1.0,
            degenerate: true,
        });
    }
    Ok(LinearFit {
        slope,
        intercept,
        r2: (1.0 - ss_res / ss_tot).clamp(0.0, 1.0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// `(ν_k, e(ν_k))` including the reference point `(0, 0)`.
    pub pairs: Vec<(f64, f64)>,
    /// Fit over the `ν > 0` points only.
    pub fit: LinearFit,
}

impl SweepResult {
    pub fn e_at(&self, nu: f64) -> Option<f64> {
        self.pairs.iter().find(|p| p.0 == nu).map(|p| p.1)
    }
}

/// Squared `L∞(0,T; L²)` distance of every diffusive run to the ν = 0 reference.
pub fn nu_sweep(config: &SweepConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let grid = config.study.build_grid()?;
    let tg = config.study.time;
    let reference: Trajectory = run(
        &config.study.model.with_nu(0.0),
        &grid,
        &tg,
        SnapshotPolicy::Every(1),
        exec,
    )
    .map_err(|e| Error::SweepBlowUp {
        nu: 0.0,
        source: Box::new(e),
    })?;

    let mut e0 = 0.0_f64;
    for s in &reference.snapshots {
        e0 = e0.max(l2_distance_sq(&s.field, &s.field)?);
    }

    let positive = &config.nus[1..];
    let errors: Vec<Result<f64>> = exec.map_range(positive.len(), |k| {
        let nu = positive[k];
        let model = config.study.model.with_nu(nu);
        let v0 = initial_condition(&grid, &model.init);
        let mut worst = 0.0_f64;
        run_from(&model, v0, &tg, exec, |step, _, v| {
            let d = l2_distance_sq(&reference.snapshots[step].field, v)?;
            worst = worst.max(d);
            Ok(())
        })
        .map_err(|e| Error::SweepBlowUp {
            nu,
            source: Box::new(e),
        })?;
        Ok(worst)
    });

    let mut pairs = vec![(0.0, e0)];
    for (&nu, e) in positive.iter().zip(errors) {
        pairs.push((nu, e?));
    }
    let fit = linear_fit(&pairs[1..])?;
    Ok(SweepResult { pairs, fit })
}

/// What an order check refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Time,
    Space,
}

/// Initial data and frozen source of the linear test problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearCase {
    /// A few cosine modes modulated in `x`, with a constant-in-time source.
    Smooth,
    /// `v0 ≡ c`, `N ≡ 0`.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCheckConfig {
    pub gamma: f64,
    pub nu: f64,
    pub t_end: f64,
    pub l_xi: f64,
    pub n_x: usize,
    /// Coarsest step for time refinement, fixed step for space refinement.
    pub tau: f64,
    /// Coarsest `n_ξ − 1` for space refinement, fixed `n_ξ − 1` for time refinement.
    pub cells: usize,
    pub levels: usize,
    pub case: LinearCase,
}

impl OrderCheckConfig {
    pub fn time_default() -> Self {
        Self {
            gamma: 0.5,
            nu: 0.5,
            t_end: 1.0,
            l_xi: 3.0,
            n_x: 4,
            tau: 0.1,
            cells: 128,
            levels: 3,
            case: LinearCase::Smooth,
        }
    }

    pub fn space_default() -> Self {
        Self {
            tau: 2e-5,
            cells: 16,
            ..Self::time_default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderResult {
    /// `(step size, error)` per refinement level, coarsest first.
    pub errors: Vec<(f64, f64)>,
    /// Fitted slope of `log(error)` against `log(step)`; `None` when every
    /// error is at rounding level.
    pub order: Option<f64>,
    /// False if some refinement did not reduce the error.
    pub monotone: bool,
}

fn linear_case_data(grid: &Arc<Grid>, case: LinearCase) -> (Field, Field) {
    let l_xi = grid.spec().l_xi;
    let l_x = grid.spec().l_x;
    let length = 2.0 * l_xi;
    let mode = |k: f64, xi: f64| (k * PI * (xi + l_xi) / length).cos();
    match case {
        LinearCase::Smooth => {
            let v0 = Field::from_fn(grid, |x, xi| {
                (1.0 + 0.3 * (PI * x / l_x).cos()) * (0.5 + mode(1.0, xi) + 0.5 * mode(3.0, xi))
            });
            let n0 = Field::from_fn(grid, |_, xi| 0.4 + 0.2 * mode(2.0, xi));
            (v0, n0)
        }
        LinearCase::Constant(c) => (Field::constant(grid, c), Field::zeros(grid)),
    }
}

/// Error at `t_end` of the IMEX stepper against the exact linear solution.
pub fn linear_error(config: &OrderCheckConfig, n_xi: usize, tau: f64, exec: Execution) -> Result<f64> {
    let grid = build_grid(GridSpec::new(config.n_x, n_xi, 1.0, config.l_xi))?;
    let (v0, n0) = linear_case_data(&grid, config.case);
    let mut model = ModelSpec::reference();
    model.kernel.kappa = 0.0;
    model.kernel.xi0 = 0.0;
    model.gamma = config.gamma;
    model.nu = config.nu;
    model.input = if l2_distance_sq(&n0, &Field::zeros(&grid))? == 0.0 {
        ExternalInput::Zero
    } else {
        ExternalInput::Constant(n0.clone())
    };
    let tg = TimeGrid::new(tau, config.t_end)?;
    let tr = run_with_initial(&model, v0.clone(), &tg, SnapshotPolicy::None, exec)?;
    let basis = CosineBasis::full(&grid);
    let exact = linear_exact_regular(&v0, &n0, config.t_end, config.nu, config.gamma, &basis)?;
    Ok(l2_distance_sq(&tr.final_state, &exact)?.sqrt())
}

/// Observed convergence order of the stepper in `τ` or `h_ξ`.
pub fn order_check(kind: Refinement, config: &OrderCheckConfig, exec: Execution) -> Result<OrderResult> {
    if config.levels < 3 {
        return Err(Error::InvalidParameter("order check needs at least 3 levels".into()));
    }
    let mut errors = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        let scale = 1usize << level;
        let (step, err) = match kind {
            Refinement::Time => {
                let tau = config.tau / scale as f64;
                (tau, linear_error(config, config.cells + 1, tau, exec)?)
            }
            Refinement::Space => {
                let cells = config.cells * scale;
                let h = 2.0 * config.l_xi / cells as f64;
                (h, linear_error(config, cells + 1, config.tau, exec)?)
            }
        };
        errors.push((step, err));
    }
    let monotone = errors.windows(2).all(|w| w[1].1 < w[0].1);
    if errors.iter().all(|e| e.1 < 1e-13) {
        return Ok(OrderResult {
            errors,
            order: None,
            monotone,
        });
    }
    let logs: Vec<(f64, f64)> = errors.iter().map(|&(s, e)| (s.ln(), e.ln())).collect();
    let fit = linear_fit(&logs)?;
    Ok(OrderResult {
        errors,
        order: Some(fit.slope),
        monotone,
    })
}
