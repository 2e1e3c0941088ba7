//! IMEX Euler time stepping.
//!
//! Decay and dendritic diffusion are implicit, the nonlocal term and the
//! external input explicit:
//!
//! ```text
//! ((1 + τγ) I − τν D₂) v⁺ = v + τ (F(v) + G(tₙ))
//! ```
//!
//! `D₂` is the three-point second difference in `ξ` closed with mirrored
//! ghost nodes, so each `x` column is one tridiagonal solve. With `ν = 0` the
//! solve is a scalar division and the scheme coincides with [`singular_step`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{l2_norm_sq, Field, Grid};
use crate::model::{initial_condition, ModelSpec};
use crate::nonlocal::{apply_f_with, periodize_kernel, PeriodicKernelTable};

/// Runs whose discrete L² norm exceeds this are treated as blown up.
pub const BLOW_UP_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    n_steps: usize,
    t_end: f64,
}

impl TimeGrid {
    /// `t_end` must be an integer multiple of `tau` to 1e−12 relative.
    pub fn new(tau: f64, t_end: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("T must be >= 0, got {t_end}")));
        }
        let n = (t_end / tau).round();
        if (n * tau - t_end).abs() > 1e-12 * t_end.max(tau) {
            return Err(Error::InvalidParameter(format!(
                "T = {t_end} is not an integer multiple of tau = {tau}"
            )));
        }
        Ok(Self {
            tau,
            n_steps: n as usize,
            t_end,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.tau
    }

    /// Step index whose time equals `t`, if `t` is on the grid.
    pub fn step_at(&self, t: f64) -> Option<usize> {
        let k = (t / self.tau).round();
        if k < 0.0 || k as usize > self.n_steps || (k * self.tau - t).abs() > 1e-9 * self.tau {
            None
        } else {
            Some(k as usize)
        }
    }
}

/// Prefactored Thomas solver for `(1 + τγ) I − τν D₂` with Neumann closure.
#[derive(Debug, Clone)]
pub struct DiffusionSolver {
    n: usize,
    decay: f64,
    kind: SolverKind,
}

#[derive(Debug, Clone)]
enum SolverKind {
    Scalar,
    Tridiagonal {
        lower: Vec<f64>,
        upper_mod: Vec<f64>,
        inv_pivot: Vec<f64>,
    },
}

impl DiffusionSolver {
    pub fn new(n_xi: usize, h_xi: f64, tau: f64, nu: f64, gamma: f64) -> Result<Self> {
        if n_xi < 3 {
            return Err(Error::InvalidGrid(format!("n_xi must be >= 3, got {n_xi}")));
        }
        if !(tau >= 0.0 && nu >= 0.0 && gamma >= 0.0) {
            return Err(Error::InvalidParameter(
                "tau, nu and gamma must be non-negative".into(),
            ));
        }
        let decay = 1.0 + tau * gamma;
        let r = tau * nu / (h_xi * h_xi);
        if r == 0.0 {
            return Ok(Self {
                n: n_xi,
                decay,
                kind: SolverKind::Scalar,
            });
        }
        let n = n_xi;
        let diag = decay + 2.0 * r;
        let mut lower = vec![-r; n];
        let mut upper = vec![-r; n];
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        // mirrored ghost nodes double the inward coupling on the boundary rows
        upper[0] = -2.0 * r;
        lower[n - 1] = -2.0 * r;

        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        inv_pivot[0] = 1.0 / diag;
        upper_mod[0] = upper[0] * inv_pivot[0];
        for i in 1..n {
            let pivot = diag - lower[i] * upper_mod[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = upper[i] * inv_pivot[i];
        }
        Ok(Self {
            n,
            decay,
            kind: SolverKind::Tridiagonal {
                lower,
                upper_mod,
                inv_pivot,
            },
        })
    }

    pub fn for_model(model: &ModelSpec, grid: &Grid, tau: f64) -> Result<Self> {
        Self::new(grid.n_xi(), grid.h_xi(), tau, model.nu, model.gamma)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.kind, SolverKind::Scalar)
    }

    /// Overwrite `rhs` with the solution of the system.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        debug_assert_eq!(rhs.len(), self.n);
        match &self.kind {
            SolverKind::Scalar => {
                for v in rhs.iter_mut() {
                    *v /= self.decay;
                }
            }
            SolverKind::Tridiagonal {
                lower,
                upper_mod,
                inv_pivot,
            } => {
                rhs[0] *= inv_pivot[0];
                for i in 1..self.n {
                    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) * inv_pivot[i];
                }
                for i in (0..self.n - 1).rev() {
                    rhs[i] -= upper_mod[i] * rhs[i + 1];
                }
            }
        }
    }
}

/// Discrete symbol of `−D₂` on the `k`-th cosine mode: `(4/h²) sin²(kπh / 2L)`.
pub fn neumann_symbol(k: usize, h_xi: f64, length: f64) -> f64 {
    let s = (k as f64 * std::f64::consts::PI * h_xi / (2.0 * length)).sin();
    4.0 * s * s / (h_xi * h_xi)
}

fn explicit_rhs(
    v: &Field,
    model: &ModelSpec,
    ktab: &PeriodicKernelTable,
    g: Option<&Field>,
    tau: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let f = apply_f_with(v, model, ktab, exec)?;
    let mut rhs = f.into_values();
    match g {
        Some(g) => {
            v.check_same_grid(g)?;
            for ((r, &vi), &gi) in rhs.iter_mut().zip(v.values()).zip(g.values()) {
                *r = vi + tau * (*r + gi);
            }
        }
        None => {
            for (r, &vi) in rhs.iter_mut().zip(v.values()) {
                *r = vi + tau * *r;
            }
        }
    }
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("explicit right-hand side"));
    }
    Ok(rhs)
}

/// One IMEX Euler step of the regular problem.
pub fn imex_step(
    v: &Field,
    model: &ModelSpec,
    ktab: &PeriodicKernelTable,
    dsolver: &DiffusionSolver,
    g: Option<&Field>,
    tau: f64,
    exec: Execution,
) -> Result<Field> {
    let grid = v.grid();
    if dsolver.dim() != grid.n_xi() {
        return Err(Error::GridMismatch);
    }
    let mut rhs = explicit_rhs(v, model, ktab, g, tau, exec)?;
    exec.for_each_chunk(&mut rhs, grid.n_xi(), |_, col| dsolver.solve_in_place(col));
    Ok(Field::from_values_unchecked(grid, rhs))
}

/// One step of the diffusion-less problem: `v⁺ = (v + τ(F(v) + G)) / (1 + τγ)`.
pub fn singular_step(
    v: &Field,
    model: &ModelSpec,
    ktab: &PeriodicKernelTable,
    g: Option<&Field>,
    tau: f64,
    exec: Execution,
) -> Result<Field> {
    let mut rhs = explicit_rhs(v, model, ktab, g, tau, exec)?;
    let decay = 1.0 + tau * model.gamma;
    for r in rhs.iter_mut() {
        *r /= decay;
    }
    Ok(Field::from_values_unchecked(v.grid(), rhs))
}

/// Which time levels a [`Trajectory`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotPolicy {
    /// Keep every `k`-th step (and always step 0).
    Every(usize),
    /// Keep no fields, only statistics and the final state.
    None,
}

impl SnapshotPolicy {
    pub fn keeps(&self, step: usize) -> bool {
        match *self {
            SnapshotPolicy::Every(k) => step.is_multiple_of(k.max(1)),
            SnapshotPolicy::None => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub time_grid: TimeGrid,
    pub policy: SnapshotPolicy,
    pub snapshots: Vec<Snapshot>,
    /// `‖vⁿ‖²_{L²}` for every step `n = 0..=n_steps`.
    pub norms_sq: Vec<f64>,
    pub final_state: Field,
}

impl Trajectory {
    /// `sup_n ‖vⁿ‖_{L²}`.
    pub fn sup_norm(&self) -> f64 {
        self.norms_sq.iter().fold(0.0_f64, |m, &n| m.max(n)).sqrt()
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        let step = self.time_grid.step_at(t)?;
        self.snapshots.iter().find(|s| s.step == step)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.final_state.grid()
    }
}

/// Time integrator bound to one model, grid and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: ModelSpec,
    ktab: PeriodicKernelTable,
    dsolver: DiffusionSolver,
    tau: f64,
    exec: Execution,
}

impl Stepper {
    pub fn new(model: &ModelSpec, grid: &Arc<Grid>, tau: f64, exec: Execution) -> Result<Self> {
        model.validate(grid)?;
        Ok(Self {
            model: model.clone(),
            ktab: periodize_kernel(model.kernel.kappa, grid),
            dsolver: DiffusionSolver::for_model(model, grid, tau)?,
            tau,
            exec,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn step(&self, v: &Field, t: f64) -> Result<Field> {
        let g = self.model.input.at(t);
        imex_step(v, &self.model, &self.ktab, &self.dsolver, g.as_ref(), self.tau, self.exec)
    }
}

fn check_blow_up(v: &Field, step: usize, time: f64) -> Result<f64> {
    let norm_sq = l2_norm_sq(v);
    if !v.is_finite() || !norm_sq.is_finite() {
        return Err(Error::BlowUp {
            step,
            time,
            reason: "non-finite values".into(),
        });
    }
    if norm_sq.sqrt() > BLOW_UP_NORM {
        return Err(Error::BlowUp {
            step,
            time,
            reason: format!("L2 norm {} exceeds {BLOW_UP_NORM}", norm_sq.sqrt()),
        });
    }
    Ok(norm_sq)
}

/// Integrate from `v0`, calling `observe(step, time, field)` at every time level.
pub fn run_from<O>(
    model: &ModelSpec,
    v0: Field,
    time_grid: &TimeGrid,
    exec: Execution,
    mut observe: O,
) -> Result<Field>
where
    O: FnMut(usize, f64, &Field) -> Result<()>,
{
    let grid = Arc::clone(v0.grid());
    let stepper = Stepper::new(model, &grid, time_grid.tau(), exec)?;
    check_blow_up(&v0, 0, 0.0)?;
    observe(0, 0.0, &v0)?;
    let mut v = v0;
    for n in 0..time_grid.n_steps() {
        let t = time_grid.time(n);
        v = stepper.step(&v, t).map_err(|e| match e {
            Error::NonFinite(what) => Error::BlowUp {
                step: n + 1,
                time: time_grid.time(n + 1),
                reason: format!("non-finite value in {what}"),
            },
            other => other,
        })?;
        check_blow_up(&v, n + 1, time_grid.time(n + 1))?;
        observe(n + 1, time_grid.time(n + 1), &v)?;
    }
    Ok(v)
}

/// Solve the initial-boundary value problem starting from `v0 = initial_condition`.
pub fn run(
    model: &ModelSpec,
    grid: &Arc<Grid>,
    time_grid: &TimeGrid,
    policy: SnapshotPolicy,
    exec: Execution,
) -> Result<Trajectory> {
    let v0 = initial_condition(grid, &model.init);
    run_with_initial(model, v0, time_grid, policy, exec)
}

pub fn run_with_initial(
    model: &ModelSpec,
    v0: Field,
    time_grid: &TimeGrid,
    policy: SnapshotPolicy,
    exec: Execution,
) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    let mut norms_sq = Vec::with_capacity(time_grid.n_steps() + 1);
    let final_state = run_from(model, v0, time_grid, exec, |step, time, v| {
        norms_sq.push(l2_norm_sq(v));
        if policy.keeps(step) {
            snapshots.push(Snapshot {
                step,
                time,
                field: v.clone(),
            });
        }
        Ok(())
    })?;
    Ok(Trajectory {
        time_grid: *time_grid,
        policy,
        snapshots,
        norms_sq,
        final_state,
    })
}

/// Constant `C` of the zero-flux check `defect ≤ C h_ξ² max(1, ‖v‖∞)`.
pub const NEUMANN_CONSTANT: f64 = 1.0;

/// Whether the one-sided second-order boundary derivative vanishes to `O(h_ξ²)`.
pub fn neumann_check(v: &Field) -> bool {
    let h = v.grid().h_xi();
    neumann_defect(v) <= NEUMANN_CONSTANT * h * h * v.max_abs().max(1.0)
}

/// Largest one-sided boundary derivative `|(−3v₀ + 4v₁ − v₂) / 2h|` over all columns and both ends.
pub fn neumann_defect(v: &Field) -> f64 {
    let grid = v.grid();
    let h = grid.h_xi();
    let n = grid.n_xi();
    (0..grid.n_x())
        .map(|i| {
            let c = v.column(i);
            let left = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * h);
            let right = (-3.0 * c[n - 1] + 4.0 * c[n - 2] - c[n - 3]) / (2.0 * h);
            left.abs().max(right.abs())
        })
        .fold(0.0, f64::max)
}
