//! Self-check suite behind `dnf validate`: operator oracle, `K_F` bounds,
//! stepper convergence orders, pure decay and the discrete Neumann condition.

use std::f64::consts::PI;
use std::fmt;

use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::exec::Execution;
use crate::experiments::{order_check, OrderCheckConfig, Refinement};
use crate::grid::{build_grid, l2_distance_sq, l2_norm_sq, Field, GridSpec};
use crate::model::{estimate_kf, ModelSpec};
use crate::nonlocal::{apply_f, apply_f_direct, periodize_kernel};
use crate::stepper::{neumann_check, run, SnapshotPolicy, TimeGrid};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, r: Result<(bool, String)>) -> CheckOutcome {
    match r {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn operator_oracle() -> Result<(bool, String)> {
    let grid = build_grid(GridSpec::new(64, 33, 24.0 * PI, 3.0))?;
    let mut model = ModelSpec::reference();
    model.firing.mu = 2.0;
    let ktab = periodize_kernel(model.kernel.kappa, &grid);
    let mut rng = StdRng::seed_from_u64(20);
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let u = Field::from_fn(&grid, |_, _| rng.random_range(-2.0..2.0));
        let a = apply_f(&u, &model, &ktab)?;
        let b = apply_f_direct(&u, &model)?;
        worst = worst.max((l2_distance_sq(&a, &b)? / l2_norm_sq(&b)).sqrt());
    }
    Ok((worst <= 1e-10, format!("max relative L2 difference {worst:.3e} (limit 1e-10)")))
}

fn kf_bounds() -> Result<(bool, String)> {
    let grid = build_grid(GridSpec::new(128, 65, 24.0 * PI, 3.0))?;
    let model = ModelSpec::reference();
    let kf = estimate_kf(&model, &grid)?;
    let ktab = periodize_kernel(model.kernel.kappa, &grid);
    let mut rng = StdRng::seed_from_u64(21);
    let mut ok = true;
    let mut worst_bound = 0.0_f64;
    let mut worst_lip = 0.0_f64;
    for _ in 0..20 {
        let u = Field::from_fn(&grid, |_, _| rng.random_range(-5.0..5.0));
        let v = Field::from_fn(&grid, |_, _| rng.random_range(-5.0..5.0));
        let fu = apply_f(&u, &model, &ktab)?;
        let fv = apply_f(&v, &model, &ktab)?;
        let n = l2_norm_sq(&fu).sqrt();
        let lip = l2_distance_sq(&fu, &fv)?.sqrt();
        let dist = l2_distance_sq(&u, &v)?.sqrt();
        ok &= n <= kf + 1e-6 && lip <= kf * dist + 1e-6;
        worst_bound = worst_bound.max(n / kf);
        worst_lip = worst_lip.max(lip / (kf * dist));
    }
    Ok((
        ok,
        format!("K_F = {kf:.4e}; max |F(u)|/K_F = {worst_bound:.3e}, max Lipschitz ratio = {worst_lip:.3e}"),
    ))
}

fn order(kind: Refinement, cfg: &OrderCheckConfig, target: f64) -> Result<(bool, String)> {
    let r = order_check(kind, cfg, Execution::Parallel)?;
    let p = r.order.unwrap_or(f64::NAN);
    Ok((
        r.monotone && (p - target).abs() <= 0.2,
        format!("observed order {p:.3} (expected {target} ± 0.2), errors {:?}", r.errors),
    ))
}

fn pure_decay() -> Result<(bool, String)> {
    let grid = build_grid(GridSpec::new(64, 33, 24.0 * PI, 3.0))?;
    let mut model = ModelSpec::reference();
    model.kernel.kappa = 0.0;
    let tg = TimeGrid::new(0.05, 3.0)?;
    let tr = run(&model, &grid, &tg, SnapshotPolicy::Every(1), Execution::Parallel)?;
    let v0 = &tr.snapshots[0].field;
    let mut worst = 0.0_f64;
    for s in &tr.snapshots {
        let factor = (1.0 + tg.tau() * model.gamma).powi(s.step as i32);
        for (a, b) in s.field.values().iter().zip(v0.values()) {
            let expected = b / factor;
            if expected != 0.0 {
                worst = worst.max(((a - expected) / expected).abs());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max relative deviation from v0/(1+τγ)^n: {worst:.3e}")))
}

fn neumann() -> Result<(bool, String)> {
    let grid = build_grid(GridSpec::new(128, 65, 24.0 * PI, 3.0))?;
    let model = ModelSpec::reference().with_nu(0.1);
    let tg = TimeGrid::new(0.05, 3.0)?;
    let tr = run(&model, &grid, &tg, SnapshotPolicy::Every(1), Execution::Parallel)?;
    let failures = tr.snapshots.iter().filter(|s| !neumann_check(&s.field)).count();
    Ok((failures == 0, format!("{failures} of {} snapshots fail the zero-flux check", tr.snapshots.len())))
}

pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        outcome("operator FFT vs direct quadrature", operator_oracle()),
        outcome("K_F bound and Lipschitz estimate", kf_bounds()),
        outcome(
            "time order (frozen source)",
            order(Refinement::Time, &OrderCheckConfig::time_default(), 1.0),
        ),
        outcome(
            "space order (frozen source)",
            order(Refinement::Space, &OrderCheckConfig::space_default(), 2.0),
        ),
        outcome("pure decay", pure_decay()),
        outcome("discrete Neumann condition", neumann()),
    ]
}
