//! Property tests across modules: operator bounds, stepper stability,
//! execution-mode determinism and configuration roundtrips.

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use dnf_core::cli::parse_config_str;
use dnf_core::experiments::{order_check, OrderCheckConfig, Refinement, Study, SweepConfig};
use dnf_core::model::{estimate_kf, ModelSpec};
use dnf_core::nonlocal::apply_f_with;
use dnf_core::stepper::{neumann_defect, run_with_initial, NEUMANN_CONSTANT};
use dnf_core::{
    apply_f, apply_f_direct, build_grid, l2_distance_sq, l2_norm_sq, periodize_kernel, run, Execution, Field, Grid,
    GridSpec, SnapshotPolicy, TimeGrid,
};

fn random_field(grid: &Arc<Grid>, seed: u64, spread: f64) -> Field {
    let mut rng = StdRng::seed_from_u64(seed);
    Field::from_fn(grid, |_, _| rng.random_range(-spread..spread))
}

fn small_grid() -> impl Strategy<Value = Arc<Grid>> {
    ((2usize..12).prop_map(|k| 2 * k), 3usize..14, 1.0f64..30.0, 0.5f64..4.0)
        .prop_map(|(n_x, n_xi, l_x, l_xi)| build_grid(GridSpec::new(n_x, n_xi, l_x, l_xi)).unwrap())
}

/// Grids fine enough that the quadrature resolves the kernel profiles
/// (`h_x ≤ 1/2`, `h_ξ ≤ σ/3`); on coarser grids point sampling of the narrow
/// `ξ` profiles can exceed the continuum kernel norm behind `K_F`.
fn resolved_case() -> impl Strategy<Value = (Arc<Grid>, ModelSpec)> {
    (2.0f64..20.0, 1.0f64..3.0, model()).prop_map(|(l_x, l_xi, mut m)| {
        m.kernel.sigma = m.kernel.sigma.max(0.3);
        let n_x = 2 * (2.0 * l_x).ceil() as usize;
        let n_xi = (6.0 * l_xi / m.kernel.sigma).ceil() as usize + 1;
        (build_grid(GridSpec::new(n_x, n_xi, l_x, l_xi)).unwrap(), m)
    })
}

fn model() -> impl Strategy<Value = ModelSpec> {
    (0.0f64..3.0, 0.1f64..50.0, -1.0f64..1.0, 0.2f64..1.0, -0.4f64..0.4).prop_map(|(kappa, mu, theta, sigma, xi0)| {
        let mut m = ModelSpec::reference();
        m.kernel.kappa = kappa;
        m.kernel.sigma = sigma;
        m.kernel.xi0 = xi0;
        m.firing.mu = mu;
        m.firing.theta = theta;
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonlocal_term_is_bounded_and_lipschitz((grid, m) in resolved_case(), seed: u64, spread in 0.01f64..10.0) {
        let kf = estimate_kf(&m, &grid).unwrap();
        let ktab = periodize_kernel(m.kernel.kappa, &grid);
        let u = random_field(&grid, seed, spread);
        let v = random_field(&grid, seed.wrapping_add(1), spread);
        let fu = apply_f(&u, &m, &ktab).unwrap();
        let fv = apply_f(&v, &m, &ktab).unwrap();
        prop_assert!(l2_norm_sq(&fu).sqrt() <= kf + 1e-6);
        let lip = l2_distance_sq(&fu, &fv).unwrap().sqrt();
        prop_assert!(lip <= kf * l2_distance_sq(&u, &v).unwrap().sqrt() + 1e-6);
    }

    #[test]
    fn fft_operator_matches_direct_quadrature(grid in small_grid(), m in model(), seed: u64) {
        let ktab = periodize_kernel(m.kernel.kappa, &grid);
        let u = random_field(&grid, seed, 2.0);
        let fast = apply_f(&u, &m, &ktab).unwrap();
        let slow = apply_f_direct(&u, &m).unwrap();
        let scale = l2_norm_sq(&slow).max(1e-300);
        prop_assert!(l2_distance_sq(&fast, &slow).unwrap() <= 1e-24 * scale + 1e-300);
    }

    #[test]
    fn execution_modes_agree_bitwise(grid in small_grid(), m in model(), seed: u64) {
        let ktab = periodize_kernel(m.kernel.kappa, &grid);
        let u = random_field(&grid, seed, 1.0);
        let a = apply_f_with(&u, &m, &ktab, Execution::Sequential).unwrap();
        let b = apply_f_with(&u, &m, &ktab, Execution::Parallel).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn norm_is_nonincreasing_without_sources(
        grid in small_grid(),
        tau in 1e-3f64..1.0,
        nu in 0.0f64..2.0,
        gamma in 0.0f64..3.0,
        seed: u64,
    ) {
        let mut m = ModelSpec::reference().with_nu(nu);
        m.gamma = gamma;
        m.kernel.kappa = 0.0;
        m.kernel.xi0 = 0.0;
        let tg = TimeGrid::new(tau, 10.0 * tau).unwrap();
        let tr = run_with_initial(&m, random_field(&grid, seed, 1.0), &tg, SnapshotPolicy::None, Execution::Parallel)
            .unwrap();
        prop_assert!(tr.norms_sq.windows(2).all(|w| w[1] <= w[0]), "{:?}", tr.norms_sq);
    }

    #[test]
    fn firing_rate_is_a_bounded_monotone_sigmoid(mu in 0.01f64..1e4, theta in -2.0f64..2.0, u0 in -5.0f64..5.0) {
        let f = dnf_core::model::FiringRateSpec::new(mu, theta);
        let mut last = 0.0;
        for k in 0..200 {
            let u = u0 + 0.01 * k as f64;
            let r = f.rate(u);
            prop_assert!((0.0..=1.0).contains(&r) && r >= last);
            prop_assert!(f.derivative(u) <= mu / 4.0);
            last = r;
        }
        prop_assert_eq!(f.derivative(theta), mu / 4.0);
    }

    #[test]
    fn config_roundtrips(
        n_x in (2usize..600).prop_map(|k| 2 * k),
        n_xi in 3usize..300,
        gamma in 0.0f64..2.0,
        nu in 0.0f64..1.0,
        steps in 1usize..100,
    ) {
        let mut cfg = parse_config_str(include_str!("../configs/fig2.cfg")).unwrap();
        cfg.grid.n_x = n_x;
        cfg.grid.n_xi = n_xi;
        cfg.model.gamma = gamma;
        cfg.model.nu = nu;
        cfg.time = TimeGrid::new(0.05, 0.05 * steps as f64).unwrap();
        let back = parse_config_str(&cfg.to_config_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn trajectory_respects_a_priori_bound() {
    let grid = build_grid(GridSpec::new(256, 65, 24.0 * PI, 3.0)).unwrap();
    for nu in [0.0, 0.1] {
        let model = ModelSpec::reference().with_nu(nu);
        let tg = TimeGrid::new(0.05, 3.0).unwrap();
        let tr = run(&model, &grid, &tg, SnapshotPolicy::None, Execution::Parallel).unwrap();
        let kf = estimate_kf(&model, &grid).unwrap();
        let bound = tr.norms_sq[0].sqrt() + kf * tg.t_end();
        assert!(tr.sup_norm() <= 1.1 * bound, "{} > {}", tr.sup_norm(), bound);
    }
}

#[test]
fn halving_the_step_halves_the_linear_error() {
    let config = OrderCheckConfig::time_default();
    let r = order_check(Refinement::Time, &config, Execution::Parallel).unwrap();
    for w in r.errors.windows(2) {
        let ratio = w[0].1 / w[1].1;
        assert!((ratio - 2.0).abs() <= 0.3, "{ratio}");
    }
}

#[test]
fn neumann_defect_is_second_order() {
    // ratio defect / h² stays bounded under ξ refinement
    let mut scaled = Vec::new();
    for n_xi in [65, 129, 257] {
        let grid = build_grid(GridSpec::new(128, n_xi, 24.0 * PI, 3.0)).unwrap();
        let model = ModelSpec::reference().with_nu(0.1);
        let tg = TimeGrid::new(0.05, 1.0).unwrap();
        let tr = run(&model, &grid, &tg, SnapshotPolicy::None, Execution::Parallel).unwrap();
        let h = grid.h_xi();
        scaled.push(neumann_defect(&tr.final_state) / (h * h));
    }
    assert!(scaled.iter().all(|&c| c <= NEUMANN_CONSTANT), "{scaled:?}");
    assert!(scaled[2] <= 1.5 * scaled[0], "{scaled:?}");
}

#[test]
fn runs_are_bitwise_identical_across_modes() {
    let grid = build_grid(GridSpec::new(128, 33, 24.0 * PI, 3.0)).unwrap();
    let model = ModelSpec::reference().with_nu(0.05);
    let tg = TimeGrid::new(0.05, 1.0).unwrap();
    let a = run(&model, &grid, &tg, SnapshotPolicy::Every(5), Execution::Sequential).unwrap();
    let b = run(&model, &grid, &tg, SnapshotPolicy::Every(5), Execution::Parallel).unwrap();
    assert_eq!(a.final_state.values(), b.final_state.values());
    assert_eq!(a.norms_sq, b.norms_sq);
}

#[test]
fn sweep_is_bitwise_identical_across_modes() {
    let mut study = Study::reference();
    study.grid = GridSpec::new(128, 33, 24.0 * PI, 3.0);
    let config = SweepConfig { study, nus: vec![0.0, 0.025, 0.05, 0.1] };
    let a = dnf_core::experiments::nu_sweep(&config, Execution::Sequential).unwrap();
    let b = dnf_core::experiments::nu_sweep(&config, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
