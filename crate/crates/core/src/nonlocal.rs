//! The nonlocal synaptic term
//!
//! ```text
//! F(u)(x, ξ) = ∫_Ω W(x, ξ, x', ξ') S(u(x', ξ')) dx' dξ'
//! ```
//!
//! For the separable kernel `W = w(x − x') δσ(ξ − ξ0) δσ(ξ')` this reduces to
//! a `ξ'`-quadrature per column followed by one circular convolution in `x`,
//! done with an FFT. [`apply_f_direct`] evaluates the full four-fold sum and
//! serves as the reference.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{Field, Grid};
use crate::model::ModelSpec;

/// Grids with more nodes than this are refused by [`apply_f_direct`].
pub const DIRECT_NODE_LIMIT: usize = 128 * 65;

/// `(κ/2) Σ_m e^{−|d + mC|}` summed in closed form, for `d ∈ [0, C]`.
#[inline]
pub fn periodic_exponential(kappa: f64, d: f64, period: f64) -> f64 {
    0.5 * kappa * ((-d).exp() + (-(period - d)).exp()) / (1.0 - (-period).exp())
}

/// Samples of the periodized kernel at the grid offsets plus its scaled spectrum.
#[derive(Clone)]
pub struct PeriodicKernelTable {
    grid: Arc<Grid>,
    samples: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicKernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicKernelTable")
            .field("n_x", &self.samples.len())
            .finish_non_exhaustive()
    }
}

pub fn periodize_kernel(kappa: f64, grid: &Arc<Grid>) -> PeriodicKernelTable {
    let n = grid.n_x();
    let h = grid.h_x();
    let period = grid.spec().period();
    let samples: Vec<f64> = (0..n)
        .map(|i| periodic_exponential(kappa, i as f64 * h, period))
        .collect();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s * h, 0.0)).collect();
    forward.process(&mut spectrum);

    PeriodicKernelTable {
        grid: Arc::clone(grid),
        samples,
        spectrum,
        forward,
        inverse,
    }
}

impl PeriodicKernelTable {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Spectrum of `h_x · samples`.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `c_i = h_x Σ_k w_per((i − k) h_x) m_k`, via FFT.
    pub fn convolve(&self, m: &[f64]) -> Vec<f64> {
        let n = self.samples.len();
        assert_eq!(m.len(), n);
        let mut buf: Vec<Complex64> = m.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}

/// Evaluate `F(u)` through the separable structure and an FFT convolution.
pub fn apply_f(u: &Field, model: &ModelSpec, ktab: &PeriodicKernelTable) -> Result<Field> {
    apply_f_with(u, model, ktab, Execution::default())
}

pub fn apply_f_with(
    u: &Field,
    model: &ModelSpec,
    ktab: &PeriodicKernelTable,
    exec: Execution,
) -> Result<Field> {
    let grid = u.grid();
    if !grid.same_as(ktab.grid()) {
        return Err(Error::GridMismatch);
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("nonlocal operator input"));
    }
    let n_xi = grid.n_xi();
    let kernel = &model.kernel;
    let firing = &model.firing;

    let source: Vec<f64> = grid
        .xi_nodes()
        .iter()
        .zip(grid.xi_weights())
        .map(|(&xi, &w)| w * kernel.source(xi))
        .collect();
    let target: Vec<f64> = grid.xi_nodes().iter().map(|&xi| kernel.target(xi)).collect();

    let mass = exec.map_range(grid.n_x(), |i| {
        let col = u.column(i);
        let mut s = 0.0;
        for (&v, &w) in col.iter().zip(&source) {
            s += w * firing.rate(v);
        }
        s
    });
    let c = ktab.convolve(&mass);

    let mut out = vec![0.0; grid.len()];
    exec.for_each_chunk(&mut out, n_xi, |i, col| {
        for (o, t) in col.iter_mut().zip(&target) {
            *o = t * c[i];
        }
    });
    Ok(Field::from_values_unchecked(grid, out))
}

/// Reference evaluation of `F(u)` by the full four-fold quadrature.
///
/// Cost is `O(n_x² n_ξ²)`; grids above [`DIRECT_NODE_LIMIT`] nodes are refused.
pub fn apply_f_direct(u: &Field, model: &ModelSpec) -> Result<Field> {
    apply_f_direct_with_limit(u, model, DIRECT_NODE_LIMIT, Execution::default())
}

pub fn apply_f_direct_with_limit(
    u: &Field,
    model: &ModelSpec,
    limit: usize,
    exec: Execution,
) -> Result<Field> {
    let grid = u.grid();
    if grid.len() > limit {
        return Err(Error::DirectTooLarge {
            nodes: grid.len(),
            limit,
        });
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("nonlocal operator input"));
    }
    let (n_x, n_xi) = (grid.n_x(), grid.n_xi());
    let h_x = grid.h_x();
    let period = grid.spec().period();
    let xs = grid.x_nodes();
    let xis = grid.xi_nodes();
    let wxi = grid.xi_weights();
    let kernel = &model.kernel;

    let rate: Vec<f64> = u.values().iter().map(|&v| model.firing.rate(v)).collect();

    let mut out = vec![0.0; grid.len()];
    exec.for_each_chunk(&mut out, n_xi, |i, col| {
        let wx: Vec<f64> = (0..n_x)
            .map(|k| periodic_exponential(kernel.kappa, (xs[i] - xs[k]).abs(), period))
            .collect();
        for (j, o) in col.iter_mut().enumerate() {
            let tj = kernel.target(xis[j]);
            let mut s = 0.0;
            for (k, &wk) in wx.iter().enumerate() {
                let r = &rate[k * n_xi..(k + 1) * n_xi];
                for jp in 0..n_xi {
                    let w = wk * tj * kernel.source(xis[jp]);
                    s += h_x * wxi[jp] * w * r[jp];
                }
            }
            *o = s;
        }
    });
    Ok(Field::from_values_unchecked(grid, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, l2_distance_sq, l2_norm_sq, GridSpec};
    use crate::model::delta_profile;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use statrs::function::erf::erf;
    use std::f64::consts::PI;

    fn reference_grid(n_x: usize, n_xi: usize) -> Arc<Grid> {
        build_grid(GridSpec::new(n_x, n_xi, 24.0 * PI, 3.0)).unwrap()
    }

    fn rel_l2(a: &Field, b: &Field) -> f64 {
        (l2_distance_sq(a, b).unwrap() / l2_norm_sq(b)).sqrt()
    }

    #[test]
    fn kernel_large_domain_limit() {
        let g = reference_grid(64, 5);
        let t = periodize_kernel(1.0, &g);
        assert!((t.samples()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_is_torus_symmetric() {
        let g = build_grid(GridSpec::new(32, 5, 2.0, 1.0)).unwrap();
        let t = periodize_kernel(1.3, &g);
        let n = t.samples().len();
        for i in 1..n {
            assert!((t.samples()[i] - t.samples()[n - i]).abs() < 1e-15);
            assert!(t.samples()[i] > 0.0);
        }
    }

    #[test]
    fn kernel_matches_image_sum() {
        let g = reference_grid(256, 5);
        let t = periodize_kernel(1.0, &g);
        let c = g.spec().period();
        for (i, &s) in t.samples().iter().enumerate() {
            let d = i as f64 * g.h_x();
            let images: f64 = (-3..=3).map(|m| 0.5 * (-(d + m as f64 * c).abs()).exp()).sum();
            assert!((s - images).abs() <= 1e-15, "offset {i}: {s} vs {images}");
        }
    }

    #[test]
    fn kernel_one_period_mass() {
        // short period so the image sum matters
        let g = build_grid(GridSpec::new(2048, 5, 1.5, 1.0)).unwrap();
        let t = periodize_kernel(2.0, &g);
        let mass: f64 = g.h_x() * t.samples().iter().sum::<f64>();
        assert!((mass - 2.0).abs() < 1e-5, "{mass}");
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let g = reference_grid(16, 9);
        let mut m = ModelSpec::reference();
        m.kernel.kappa = 0.0;
        let u = Field::constant(&g, 3.0);
        let t = periodize_kernel(0.0, &g);
        assert!(apply_f(&u, &m, &t).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(apply_f_direct(&u, &m).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_input_closed_form() {
        let g = reference_grid(256, 97);
        let m = ModelSpec::reference();
        let t = periodize_kernel(m.kernel.kappa, &g);
        let u = Field::constant(&g, 1e6);
        let f = apply_f(&u, &m, &t).unwrap();
        // F(x, ξ0) = κ erf(Lξ/σ) δσ(0) at every x; ξ0 = 1 is node j = 64 for h_ξ = 1/16.
        // The rectangle rule on the periodized e^{−|d|} sums to (κ/2) h coth(h/2)
        // exactly, which tends to κ as h → 0.
        let j0 = 64;
        assert!((g.xi_nodes()[j0] - 1.0).abs() < 1e-14);
        let h = g.h_x();
        let rect = 0.5 * h / (0.5 * h).tanh();
        let continuum = erf(3.0 / 0.5) * delta_profile(0.0, 0.5).unwrap();
        for i in 0..g.n_x() {
            assert!((f.at(i, j0) - rect * continuum).abs() < 1e-10, "{}", f.at(i, j0));
            assert!((f.at(i, j0) - continuum).abs() < h * h / 6.0 * continuum);
        }
    }

    #[test]
    fn direct_is_linear_in_rate() {
        let g = reference_grid(16, 9);
        let m = ModelSpec::reference();
        let half = apply_f_direct(&Field::constant(&g, m.firing.theta), &m).unwrap();
        let full = apply_f_direct(&Field::constant(&g, 1e6), &m).unwrap();
        for (h, f) in half.values().iter().zip(full.values()) {
            assert!((h - 0.5 * f).abs() <= 1e-15 * f.abs().max(1e-300));
        }
    }

    #[test]
    fn direct_refuses_large_grids() {
        let g = reference_grid(256, 65);
        let u = Field::zeros(&g);
        assert!(matches!(
            apply_f_direct(&u, &ModelSpec::reference()),
            Err(Error::DirectTooLarge { .. })
        ));
    }

    #[test]
    fn fft_matches_direct_on_random_fields() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut m = ModelSpec::reference();
        // a moderate gain keeps S(u) away from a pure step
        m.firing.mu = 2.0;
        for &(nx, nxi) in &[(16usize, 9usize), (64, 33)] {
            let g = reference_grid(nx, nxi);
            let t = periodize_kernel(m.kernel.kappa, &g);
            let u = Field::from_fn(&g, |_, _| rng.random_range(-2.0..2.0));
            let a = apply_f(&u, &m, &t).unwrap();
            let b = apply_f_direct(&u, &m).unwrap();
            assert!(rel_l2(&a, &b) < 1e-10, "{nx}x{nxi}: {}", rel_l2(&a, &b));
        }
    }

    #[test]
    fn output_is_rank_one() {
        let g = reference_grid(32, 33);
        let m = ModelSpec::reference();
        let t = periodize_kernel(1.0, &g);
        let mut rng = StdRng::seed_from_u64(3);
        let u = Field::from_fn(&g, |_, _| rng.random_range(-1.0..1.0));
        let f = apply_f(&u, &m, &t).unwrap();
        for i in 0..g.n_x() {
            let mut ratio = None;
            for (j, &xi) in g.xi_nodes().iter().enumerate() {
                let d = m.kernel.target(xi);
                if d > 1e-12 {
                    let r = f.at(i, j) / d;
                    let r0 = *ratio.get_or_insert(r);
                    assert!((r - r0).abs() <= 1e-10 * r0.abs());
                }
            }
        }
    }

    #[test]
    fn modes_agree_bitwise() {
        let g = reference_grid(64, 33);
        let m = ModelSpec::reference();
        let t = periodize_kernel(1.0, &g);
        let mut rng = StdRng::seed_from_u64(5);
        let u = Field::from_fn(&g, |_, _| rng.random_range(-1.0..1.0));
        let a = apply_f_with(&u, &m, &t, Execution::Sequential).unwrap();
        let b = apply_f_with(&u, &m, &t, Execution::Parallel).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn rejects_mismatch_and_nonfinite() {
        let g = reference_grid(16, 9);
        let other = reference_grid(32, 9);
        let m = ModelSpec::reference();
        let t = periodize_kernel(1.0, &other);
        assert!(matches!(apply_f(&Field::zeros(&g), &m, &t), Err(Error::GridMismatch)));
        let t = periodize_kernel(1.0, &g);
        let mut u = Field::zeros(&g);
        u.values_mut()[3] = f64::NAN;
        assert!(matches!(apply_f(&u, &m, &t), Err(Error::NonFinite(_))));
    }
}
