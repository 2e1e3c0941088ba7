//! Reference solutions for the linear problem with a time-frozen source `N`.
//!
//! Along each fibre, `−γ + ν∂ξ²` with zero-flux ends is diagonal in the cosine
//! basis `ψ₀ = √(1/L)`, `ψₖ = √(2/L) cos(kπ(ξ + Lξ)/L)` with eigenvalues
//! `λₖ = −γ − ν(kπ/L)²`, `L = 2Lξ`. Each modal coefficient then solves a
//! scalar linear ODE in closed form.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{l2_distance_sq, Field, Grid};
use crate::stepper::Trajectory;

#[derive(Debug, Clone)]
pub struct CosineBasis {
    grid: Arc<Grid>,
    length: f64,
    n_modes: usize,
    /// `ψₖ(ξⱼ)`, mode-major.
    table: Vec<f64>,
    /// Trapezoid norms `‖ψₖ‖_h`. These equal 1 to rounding except for the
    /// highest grid mode `k = n_ξ − 1`, whose discrete norm is `√2`.
    norms: Vec<f64>,
}

impl CosineBasis {
    /// Modes `0..=k_max` on the grid's dendritic interval.
    pub fn new(grid: &Arc<Grid>, k_max: usize) -> Result<Self> {
        if k_max + 1 > grid.n_xi() {
            return Err(Error::InvalidParameter(format!(
                "k_max = {k_max} exceeds n_xi - 1 = {}",
                grid.n_xi() - 1
            )));
        }
        let l_xi = grid.spec().l_xi;
        let length = 2.0 * l_xi;
        let n_modes = k_max + 1;
        let mut table = Vec::with_capacity(n_modes * grid.n_xi());
        for k in 0..n_modes {
            for &xi in grid.xi_nodes() {
                table.push(psi(k, xi, l_xi));
            }
        }
        let w = grid.xi_weights();
        let norms = table
            .chunks_exact(grid.n_xi())
            .map(|row| row.iter().zip(w).map(|(p, w)| w * p * p).sum::<f64>().sqrt())
            .collect();
        Ok(Self {
            grid: Arc::clone(grid),
            length,
            n_modes,
            table,
            norms,
        })
    }

    /// Basis using every mode the grid resolves.
    pub fn full(grid: &Arc<Grid>) -> Self {
        Self::new(grid, grid.n_xi() - 1).expect("full basis always fits")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.grid.n_xi();
        &self.table[k * n..(k + 1) * n]
    }

    /// `μₖ = (kπ/L)²`.
    pub fn wavenumber_sq(&self, k: usize) -> f64 {
        let q = k as f64 * PI / self.length;
        q * q
    }

    /// `λₖ = −γ − ν (kπ/L)²`.
    pub fn eigenvalue(&self, k: usize, nu: f64, gamma: f64) -> f64 {
        -gamma - nu * self.wavenumber_sq(k)
    }

    /// Trapezoid inner product `(ψⱼ, ψₖ)_h`.
    pub fn inner(&self, j: usize, k: usize) -> f64 {
        self.mode(j)
            .iter()
            .zip(self.mode(k))
            .zip(self.grid.xi_weights())
            .map(|((a, b), w)| w * a * b)
            .sum()
    }

    /// Synthesize a field from per-column coefficients.
    pub fn synthesize(&self, coeffs: &ModalCoefficients) -> Result<Field> {
        if coeffs.n_modes != self.n_modes || coeffs.n_x != self.grid.n_x() {
            return Err(Error::InvalidParameter(
                "coefficients do not match the basis".into(),
            ));
        }
        let n_xi = self.grid.n_xi();
        let mut out = vec![0.0; self.grid.len()];
        for (i, col) in out.chunks_exact_mut(n_xi).enumerate() {
            for (k, &c) in coeffs.column(i).iter().enumerate() {
                let scale = c / self.norms[k];
                for (o, p) in col.iter_mut().zip(self.mode(k)) {
                    *o += scale * p;
                }
            }
        }
        Ok(Field::from_values_unchecked(&self.grid, out))
    }
}

fn psi(k: usize, xi: f64, l_xi: f64) -> f64 {
    let length = 2.0 * l_xi;
    if k == 0 {
        (1.0 / length).sqrt()
    } else {
        (2.0 / length).sqrt() * (k as f64 * PI * (xi + l_xi) / length).cos()
    }
}

/// Modal coefficients per `x` column, normalized so that `Σₖ cₖ² = ‖column‖²_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoefficients {
    n_x: usize,
    n_modes: usize,
    values: Vec<f64>,
}

impl ModalCoefficients {
    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_modes..(i + 1) * self.n_modes]
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.column(i).iter().map(|c| c * c).sum()
    }
}

/// Project each column onto the basis with trapezoid inner products.
pub fn project(field: &Field, basis: &CosineBasis) -> Result<ModalCoefficients> {
    if !field.grid().same_as(&basis.grid) {
        return Err(Error::GridMismatch);
    }
    let grid = field.grid();
    let w = grid.xi_weights();
    let mut values = Vec::with_capacity(grid.n_x() * basis.n_modes);
    for i in 0..grid.n_x() {
        let col = field.column(i);
        for k in 0..basis.n_modes {
            let ip: f64 = col
                .iter()
                .zip(basis.mode(k))
                .zip(w)
                .map(|((f, p), w)| w * f * p)
                .sum();
            values.push(ip / basis.norms[k]);
        }
    }
    Ok(ModalCoefficients {
        n_x: grid.n_x(),
        n_modes: basis.n_modes,
        values,
    })
}

/// `(e^{λt} − 1)/λ`, with the removable limit `t` at `λ = 0`.
fn duhamel_factor(lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        t
    } else {
        (lambda * t).exp_m1() / lambda
    }
}

/// Exact solution of `∂t v = (−γ + ν∂ξ²) v + N0`, `∂ξ v = 0` at `ξ = ±Lξ`, `v(0) = v0`.
pub fn linear_exact_regular(
    v0: &Field,
    n0: &Field,
    t: f64,
    nu: f64,
    gamma: f64,
    basis: &CosineBasis,
) -> Result<Field> {
    v0.check_same_grid(n0)?;
    let a = project(v0, basis)?;
    let b = project(n0, basis)?;
    let lambdas: Vec<f64> = (0..basis.n_modes).map(|k| basis.eigenvalue(k, nu, gamma)).collect();
    let values = a
        .values
        .chunks_exact(basis.n_modes)
        .zip(b.values.chunks_exact(basis.n_modes))
        .flat_map(|(ca, cb)| {
            ca.iter()
                .zip(cb)
                .zip(&lambdas)
                .map(|((&va, &nb), &l)| va * (l * t).exp() + nb * duhamel_factor(l, t))
                .collect::<Vec<_>>()
        })
        .collect();
    basis.synthesize(&ModalCoefficients {
        n_x: a.n_x,
        n_modes: a.n_modes,
        values,
    })
}

/// Exact solution of `∂t v = −γ v + N0`, pointwise.
pub fn linear_exact_singular(v0: &Field, n0: &Field, t: f64, gamma: f64) -> Result<Field> {
    v0.check_same_grid(n0)?;
    let decay = (-gamma * t).exp();
    let growth = duhamel_factor(-gamma, t);
    let values = v0
        .values()
        .iter()
        .zip(n0.values())
        .map(|(&v, &n)| v * decay + n * growth)
        .collect();
    Ok(Field::from_values_unchecked(v0.grid(), values))
}

/// `max_n ‖v(tₙ) − v_ν(tₙ)‖²_{L²}` over the paired snapshots of two runs.
pub fn rate_probe(reference: &Trajectory, diffusive: &Trajectory) -> Result<f64> {
    if reference.time_grid != diffusive.time_grid {
        return Err(Error::TrajectoryMismatch("time grids differ".into()));
    }
    if reference.snapshots.len() != diffusive.snapshots.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "{} vs {} snapshots",
            reference.snapshots.len(),
            diffusive.snapshots.len()
        )));
    }
    let mut worst = 0.0_f64;
    for (a, b) in reference.snapshots.iter().zip(&diffusive.snapshots) {
        if a.step != b.step {
            return Err(Error::TrajectoryMismatch(format!(
                "snapshot steps {} and {} differ",
                a.step, b.step
            )));
        }
        let d = l2_distance_sq(&a.field, &b.field)
            .map_err(|_| Error::TrajectoryMismatch("grids differ".into()))?;
        worst = worst.max(d);
    }
    Ok(worst)
}
