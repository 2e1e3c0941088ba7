//! Tensor grid on `𝕋 × (−Lξ, Lξ)` and the discrete L² norm.
//!
//! The periodic `x` direction uses `n_x` nodes without the duplicated
//! endpoint and the rectangle rule. The `ξ` direction includes both endpoints
//! and uses the trapezoid rule, which pairs with the mirrored-ghost Neumann
//! closure of the diffusion solver.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_x: usize,
    pub n_xi: usize,
    /// Half-circumference of the cortex circle.
    pub l_x: f64,
    /// Half-length of the dendritic interval.
    pub l_xi: f64,
}

impl GridSpec {
    pub fn new(n_x: usize, n_xi: usize, l_x: f64, l_xi: f64) -> Self {
        Self { n_x, n_xi, l_x, l_xi }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_x < 4 || !self.n_x.is_multiple_of(2) {
            problems.push(format!("n_x must be even and >= 4, got {}", self.n_x));
        }
        if self.n_xi < 3 {
            problems.push(format!("n_xi must be >= 3, got {}", self.n_xi));
        }
        if !(self.l_x.is_finite() && self.l_x > 0.0) {
            problems.push(format!("L_x must be positive, got {}", self.l_x));
        }
        if !(self.l_xi.is_finite() && self.l_xi > 0.0) {
            problems.push(format!("L_xi must be positive, got {}", self.l_xi));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGrid(problems.join("; ")))
        }
    }

    pub fn h_x(&self) -> f64 {
        2.0 * self.l_x / self.n_x as f64
    }

    pub fn h_xi(&self) -> f64 {
        2.0 * self.l_xi / (self.n_xi - 1) as f64
    }

    /// Circumference `2 L_x` of the cortex.
    pub fn period(&self) -> f64 {
        2.0 * self.l_x
    }

    /// Measure `|Ω| = 4 L_x L_ξ`.
    pub fn area(&self) -> f64 {
        4.0 * self.l_x * self.l_xi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    x_nodes: Vec<f64>,
    xi_nodes: Vec<f64>,
    xi_weights: Vec<f64>,
}

pub fn build_grid(spec: GridSpec) -> Result<Arc<Grid>> {
    Grid::new(spec).map(Arc::new)
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let h_x = spec.h_x();
        let h_xi = spec.h_xi();
        let x_nodes = (0..spec.n_x).map(|i| -spec.l_x + i as f64 * h_x).collect();
        let xi_nodes = (0..spec.n_xi)
            .map(|j| -spec.l_xi + j as f64 * h_xi)
            .collect();
        let mut xi_weights = vec![h_xi; spec.n_xi];
        xi_weights[0] = 0.5 * h_xi;
        xi_weights[spec.n_xi - 1] = 0.5 * h_xi;
        Ok(Self {
            spec,
            x_nodes,
            xi_nodes,
            xi_weights,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_x(&self) -> usize {
        self.spec.n_x
    }

    pub fn n_xi(&self) -> usize {
        self.spec.n_xi
    }

    pub fn len(&self) -> usize {
        self.spec.n_x * self.spec.n_xi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_x(&self) -> f64 {
        self.spec.h_x()
    }

    pub fn h_xi(&self) -> f64 {
        self.spec.h_xi()
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn xi_nodes(&self) -> &[f64] {
        &self.xi_nodes
    }

    pub fn xi_weights(&self) -> &[f64] {
        &self.xi_weights
    }

    /// Index of the node at `x = 0` (always present since `n_x` is even).
    pub fn x_origin_index(&self) -> usize {
        self.spec.n_x / 2
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }
}

/// Sampled voltage on a grid, stored row-major with `x` outer and `ξ` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &x in grid.x_nodes() {
            for &xi in grid.xi_nodes() {
                values.push(f(x, xi));
            }
        }
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Wrap raw values, checking the length and that every entry is finite.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub(crate) fn from_values_unchecked(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_xi() + j]
    }

    /// The `ξ`-profile at the `i`-th `x` node.
    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.grid.n_xi();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Discrete `‖f‖²_{L²(Ω)}`: rectangle rule in `x`, trapezoid rule in `ξ`.
pub fn l2_norm_sq(f: &Field) -> f64 {
    let grid = f.grid();
    let w = grid.xi_weights();
    let mut total = 0.0;
    for col in f.values.chunks_exact(grid.n_xi()) {
        let mut s = 0.0;
        for (v, wj) in col.iter().zip(w) {
            s += wj * v * v;
        }
        total += s;
    }
    grid.h_x() * total
}

/// Discrete `‖f − g‖²_{L²(Ω)}`.
pub fn l2_distance_sq(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let w = grid.xi_weights();
    let n = grid.n_xi();
    let mut total = 0.0;
    for (cf, cg) in f.values.chunks_exact(n).zip(g.values.chunks_exact(n)) {
        let mut s = 0.0;
        for ((a, b), wj) in cf.iter().zip(cg).zip(w) {
            let d = a - b;
            s += wj * d * d;
        }
        total += s;
    }
    Ok(grid.h_x() * total)
}
