//! Uniform cell-centered tensor grids on `[-1, 1]^dim`.
//!
//! Cells are stored in row-major order (axis 0 slowest). Face-normal data is
//! stored per axis with one entry per cell: entry `k` on axis `a` is the face
//! on the upper side of cell `k` along `a`. Under [`Boundary::Periodic`] the
//! upper face of the last cell in a line is the wrap face shared with the
//! first cell. Under [`Boundary::NoFlux`] it is the upper wall; the lower wall
//! is not stored and carries zero flux.

use crate::error::{Error, Result};

/// Lower corner of the domain in every dimension.
pub const DOMAIN_LO: f64 = -1.0;
/// Edge length of the domain in every dimension.
pub const DOMAIN_LEN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    NoFlux,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::NoFlux => "noflux",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "noflux" | "no-flux" | "no_flux" => Ok(Boundary::NoFlux),
            other => Err(Error::InvalidGrid(format!("unknown boundary '{other}'"))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Uniform grid with `n` cells per dimension and spacing `h = 2 / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorGrid {
    dim: usize,
    n: usize,
    h: f64,
    boundary: Boundary,
}

impl TensorGrid {
    pub fn new(dim: usize, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per dimension, got {n_cells}"
            )));
        }
        Ok(Self {
            dim,
            n: n_cells,
            h: DOMAIN_LEN / n_cells as f64,
            boundary,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per dimension.
    #[inline]
    pub fn cells_per_dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self { boundary, ..*self }
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// `h^dim`, the quadrature weight of one cell.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Coordinate of the `i`-th cell center along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        DOMAIN_LO + (i as f64 + 0.5) * self.h
    }

    /// Coordinate of the upper face of the `i`-th cell along any axis.
    #[inline]
    pub fn face_coord(&self, i: usize) -> f64 {
        DOMAIN_LO + (i as f64 + 1.0) * self.h
    }

    /// Position of `axis` index of a flat cell index.
    #[inline]
    pub fn axis_index(&self, cell: usize, axis: usize) -> usize {
        (cell / self.stride(axis)) % self.n
    }

    pub fn multi_index(&self, cell: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for (axis, slot) in out.iter_mut().enumerate().take(self.dim) {
            *slot = self.axis_index(cell, axis);
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .take(self.dim)
            .enumerate()
            .map(|(axis, &i)| i * self.stride(axis))
            .sum()
    }

    /// Cell center; entries past `dim` are zero.
    pub fn center(&self, cell: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (axis, slot) in x.iter_mut().enumerate().take(self.dim) {
            *slot = self.coord(self.axis_index(cell, axis));
        }
        x
    }

    /// Center of the upper face of `cell` along `axis`.
    pub fn face_center(&self, cell: usize, axis: usize) -> [f64; 3] {
        let mut x = self.center(cell);
        x[axis] = self.face_coord(self.axis_index(cell, axis));
        x
    }

    /// Neighbor across the upper face along `axis`, `None` at a no-flux wall.
    #[inline]
    pub fn upper_neighbor(&self, cell: usize, axis: usize) -> Option<usize> {
        let i = self.axis_index(cell, axis);
        let s = self.stride(axis);
        if i + 1 < self.n {
            Some(cell + s)
        } else {
            match self.boundary {
                Boundary::Periodic => Some(cell + s - self.n * s),
                Boundary::NoFlux => None,
            }
        }
    }

    /// Neighbor across the lower face along `axis`, `None` at a no-flux wall.
    #[inline]
    pub fn lower_neighbor(&self, cell: usize, axis: usize) -> Option<usize> {
        let i = self.axis_index(cell, axis);
        let s = self.stride(axis);
        if i > 0 {
            Some(cell - s)
        } else {
            match self.boundary {
                Boundary::Periodic => Some(cell + (self.n - 1) * s),
                Boundary::NoFlux => None,
            }
        }
    }

    /// True when the upper face of `cell` along `axis` is a no-flux wall.
    #[inline]
    pub fn is_wall_face(&self, cell: usize, axis: usize) -> bool {
        self.boundary == Boundary::NoFlux && self.axis_index(cell, axis) + 1 == self.n
    }
}

/// Cell-average values of a scalar quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TensorGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TensorGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value in cell {cell}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TensorGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_cells()],
        }
    }

    /// Midpoint discretization of `g` (evaluated at cell centers).
    pub fn from_fn(grid: TensorGrid, mut g: impl FnMut(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.n_cells())
            .map(|c| g(&grid.center(c)[..dim]))
            .collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| g(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Fails with [`Error::NonPositive`] on the first cell `<= 0`.
    pub fn check_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(cell) => Err(Error::NonPositive {
                cell,
                value: self.values[cell],
            }),
            None => Ok(()),
        }
    }
}

/// Face-normal values, one array per axis (see the module docs for layout).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: TensorGrid,
    components: Vec<Vec<f64>>,
}

impl FaceField {
    pub fn zeros(grid: TensorGrid) -> Self {
        Self {
            grid,
            components: vec![vec![0.0; grid.n_cells()]; grid.dim()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    #[inline]
    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    #[inline]
    pub fn axis_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.components[axis]
    }

    /// Value on the lower face of `cell` along `axis` (zero at a no-flux wall).
    #[inline]
    pub fn lower(&self, cell: usize, axis: usize) -> f64 {
        match self.grid.lower_neighbor(cell, axis) {
            Some(nb) => self.components[axis][nb],
            None => 0.0,
        }
    }

    /// Value on the upper face of `cell` along `axis`.
    #[inline]
    pub fn upper(&self, cell: usize, axis: usize) -> f64 {
        self.components[axis][cell]
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Discrete divergence `sum_axes (upper - lower) / h`.
    pub fn divergence(&self) -> ScalarField {
        let h = self.grid.spacing();
        let mut out = vec![0.0; self.grid.n_cells()];
        for axis in 0..self.grid.dim() {
            for (cell, slot) in out.iter_mut().enumerate() {
                *slot += (self.upper(cell, axis) - self.lower(cell, axis)) / h;
            }
        }
        ScalarField {
            grid: self.grid,
            values: out,
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.components.iter_mut().flatten() {
            *v *= factor;
        }
    }
}

/// `h^dim * sum(values)`.
pub fn integrate(field: &ScalarField) -> f64 {
    field.grid.cell_volume() * field.values.iter().sum::<f64>()
}

/// Two-point difference `(right - left) / h` on every face. No-flux walls get 0.
pub fn face_gradient(field: &ScalarField) -> FaceField {
    let grid = field.grid;
    let h = grid.spacing();
    let mut out = FaceField::zeros(grid);
    for axis in 0..grid.dim() {
        let comp = out.axis_mut(axis);
        for (cell, slot) in comp.iter_mut().enumerate() {
            if let Some(nb) = grid.upper_neighbor(cell, axis) {
                *slot = (field.values[nb] - field.values[cell]) / h;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn build_grid_examples() {
        let g = TensorGrid::new(1, 200, Boundary::Periodic).unwrap();
        assert_eq!(g.n_cells(), 200);
        assert_relative_eq!(g.spacing(), 0.01, max_relative = 1e-15);

        let g = TensorGrid::new(2, 2, Boundary::Periodic).unwrap();
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.spacing(), 1.0);

        let g = TensorGrid::new(3, 20, Boundary::NoFlux).unwrap();
        assert_eq!(g.n_cells(), 8000);
        assert_relative_eq!(g.spacing(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(g.spacing() * 20.0, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        assert!(TensorGrid::new(0, 10, Boundary::Periodic).is_err());
        assert!(TensorGrid::new(4, 10, Boundary::Periodic).is_err());
        assert!(TensorGrid::new(1, 1, Boundary::NoFlux).is_err());
    }

    #[test]
    fn centers_and_indexing() {
        let g = TensorGrid::new(3, 4, Boundary::Periodic).unwrap();
        assert_eq!(g.coord(0), -0.75);
        assert_eq!(g.coord(3), 0.75);
        for cell in 0..g.n_cells() {
            let m = g.multi_index(cell);
            assert_eq!(g.flat_index(&m[..3]), cell);
        }
        // wrap neighbors are mutual
        for cell in 0..g.n_cells() {
            for axis in 0..3 {
                let up = g.upper_neighbor(cell, axis).unwrap();
                assert_eq!(g.lower_neighbor(up, axis), Some(cell));
            }
        }
    }

    #[test]
    fn integrate_examples() {
        let g = TensorGrid::new(1, 10, Boundary::Periodic).unwrap();
        assert_relative_eq!(integrate(&ScalarField::constant(g, 0.5)), 1.0, max_relative = 1e-15);
        let g = TensorGrid::new(2, 4, Boundary::NoFlux).unwrap();
        assert_relative_eq!(integrate(&ScalarField::constant(g, 1.0)), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn face_gradient_examples() {
        let g = TensorGrid::new(1, 4, Boundary::Periodic).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        let grad = face_gradient(&f);
        for k in 0..3 {
            assert_relative_eq!(grad.axis(0)[k], 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(grad.axis(0)[3], -3.0, max_relative = 1e-14);

        let g = g.with_boundary(Boundary::NoFlux);
        let f = ScalarField::from_fn(g, |x| x[0]);
        let grad = face_gradient(&f);
        assert_eq!(grad.axis(0)[3], 0.0);
        assert_eq!(grad.lower(0, 0), 0.0);
        assert_relative_eq!(grad.axis(0)[1], 1.0, max_relative = 1e-14);

        let f = ScalarField::constant(TensorGrid::new(3, 5, Boundary::Periodic).unwrap(), 2.5);
        assert_eq!(face_gradient(&f).max_abs(), 0.0);
    }

    #[test]
    fn face_gradient_converges_first_order() {
        let err = |n: usize| {
            let g = TensorGrid::new(1, n, Boundary::Periodic).unwrap();
            let f = ScalarField::from_fn(g, |x| (std::f64::consts::PI * x[0]).sin());
            let grad = face_gradient(&f);
            (0..n)
                .map(|c| {
                    let xf = g.face_center(c, 0)[0];
                    (grad.axis(0)[c] - std::f64::consts::PI * (std::f64::consts::PI * xf).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        // two-point differences at face centers are at least first order
        assert!(e2 <= 0.55 * e1, "e1={e1} e2={e2}");
    }
}
