use super::Grid;
use crate::error::{Error, Result};

/// One scalar per cell of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x, y)` at cell centres.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.center(idx);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
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

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate_finite(&self, name: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(cell) => Err(Error::NonFinite { field: name, cell }),
            None => Ok(()),
        }
    }

    pub fn validate_nonnegative(&self, name: &'static str) -> Result<()> {
        self.validate_finite(name)?;
        match self.values.iter().position(|&v| v < 0.0) {
            Some(cell) => Err(Error::validation(
                format!("{name} at cell {cell} = {}", self.values[cell]),
                "densities must be nonnegative",
            )),
            None => Ok(()),
        }
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `true` when every cell holds the same bits.
    pub fn is_uniform(&self) -> bool {
        let first = self.values[0].to_bits();
        self.values.iter().all(|v| v.to_bits() == first)
    }
}

/// Fluxes (or gradients) on interior faces. Boundary faces are not stored;
/// they carry zero flux.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFluxes {
    grid: Grid,
    /// Face between `(i, j)` and `(i+1, j)` at `j * (nx - 1) + i`.
    pub x: Vec<f64>,
    /// Face between `(i, j)` and `(i, j+1)` at `j * nx + i`; empty in 1D.
    pub y: Vec<f64>,
}

impl FaceFluxes {
    pub fn zeros(grid: Grid) -> Self {
        let (nxf, nyf) = grid.face_counts();
        Self {
            grid,
            x: vec![0.0; nxf],
            y: vec![0.0; nyf],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scale(&mut self, s: f64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|v| *v *= s);
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &FaceFluxes) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += s * b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}
