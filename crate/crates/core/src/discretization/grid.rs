use crate::error::{Error, Result};

/// Uniform cell-centred mesh of an axis-aligned box in one or two dimensions.
///
/// Cells are stored row-major with `x` fastest: cell `(i, j)` lives at
/// `j * nx + i`. All boundaries are zero-flux.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    lengths: [f64; 2],
    spacing: [f64; 2],
}

impl Grid {
    pub fn line(nx: usize, lx: f64) -> Result<Self> {
        Self::new(&[nx], &[lx])
    }

    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn new(cells: &[usize], lengths: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if !(dim == 1 || dim == 2) || lengths.len() != dim {
            return Err(Error::validation(
                "grid",
                format!(
                    "dimension must be 1 or 2 with one length per axis (got {} cell counts, {} lengths)",
                    cells.len(),
                    lengths.len()
                ),
            ));
        }
        let mut g = Grid {
            dim,
            cells: [1, 1],
            lengths: [1.0, 1.0],
            spacing: [1.0, 1.0],
        };
        for axis in 0..dim {
            if cells[axis] < 3 {
                return Err(Error::validation(
                    format!("grid axis {axis}"),
                    format!("needs at least 3 cells, got {}", cells[axis]),
                ));
            }
            if !(lengths[axis].is_finite() && lengths[axis] > 0.0) {
                return Err(Error::validation(
                    format!("grid axis {axis}"),
                    format!("length must be finite and positive, got {}", lengths[axis]),
                ));
            }
            g.cells[axis] = cells[axis];
            g.lengths[axis] = lengths[axis];
            g.spacing[axis] = lengths[axis] / cells[axis] as f64;
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell counts of the active axes.
    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    /// Cells along `y`; 1 on a 1D grid.
    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    pub fn hx(&self) -> f64 {
        self.spacing[0]
    }

    /// Spacing along `y`; 1 on a 1D grid so products stay meaningful.
    pub fn hy(&self) -> f64 {
        self.spacing[1]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn domain_volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    /// Centre of cell `idx`; the `y` coordinate is 0 on a 1D grid.
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let i = idx % self.cells[0];
        let j = idx / self.cells[0];
        let x = (i as f64 + 0.5) * self.spacing[0];
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.spacing[1]
        } else {
            0.0
        };
        (x, y)
    }

    /// Number of interior faces normal to `x` and to `y`.
    pub fn face_counts(&self) -> (usize, usize) {
        let nx = self.cells[0];
        let ny = self.cells[1];
        let y_faces = if self.dim == 2 { nx * (ny - 1) } else { 0 };
        ((nx - 1) * ny, y_faces)
    }
}
