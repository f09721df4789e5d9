//! Stencil operators and cell/face quadrature on a [`Grid`].

use super::{FaceFluxes, Field, Grid};
use crate::error::{Error, Result};

/// Visit every interior face as `(axis, face index, lower cell, upper cell)`.
#[inline]
pub(crate) fn for_each_face(grid: &Grid, mut f: impl FnMut(usize, usize, usize, usize)) {
    let nx = grid.nx();
    let ny = grid.ny();
    for j in 0..ny {
        for i in 0..nx - 1 {
            let k = grid.index(i, j);
            f(0, j * (nx - 1) + i, k, k + 1);
        }
    }
    if grid.dim() == 2 {
        for j in 0..ny - 1 {
            for i in 0..nx {
                let k = grid.index(i, j);
                f(1, j * nx + i, k, k + nx);
            }
        }
    }
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if v.len() <= BLOCK {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        s
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// 3-point (1D) / 5-point (2D) Laplacian with homogeneous Neumann closure.
///
/// Written in flux form so the result sums to zero over the domain up to
/// rounding.
pub fn laplacian_apply(u: &Field) -> Field {
    let grid = *u.grid();
    let vals = u.values();
    let mut out = vec![0.0; grid.len()];
    let inv = [1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy())];
    for_each_face(&grid, |axis, _, lo, hi| {
        let flux = (vals[hi] - vals[lo]) * inv[axis];
        out[lo] += flux;
        out[hi] -= flux;
    });
    Field::from_values(grid, out).expect("length matches grid")
}

/// Two-point difference quotient on every interior face.
pub fn face_gradient(w: &Field) -> FaceFluxes {
    let grid = *w.grid();
    let vals = w.values();
    let mut g = FaceFluxes::zeros(grid);
    let inv = [1.0 / grid.hx(), 1.0 / grid.hy()];
    for_each_face(&grid, |axis, f, lo, hi| {
        let d = (vals[hi] - vals[lo]) * inv[axis];
        if axis == 0 {
            g.x[f] = d;
        } else {
            g.y[f] = d;
        }
    });
    g
}

/// Divergence of the upwind flux `v · c_up` for a face velocity field `v`.
///
/// `c_up` is taken from the cell the velocity points away from. The result is
/// `+∇·(c v)`; a transport equation subtracts it.
pub fn upwind_divergence(c: &Field, velocity: &FaceFluxes) -> Result<Field> {
    if c.grid() != velocity.grid() {
        return Err(Error::Shape("density and velocity live on different grids".into()));
    }
    let grid = *c.grid();
    let vals = c.values();
    let inv = [1.0 / grid.hx(), 1.0 / grid.hy()];
    let mut out = vec![0.0; grid.len()];
    for_each_face(&grid, |axis, f, lo, hi| {
        let v = if axis == 0 { velocity.x[f] } else { velocity.y[f] };
        let flux = if v > 0.0 { v * vals[lo] } else { v * vals[hi] };
        out[lo] += flux * inv[axis];
        out[hi] -= flux * inv[axis];
    });
    Field::from_values(grid, out)
}

/// `+∇·(b c1 ∇w)` with first-order upwinding of `c1`.
pub fn haptotactic_divergence(c1: &Field, w: &Field, b: f64) -> Result<Field> {
    c1.check_same_grid(w)?;
    c1.validate_nonnegative("c1")?;
    w.validate_finite("cue")?;
    let mut v = face_gradient(w);
    v.scale(b);
    upwind_divergence(c1, &v)
}

/// Midpoint-rule integral `Σ u · |cell|` with a fixed summation order.
pub fn integrate(u: &Field) -> f64 {
    pairwise_sum(u.values()) * u.grid().cell_volume()
}

/// Integral of `g(u_k)` over cells.
pub fn integrate_map(u: &Field, g: impl Fn(f64) -> f64) -> f64 {
    let terms: Vec<f64> = u.values().iter().map(|&v| g(v)).collect();
    pairwise_sum(&terms) * u.grid().cell_volume()
}

/// A floored quotient integral and whether the floor was ever used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuotientIntegral {
    pub value: f64,
    pub floor_engaged: bool,
}

fn face_sum(grid: &Grid, mut term: impl FnMut(usize, usize, usize, usize) -> f64) -> f64 {
    let (nxf, nyf) = grid.face_counts();
    let mut terms = Vec::with_capacity(nxf + nyf);
    for_each_face(grid, |axis, f, lo, hi| terms.push(term(axis, f, lo, hi)));
    // Every face owns a dual cell of one cell volume.
    pairwise_sum(&terms) * grid.cell_volume()
}

/// `∫|∇u|²/u` by face quadrature: squared face difference quotients divided
/// by the face-averaged `u`, floored at `floor`.
pub fn integrate_grad_sq_over(u: &Field, floor: f64) -> Result<QuotientIntegral> {
    quotient(u, None, floor)
}

/// `∫(|∇u|²/u)·c` with `c` face-averaged; otherwise as [`integrate_grad_sq_over`].
pub fn integrate_weighted_grad_sq_over(u: &Field, weight: &Field, floor: f64) -> Result<QuotientIntegral> {
    u.check_same_grid(weight)?;
    weight.validate_nonnegative("weight")?;
    quotient(u, Some(weight), floor)
}

fn quotient(u: &Field, weight: Option<&Field>, floor: f64) -> Result<QuotientIntegral> {
    if !(floor > 0.0) {
        return Err(Error::Domain(format!("quotient floor must be positive, got {floor}")));
    }
    u.validate_nonnegative("quotient numerator")?;
    let grid = *u.grid();
    let vals = u.values();
    let inv = [1.0 / grid.hx(), 1.0 / grid.hy()];
    let mut engaged = false;
    let value = face_sum(&grid, |axis, _, lo, hi| {
        let d = (vals[hi] - vals[lo]) * inv[axis];
        let avg = 0.5 * (vals[lo] + vals[hi]);
        let denom = if avg < floor {
            engaged = true;
            floor
        } else {
            avg
        };
        let q = d * d / denom;
        match weight {
            Some(c) => q * 0.5 * (c.values()[lo] + c.values()[hi]),
            None => q,
        }
    });
    Ok(QuotientIntegral {
        value,
        floor_engaged: engaged,
    })
}

/// `∫|∇u|²` by face quadrature.
pub fn integrate_grad_sq(u: &Field) -> f64 {
    integrate_grad_dot(u, u).expect("same grid")
}

/// `∫∇u·∇v` by face quadrature. Summation by parts gives exactly
/// `-Σ laplacian_apply(u)·v·|cell|`.
pub fn integrate_grad_dot(u: &Field, v: &Field) -> Result<f64> {
    u.check_same_grid(v)?;
    let grid = *u.grid();
    let (a, b) = (u.values(), v.values());
    let inv = [1.0 / grid.hx(), 1.0 / grid.hy()];
    Ok(face_sum(&grid, |axis, _, lo, hi| {
        (a[hi] - a[lo]) * (b[hi] - b[lo]) * inv[axis] * inv[axis]
    }))
}

/// `∫c ∇u·∇v` with `c` face-averaged.
pub fn integrate_weighted_grad_dot(c: &Field, u: &Field, v: &Field) -> Result<f64> {
    c.check_same_grid(u)?;
    u.check_same_grid(v)?;
    let grid = *u.grid();
    let (w, a, b) = (c.values(), u.values(), v.values());
    let inv = [1.0 / grid.hx(), 1.0 / grid.hy()];
    Ok(face_sum(&grid, |axis, _, lo, hi| {
        0.5 * (w[lo] + w[hi]) * (a[hi] - a[lo]) * (b[hi] - b[lo]) * inv[axis] * inv[axis]
    }))
}
