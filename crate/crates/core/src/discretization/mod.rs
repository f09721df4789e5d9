//! Cell-centred finite-volume mesh, fields and discrete operators.

mod field;
mod grid;
mod operators;
mod solve;

pub use field::{FaceFluxes, Field};
pub use grid::Grid;
pub use operators::{
    face_gradient, haptotactic_divergence, integrate, integrate_grad_dot, integrate_grad_sq,
    integrate_grad_sq_over, integrate_map, integrate_weighted_grad_dot,
    integrate_weighted_grad_sq_over, laplacian_apply, pairwise_sum, upwind_divergence,
    QuotientIntegral,
};
pub use solve::{implicit_diffusion, SolveStats, CG_TOLERANCE};
