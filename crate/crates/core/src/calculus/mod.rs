//! The contour-quadrature functional calculi and the diagnostics built on
//! them.

mod dyadic;
mod hinfty;
mod joint;
mod scalar;

pub use dyadic::{
    best_real_signs, default_t_grid, dyadic_decomposition, dyadic_reconstruction, dyadic_tail_bound, hinfty_criterion, unconditional_dyadic_bound,
    BoundMode, DyadicSums,
};
pub use hinfty::{hinfty_constant, TestFamily};
pub use joint::{check_commuting, joint_fcalc, JointOptions, JointResult};
pub(crate) use scalar::{scalar_tail, AltdefNodes};
pub use scalar::{contour_fcalc, operator_fcalc, regularized_fcalc, FcalcResult, RegularizedResult, TracePoint};
