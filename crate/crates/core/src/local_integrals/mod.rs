//! Local height integrals, Euler products and the predicted leading constant
//! for PGL_n over ℚ.

pub mod arch;
pub mod cells;
pub mod constant;
pub mod euler;
pub mod series;

pub use arch::{arch_integral, QuadratureSpec};
pub use cells::cell_volume;
pub use constant::{predicted_constant, ConstantOptions, ConstantReport, ARCH_NORMALIZATION};
pub use euler::{euler_product, zeta, zeta_s, EulerProduct};
pub use series::{local_factor_closed, local_series, LocalFactor};
