//! Numerical kernels: exact step-function integration, symmetric matrix
//! decompositions, chi-squared distribution functions and addressable
//! random streams.

mod chi2;
mod matrix;
mod rng;
mod step;

pub use chi2::{
    chi2_cdf, chi2_pdf, chi2_quantile, chi2_quantile_upper, chi2_sf, ln_gamma, regularized_gamma_p,
    regularized_gamma_q,
};
pub use matrix::{norm_inf, numeric_rank, pseudo_inverse, psd_sqrt, SymMatrix, DEFAULT_EIGEN_TOL};
pub use rng::{standard_normal_vector, RngStream};
pub use step::{integrate_step, StepFunction};

/// Map `f` over `0..count`, in parallel when the `parallel` feature is on.
/// Output order always follows the index order.
pub(crate) fn map_indices<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}
