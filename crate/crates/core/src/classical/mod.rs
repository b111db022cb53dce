//! Classical reference solvers in real and fixed-point arithmetic.
//!
//! The fixed-point functions are the bit-exact oracles for the quantum
//! pipelines; the real functions provide the convergence baselines.

pub mod fixed;
pub mod problem;
pub mod real;
pub mod spectrum;

pub use problem::{GridProblem, Rhs, Side, SolutionVector, VCycleConfig};
pub use spectrum::{compressibility_probe, ProbeReport};

/// R^2 of the least-squares line through (xs, ys).
pub fn fit_r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    let b = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let pred = my + b * (x - mx);
            (y - pred) * (y - pred)
        })
        .sum();
    1.0 - ss_res / syy
}
