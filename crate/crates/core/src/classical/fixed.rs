//! Fixed-point reference solvers.
//!
//! These run the same word-level kernels the quantum pipelines execute
//! branch by branch, so their iterates are bit-identical to the decoded
//! quantum registers: pure integer arithmetic, reproducible across
//! platforms. Coarse right-hand sides are stored as dx^2-scaled residual
//! words; descending one level multiplies the stored word by 4 (exact),
//! which keeps every level's scaling a power of two.

use crate::classical::problem::{GridProblem, Side, VCycleConfig};
use crate::encoding::{
    halve_pair_raw, jacobi_raw, residual_scaled_raw, restrict_raw, rhs_scaled_raw, DataWord,
    FixedPointFormat,
};
use crate::error::{Error, Result};

/// Cap on stationarity iterations in the fixed-point coarse solve.
pub const COARSE_SWEEP_CAP: u32 = 64;

pub fn ghost_words(problem: &GridProblem, fmt: &FixedPointFormat) -> Result<(DataWord, DataWord)> {
    Ok((fmt.encode(problem.ghost(Side::Left))?, fmt.encode(problem.ghost(Side::Right))?))
}

/// Quantizes the top-level right-hand side once: raw(f(i) * dx^2).
pub fn rhs_scaled_table(problem: &GridProblem, fmt: &FixedPointFormat) -> Result<Vec<i64>> {
    (0..problem.size()).map(|i| rhs_scaled_raw(problem.rhs_at(i), problem.dx2(), fmt)).collect()
}

/// One undamped Jacobi sweep on words.
pub fn jacobi_sweep_words(
    rhs_scaled: &[i64],
    u: &[DataWord],
    ghosts: (DataWord, DataWord),
    fmt: &FixedPointFormat,
) -> Result<Vec<DataWord>> {
    let n = u.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { ghosts.0.raw() } else { u[i - 1].raw() };
        let right = if i == n - 1 { ghosts.1.raw() } else { u[i + 1].raw() };
        out.push(fmt.word_from_raw(jacobi_raw(left, right, rhs_scaled[i]))?);
    }
    Ok(out)
}

/// One Jacobi sweep of the problem itself (top-level RHS oracle).
pub fn jacobi_step_fixed(
    problem: &GridProblem,
    u: &[DataWord],
    fmt: &FixedPointFormat,
) -> Result<Vec<DataWord>> {
    jacobi_sweep_words(&rhs_scaled_table(problem, fmt)?, u, ghost_words(problem, fmt)?, fmt)
}

/// The first `sweeps` Jacobi iterates, starting after the guess.
pub fn jacobi_iterates_fixed(
    problem: &GridProblem,
    guess: &[DataWord],
    sweeps: u32,
    fmt: &FixedPointFormat,
) -> Result<Vec<Vec<DataWord>>> {
    let rhs = rhs_scaled_table(problem, fmt)?;
    let ghosts = ghost_words(problem, fmt)?;
    let mut u = guess.to_vec();
    let mut out = Vec::with_capacity(sweeps as usize);
    for _ in 0..sweeps {
        u = jacobi_sweep_words(&rhs, &u, ghosts, fmt)?;
        out.push(u.clone());
    }
    Ok(out)
}

/// dx^2-scaled residual words: rhs_scaled - left - right + 2*center.
pub fn residual_scaled_words(
    rhs_scaled: &[i64],
    u: &[DataWord],
    ghosts: (DataWord, DataWord),
    fmt: &FixedPointFormat,
) -> Result<Vec<DataWord>> {
    let n = u.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { ghosts.0.raw() } else { u[i - 1].raw() };
        let right = if i == n - 1 { ghosts.1.raw() } else { u[i + 1].raw() };
        out.push(fmt.word_from_raw(residual_scaled_raw(u[i].raw(), left, right, rhs_scaled[i]))?);
    }
    Ok(out)
}

/// Full-weighting restriction on words (zero ghost on the boundary leg).
pub fn restrict_words(fine: &[DataWord], fmt: &FixedPointFormat) -> Result<Vec<DataWord>> {
    if fine.len() % 2 != 0 || fine.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "restriction needs an even fine length >= 4, got {}",
            fine.len()
        )));
    }
    let nc = fine.len() / 2;
    let mut out = Vec::with_capacity(nc);
    for j in 0..nc {
        let left = if j == 0 { 0 } else { fine[2 * j - 1].raw() };
        out.push(fmt.word_from_raw(restrict_raw(left, fine[2 * j].raw(), fine[2 * j + 1].raw()))?);
    }
    Ok(out)
}

/// Interpolates a coarse correction and adds it to the fine solution.
pub fn interpolate_and_correct_words(
    u: &mut [DataWord],
    e_coarse: &[DataWord],
    fmt: &FixedPointFormat,
) -> Result<()> {
    let nc = e_coarse.len();
    debug_assert_eq!(u.len(), 2 * nc);
    for j in 0..nc {
        u[2 * j] = fmt.word_from_raw(u[2 * j].raw() + e_coarse[j].raw())?;
        let right = if j + 1 < nc { e_coarse[j + 1].raw() } else { 0 };
        let mid = halve_pair_raw(e_coarse[j].raw(), right);
        u[2 * j + 1] = fmt.word_from_raw(u[2 * j + 1].raw() + mid)?;
    }
    Ok(())
}

/// Smooths until the word vector is stationary (identical between
/// consecutive sweeps). Returns the iterate and the number of sweeps taken.
pub fn coarse_solve_fixed(
    rhs_scaled: &[i64],
    u0: &[DataWord],
    ghosts: (DataWord, DataWord),
    fmt: &FixedPointFormat,
) -> Result<(Vec<DataWord>, u32)> {
    let mut u = u0.to_vec();
    for sweep in 1..=COARSE_SWEEP_CAP {
        let next = jacobi_sweep_words(rhs_scaled, &u, ghosts, fmt)?;
        if next == u {
            return Ok((u, sweep - 1));
        }
        u = next;
    }
    Err(Error::Integrity(format!(
        "fixed-point coarse solve not stationary after {COARSE_SWEEP_CAP} sweeps"
    )))
}

/// One fixed-point V-cycle; undamped smoothing throughout.
pub fn v_cycle_fixed(
    problem: &GridProblem,
    u: &[DataWord],
    config: &VCycleConfig,
    fmt: &FixedPointFormat,
) -> Result<Vec<DataWord>> {
    config.validate_for(problem.n)?;
    let rhs = rhs_scaled_table(problem, fmt)?;
    let ghosts = ghost_words(problem, fmt)?;
    v_cycle_fixed_level(problem.n, &rhs, ghosts, u, config, fmt)
}

fn v_cycle_fixed_level(
    level_n: u32,
    rhs_scaled: &[i64],
    ghosts: (DataWord, DataWord),
    u0: &[DataWord],
    config: &VCycleConfig,
    fmt: &FixedPointFormat,
) -> Result<Vec<DataWord>> {
    if level_n == config.i_min {
        return Ok(coarse_solve_fixed(rhs_scaled, u0, ghosts, fmt)?.0);
    }
    let mut u = u0.to_vec();
    for _ in 0..config.s0 {
        u = jacobi_sweep_words(rhs_scaled, &u, ghosts, fmt)?;
    }
    let r = residual_scaled_words(rhs_scaled, &u, ghosts, fmt)?;
    let rc = restrict_words(&r, fmt)?;
    // Stored coarse word w represents the coarse RHS times the coarse dx^2
    // after one exact shift: dx_c^2 / dx_f^2 = 4.
    let coarse_rhs: Vec<i64> = rc.iter().map(|w| w.raw() << 2).collect();
    let zeros = vec![fmt.zero(); rc.len()];
    let e = v_cycle_fixed_level(
        level_n - 1,
        &coarse_rhs,
        (fmt.zero(), fmt.zero()),
        &zeros,
        config,
        fmt,
    )?;
    interpolate_and_correct_words(&mut u, &e, fmt)?;
    for _ in 0..config.s1 {
        u = jacobi_sweep_words(rhs_scaled, &u, ghosts, fmt)?;
    }
    Ok(u)
}
