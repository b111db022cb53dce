//! Real-arithmetic reference solvers: Jacobi smoothing, grid transfer,
//! Thomas direct solve, and the multigrid V-cycle.

use crate::classical::problem::{GridProblem, Rhs, Side, VCycleConfig};
use crate::error::{Error, Result};
use std::sync::Arc;

/// One undamped Jacobi sweep: u_i' = (u_{i-1} + u_{i+1} - f_i dx^2) / 2,
/// endpoints closed with the boundary oracle's ghost values.
pub fn jacobi_step(problem: &GridProblem, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    debug_assert_eq!(n as u64, problem.size());
    let dx2 = problem.dx2();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let left = if i == 0 { problem.ghost(Side::Left) } else { u[i - 1] };
        let right = if i == n - 1 { problem.ghost(Side::Right) } else { u[i + 1] };
        out[i] = (left + right - problem.rhs_at(i as u64) * dx2) / 2.0;
    }
    out
}

/// Damped sweep: (1 - omega) u + omega * jacobi_step(u).
pub fn weighted_jacobi_step(problem: &GridProblem, u: &[f64], omega: f64) -> Vec<f64> {
    let swept = jacobi_step(problem, u);
    u.iter().zip(swept).map(|(old, new)| (1.0 - omega) * old + omega * new).collect()
}

/// r = f - A u with ghost-value closure.
pub fn residual(problem: &GridProblem, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let dx2 = problem.dx2();
    let mut r = vec![0.0; n];
    for i in 0..n {
        let left = if i == 0 { problem.ghost(Side::Left) } else { u[i - 1] };
        let right = if i == n - 1 { problem.ghost(Side::Right) } else { u[i + 1] };
        r[i] = problem.rhs_at(i as u64) - (left - 2.0 * u[i] + right) / dx2;
    }
    r
}

/// Full-weighting restriction: coarse_j = (f_{2j-1} + 2 f_{2j} + f_{2j+1})/4.
/// Grid-transfer operators act on residual/correction vectors, whose ghost
/// values vanish, so the boundary leg uses 0.
pub fn restrict(fine: &[f64]) -> Result<Vec<f64>> {
    if fine.len() % 2 != 0 || fine.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "restriction needs an even fine length >= 4, got {}",
            fine.len()
        )));
    }
    let nc = fine.len() / 2;
    let mut coarse = vec![0.0; nc];
    for (j, c) in coarse.iter_mut().enumerate() {
        let left = if j == 0 { 0.0 } else { fine[2 * j - 1] };
        *c = (left + 2.0 * fine[2 * j] + fine[2 * j + 1]) / 4.0;
    }
    Ok(coarse)
}

/// Linear interpolation: even points copy, odd points average (ghost 0 past
/// the last coarse point).
pub fn interpolate(coarse: &[f64]) -> Result<Vec<f64>> {
    if coarse.len() < 2 {
        return Err(Error::InvalidArgument("interpolation needs >= 2 coarse points".into()));
    }
    let nc = coarse.len();
    let mut fine = vec![0.0; 2 * nc];
    for j in 0..nc {
        fine[2 * j] = coarse[j];
        let right = if j + 1 < nc { coarse[j + 1] } else { 0.0 };
        fine[2 * j + 1] = (coarse[j] + right) / 2.0;
    }
    Ok(fine)
}

/// Direct tridiagonal solve of A u = f (Thomas elimination), boundary data
/// folded into the right-hand side.
pub fn exact_coarse_solve(problem: &GridProblem) -> Result<Vec<f64>> {
    let n = problem.size() as usize;
    if n > 64 {
        return Err(Error::InvalidArgument(format!("direct solve limited to N <= 64, got {n}")));
    }
    let dx2 = problem.dx2();
    let mut diag = vec![-2.0 / dx2; n];
    let off = 1.0 / dx2;
    let mut rhs: Vec<f64> = (0..n).map(|i| problem.rhs_at(i as u64)).collect();
    rhs[0] -= problem.ghost(Side::Left) / dx2;
    rhs[n - 1] -= problem.ghost(Side::Right) / dx2;
    for i in 1..n {
        let m = off / diag[i - 1];
        diag[i] -= m * off;
        rhs[i] -= m * rhs[i - 1];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] - off * u[i + 1]) / diag[i];
    }
    Ok(u)
}

/// One V-cycle: s0 damped sweeps, residual, restrict, recursive correction
/// solve from a zero guess, interpolate, correct, s1 damped sweeps.
pub fn v_cycle(problem: &GridProblem, u: &[f64], config: &VCycleConfig) -> Result<Vec<f64>> {
    config.validate_for(problem.n)?;
    if problem.n == config.i_min {
        return exact_coarse_solve(problem);
    }
    let mut u = u.to_vec();
    for _ in 0..config.s0 {
        u = weighted_jacobi_step(problem, &u, config.omega);
    }
    let r = residual(problem, &u);
    let rc = restrict(&r)?;
    let coarse = GridProblem {
        n: problem.n - 1,
        dx_log2: problem.dx_log2 + 1,
        rhs: Rhs::Table(Arc::new(rc)),
        boundary: (0.0, 0.0),
    };
    let zeros = vec![0.0; coarse.size() as usize];
    let e_coarse = v_cycle(&coarse, &zeros, config)?;
    let e_fine = interpolate(&e_coarse)?;
    for (ui, ei) in u.iter_mut().zip(e_fine) {
        *ui += ei;
    }
    for _ in 0..config.s1 {
        u = weighted_jacobi_step(problem, &u, config.omega);
    }
    Ok(u)
}

pub fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct CycleStats {
    pub cycle: u32,
    pub linf_residual: f64,
    pub l2_residual: f64,
    /// linf ratio against the previous cycle (first entry compares against
    /// the initial residual).
    pub contraction: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub cycles: u32,
    pub initial_linf: f64,
    pub history: Vec<CycleStats>,
    pub converged: bool,
}

/// Repeats V-cycles until the residual infinity norm drops below eps.
pub fn solve_to_tolerance(
    problem: &GridProblem,
    u0: &[f64],
    config: &VCycleConfig,
    eps: f64,
    cycle_cap: u32,
) -> Result<SolveReport> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let mut u = u0.to_vec();
    let r0 = residual(problem, &u);
    let initial_linf = linf(&r0);
    let mut history = Vec::new();
    let mut prev = initial_linf;
    let mut converged = initial_linf < eps;
    let mut cycles = 0;
    while !converged && cycles < cycle_cap {
        u = v_cycle(problem, &u, config)?;
        cycles += 1;
        let r = residual(problem, &u);
        let norm = linf(&r);
        history.push(CycleStats {
            cycle: cycles,
            linf_residual: norm,
            l2_residual: l2(&r),
            contraction: if prev > 0.0 { norm / prev } else { 0.0 },
        });
        prev = norm;
        converged = norm < eps;
    }
    Ok(SolveReport { solution: u, cycles, initial_linf, history, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rod(n: u32) -> GridProblem {
        GridProblem::new(n, 0, Rhs::Zero, (1.0, 1.0)).unwrap()
    }

    /// Dense A u with ghost closure, the independent matrix oracle.
    fn dense_apply(p: &GridProblem, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let dx2 = p.dx2();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = -2.0 * u[i];
            s += if i == 0 { p.ghost(Side::Left) } else { u[i - 1] };
            s += if i == n - 1 { p.ghost(Side::Right) } else { u[i + 1] };
            out[i] = s / dx2;
        }
        out
    }

    #[test]
    fn jacobi_first_sweep_on_rod() {
        let p = rod(2);
        let u1 = jacobi_step(&p, &[0.0; 4]);
        assert_eq!(u1, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn exact_solution_is_fixed_point() {
        let p = rod(2);
        let exact = vec![1.0, 1.0, 1.0, 1.0];
        let swept = jacobi_step(&p, &exact);
        for (a, b) in exact.iter().zip(swept) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn jacobi_matches_dense_iteration_matrix() {
        let p = GridProblem::new(3, 0, Rhs::Sine, (0.3, -0.2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // u' = u + D^{-1}(f - A u), D = -2/dx^2
        let au = dense_apply(&p, &u);
        let expect: Vec<f64> = (0..8)
            .map(|i| u[i] + (p.rhs_at(i as u64) - au[i]) * p.dx2() / -2.0)
            .collect();
        let got = jacobi_step(&p, &u);
        for (a, b) in expect.iter().zip(got) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_jacobi_limits() {
        let p = rod(2);
        let u = vec![0.2, -0.4, 0.6, 0.1];
        assert_eq!(weighted_jacobi_step(&p, &u, 0.0), u);
        let full = weighted_jacobi_step(&p, &u, 1.0);
        let plain = jacobi_step(&p, &u);
        for (a, b) in full.iter().zip(plain) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_jacobi_damps_highest_mode_by_its_eigenvalue() {
        // Error mode v_k(i) = sin((i+1) k pi / (N+1)) with zero ghosts;
        // eigenvalue of the damped sweep is 1 - omega (1 - cos(k pi/(N+1))).
        let n = 16usize;
        let p = GridProblem::new(4, 0, Rhs::Zero, (0.0, 0.0)).unwrap();
        let omega = 2.0 / 3.0;
        let k = n as f64;
        let theta = k * std::f64::consts::PI / (n as f64 + 1.0);
        let lambda = 1.0 - omega * (1.0 - theta.cos());
        assert!((lambda.abs() - 1.0 / 3.0).abs() < 0.05);
        let mode: Vec<f64> =
            (0..n).map(|i| ((i as f64 + 1.0) * theta).sin()).collect();
        let swept = weighted_jacobi_step(&p, &mode, omega);
        for (before, after) in mode.iter().zip(swept) {
            assert!((after - lambda * before).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_of_exact_solution_vanishes() {
        let p = rod(3);
        let u = exact_coarse_solve(&p).unwrap();
        assert!(linf(&residual(&p, &u)) < 1e-12);
    }

    #[test]
    fn residual_of_zero_guess_is_rhs_plus_boundary() {
        let p = GridProblem::new(2, 0, Rhs::Sine, (0.0, 0.0)).unwrap();
        let r = residual(&p, &[0.0; 4]);
        for i in 0..4 {
            assert!((r[i] - p.rhs_at(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_matches_dense_matvec() {
        let p = GridProblem::new(3, -1, Rhs::Sine, (0.7, 0.1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = dense_apply(&p, &u);
        let r = residual(&p, &u);
        for i in 0..8 {
            assert!((r[i] - (p.rhs_at(i as u64) - au[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_of_linear_data_keeps_coarse_values() {
        let fine: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let coarse = restrict(&fine).unwrap();
        for j in 1..4 {
            assert!((coarse[j] - 2.0 * j as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn restriction_spike_example() {
        let fine = vec![0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let coarse = restrict(&fine).unwrap();
        assert_eq!(coarse[1], 2.0);
    }

    #[test]
    fn restriction_preserves_interior_constants() {
        let coarse = restrict(&[3.0; 8]).unwrap();
        for c in &coarse[1..] {
            assert!((c - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn restriction_rejects_odd_length() {
        assert!(restrict(&[0.0; 5]).is_err());
    }

    #[test]
    fn interpolation_copies_and_averages() {
        let fine = interpolate(&[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(&fine[..5], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(fine[5], 2.0); // ghost 0 past the end
    }

    #[test]
    fn interpolation_preserves_constants() {
        let fine = interpolate(&[5.0; 4]).unwrap();
        for f in &fine[..7] {
            assert!((f - 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn restrict_after_interpolate_reproduces_affine_interior() {
        let coarse: Vec<f64> = (0..8).map(|j| 1.0 + 0.5 * j as f64).collect();
        let back = restrict(&interpolate(&coarse).unwrap()).unwrap();
        for j in 1..7 {
            assert!((back[j] - coarse[j]).abs() < 1e-14, "j={j}");
        }
    }

    #[test]
    fn thomas_on_two_points_matches_hand_elimination() {
        // -2u0 + u1 = f0 - gL ; u0 - 2u1 = f1 - gR  (dx = 1)
        let p = GridProblem::new(1, 0, Rhs::Table(Arc::new(vec![1.0, -2.0])), (0.5, -1.5)).unwrap();
        // By hand: b = (1 - 0.5, -2 + 1.5) = (0.5, -0.5);
        // u1 = (b1 - b0/(-2)) / (-2 - 1/(-2)*1) = (-0.5 + 0.25) / (-1.5) = 1/6
        // u0 = (b0 - u1)/(-2) = (0.5 - 1/6)/(-2) = -1/6
        let u = exact_coarse_solve(&p).unwrap();
        assert!((u[0] + 1.0 / 6.0).abs() < 1e-14);
        assert!((u[1] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn constant_solution_for_equal_dirichlet_ends() {
        let p = rod(2);
        let u = exact_coarse_solve(&p).unwrap();
        for x in u {
            assert!((x - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn direct_solve_residual_is_tiny() {
        let p = GridProblem::new(5, -2, Rhs::Sine, (0.2, 0.9)).unwrap();
        let u = exact_coarse_solve(&p).unwrap();
        assert!(linf(&residual(&p, &u)) < 1e-10 * linf(&u).max(1.0));
    }

    #[test]
    fn v_cycle_is_identity_on_the_exact_solution() {
        let p = rod(4);
        let exact = exact_coarse_solve(&p).unwrap();
        let cfg = VCycleConfig::new(2, 2, 1, 2.0 / 3.0).unwrap();
        let out = v_cycle(&p, &exact, &cfg).unwrap();
        for (a, b) in exact.iter().zip(out) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn v_cycle_contracts_residual() {
        let p = GridProblem::new(6, 0, Rhs::Zero, (0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u0: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = VCycleConfig::new(2, 2, 1, 2.0 / 3.0).unwrap();
        let before = linf(&residual(&p, &u0));
        let u1 = v_cycle(&p, &u0, &cfg).unwrap();
        let after = linf(&residual(&p, &u1));
        assert!(after <= 0.2 * before, "contraction {}", after / before);
    }

    #[test]
    fn v_cycle_equals_manual_composition() {
        let p = GridProblem::new(4, 0, Rhs::Sine, (0.1, 0.4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u0: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = VCycleConfig::new(1, 1, 3, 2.0 / 3.0).unwrap();
        // Manual: smooth, residual, restrict, coarse direct solve, interpolate,
        // correct, smooth. i_min = n-1 makes the recursion a direct solve.
        let mut u = weighted_jacobi_step(&p, &u0, cfg.omega);
        let rc = restrict(&residual(&p, &u)).unwrap();
        let coarse = GridProblem {
            n: 3,
            dx_log2: 1,
            rhs: Rhs::Table(Arc::new(rc)),
            boundary: (0.0, 0.0),
        };
        let e = interpolate(&exact_coarse_solve(&coarse).unwrap()).unwrap();
        for (ui, ei) in u.iter_mut().zip(e) {
            *ui += ei;
        }
        u = weighted_jacobi_step(&p, &u, cfg.omega);
        let auto = v_cycle(&p, &u0, &cfg).unwrap();
        for (a, b) in u.iter().zip(auto) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn solve_stops_immediately_when_already_converged() {
        let p = rod(4);
        let exact = exact_coarse_solve(&p).unwrap();
        let cfg = VCycleConfig::new(2, 2, 1, 2.0 / 3.0).unwrap();
        let report = solve_to_tolerance(&p, &exact, &cfg, 1e-6, 100).unwrap();
        assert_eq!(report.cycles, 0);
        assert!(report.converged);
    }

    #[test]
    fn cycle_count_is_consistent_with_measured_contraction() {
        let p = GridProblem::new(8, 0, Rhs::Zero, (0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u0: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = VCycleConfig::new(2, 2, 1, 2.0 / 3.0).unwrap();
        let eps = 1e-8;
        let report = solve_to_tolerance(&p, &u0, &cfg, eps, 100).unwrap();
        assert!(report.converged);
        let rho: f64 = report
            .history
            .iter()
            .map(|c| c.contraction)
            .fold(0.0, f64::max);
        let predicted = (report.initial_linf / eps).ln() / (1.0 / rho).ln();
        assert!((report.cycles as f64 - predicted).abs() <= 2.0 + 1.0);
    }

    #[test]
    fn cycle_counts_grow_affinely_in_log_accuracy() {
        let p = GridProblem::new(10, 0, Rhs::Zero, (0.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u0: Vec<f64> = (0..1024).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = VCycleConfig::new(2, 2, 1, 2.0 / 3.0).unwrap();
        let targets = [1e-4, 1e-8, 1e-12];
        let counts: Vec<f64> = targets
            .iter()
            .map(|eps| {
                solve_to_tolerance(&p, &u0, &cfg, *eps, 200).unwrap().cycles as f64
            })
            .collect();
        let xs: Vec<f64> = targets.iter().map(|e| (1.0 / e).ln()).collect();
        let r2 = super::super::fit_r_squared(&xs, &counts);
        assert!(r2 > 0.99, "R^2 = {r2}, counts {counts:?}");
    }
}
