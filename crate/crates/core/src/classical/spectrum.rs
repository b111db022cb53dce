//! Fourier compressibility probe.
//!
//! Smooth solutions compress well under lossy spectral truncation; this
//! probe reconstructs a solution vector from its m largest-magnitude DFT
//! bins and reports the max pointwise error as m grows.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub retained: usize,
    /// Max |reconstruction - original| with `retained` bins kept.
    pub max_error: f64,
    /// Error for every retained-bin count 0..=N, in selection order.
    pub curve: Vec<f64>,
}

/// Reconstructs `values` from its `retained` largest-magnitude Fourier
/// modes. Bins are selected by magnitude (descending), ties broken by bin
/// index, and partial reconstructions take the real part.
pub fn compressibility_probe(values: &[f64], retained: usize) -> Result<ProbeReport> {
    let n = values.len();
    if retained > n {
        return Err(Error::InvalidArgument(format!("retained {retained} exceeds N = {n}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty solution vector".into()));
    }
    let mut spectrum: Vec<Complex64> =
        values.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        spectrum[b]
            .norm()
            .partial_cmp(&spectrum[a].norm())
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut recon = vec![Complex64::new(0.0, 0.0); n];
    let mut curve = Vec::with_capacity(n + 1);
    let max_err = |recon: &[Complex64]| {
        values
            .iter()
            .zip(recon)
            .map(|(x, r)| (x - r.re).abs())
            .fold(0.0, f64::max)
    };
    curve.push(max_err(&recon));
    for (m, &k) in order.iter().enumerate() {
        let coeff = spectrum[k] / n as f64;
        for (t, r) in recon.iter_mut().enumerate() {
            let angle = 2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
            *r += coeff * Complex64::new(angle.cos(), angle.sin());
        }
        curve.push(max_err(&recon));
        let _ = m;
    }
    Ok(ProbeReport { retained, max_error: curve[retained], curve })
}
