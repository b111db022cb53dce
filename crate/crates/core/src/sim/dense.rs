//! Brute-force dense state-vector simulator.
//!
//! Used as the independent oracle for the sparse simulator on small widths:
//! it stores all 2^w amplitudes and applies operations by direct matrix
//! action, sharing no code with the sparse path beyond the op descriptions
//! themselves.

use crate::error::{Error, Result};
use crate::sim::label::{BasisLabel, Span};
use crate::sim::layout::RegisterLayout;
use crate::sim::state::{LiveOp, Op, SparseState};
use num_complex::Complex64;

pub const DENSE_WIDTH_CAP: usize = 22;

#[derive(Clone)]
pub struct DenseState {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn zero(layout: RegisterLayout) -> Result<Self> {
        let w = layout.total_width();
        if w > DENSE_WIDTH_CAP {
            return Err(Error::Capacity { requested: w, cap: DENSE_WIDTH_CAP });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << w];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    pub fn from_sparse(state: &SparseState) -> Result<Self> {
        let mut dense = Self::zero(state.layout().clone())?;
        dense.amps[0] = Complex64::new(0.0, 0.0);
        let width = state.layout().total_width();
        for (label, amp) in state.branches() {
            dense.amps[label.field(Span::new(0, width)) as usize] = *amp;
        }
        Ok(dense)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    fn label_of(&self, idx: usize) -> BasisLabel {
        let mut l = BasisLabel::from(idx as u64);
        l.extend_limbs(self.layout.limb_count());
        l
    }

    pub fn apply_qubit_unitary(&mut self, qubit: usize, m: &[Complex64; 4]) {
        let mask = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | mask];
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[i | mask] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    pub fn apply_register_unitary(&mut self, span: Span, matrix: &[Complex64], inverse: bool) {
        let dim = 1usize << span.width;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let x = (i >> span.offset) & (dim - 1);
            let base = i & !((dim - 1) << span.offset);
            for y in 0..dim {
                let c = if inverse { matrix[x * dim + y].conj() } else { matrix[y * dim + x] };
                out[base | (y << span.offset)] += c * amp;
            }
        }
        self.amps = out;
    }

    pub fn apply_op(&mut self, op: &Op, inverse: bool) {
        match op {
            Op::Qubit { qubit, matrix } => {
                let m = if inverse {
                    [matrix[0].conj(), matrix[2].conj(), matrix[1].conj(), matrix[3].conj()]
                } else {
                    *matrix
                };
                self.apply_qubit_unitary(*qubit, &m);
            }
            Op::RegisterUnitary { span, matrix } => {
                self.apply_register_unitary(*span, matrix, inverse);
            }
            Op::Branch(f) => {
                let width = self.layout.total_width();
                let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
                for (i, amp) in self.amps.iter().enumerate() {
                    if amp.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut label = self.label_of(i);
                    if inverse {
                        f.backward(&mut label, &self.layout);
                    } else {
                        f.forward(&mut label, &self.layout);
                    }
                    out[label.field(Span::new(0, width)) as usize] += amp;
                }
                self.amps = out;
            }
            Op::Phase(p) => {
                for i in 0..self.amps.len() {
                    if p.flips(&self.label_of(i), &self.layout) {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
        }
    }

    /// Replays a trace recorded from the sparse simulator.
    pub fn apply_live(&mut self, ops: &[LiveOp]) {
        for op in ops {
            match op {
                LiveOp::Op { op, inverse } => self.apply_op(op, *inverse),
                LiveOp::GlobalPhase(c) => {
                    for a in self.amps.iter_mut() {
                        *a *= c;
                    }
                }
                LiveOp::Controlled { controls, ops } => {
                    let mask: usize = controls.iter().map(|&c| 1usize << c).sum();
                    let mut sub = self.clone();
                    for (i, a) in sub.amps.iter_mut().enumerate() {
                        if i & mask != mask {
                            *a = Complex64::new(0.0, 0.0);
                        }
                    }
                    sub.apply_live(ops);
                    for i in 0..self.amps.len() {
                        if i & mask == mask {
                            self.amps[i] = sub.amps[i];
                        }
                    }
                }
            }
        }
    }

    pub fn register_distribution(&self, span: Span) -> Vec<(u64, f64)> {
        let mut acc = std::collections::BTreeMap::new();
        for (i, amp) in self.amps.iter().enumerate() {
            let v = ((i >> span.offset) as u64) & ((1u64 << span.width) - 1);
            *acc.entry(v).or_insert(0.0) += amp.norm_sqr();
        }
        acc.into_iter().collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Largest per-amplitude deviation from a sparse state.
    pub fn max_deviation(&self, state: &SparseState) -> Result<f64> {
        if state.layout() != &self.layout {
            return Err(Error::LayoutMismatch("dense/sparse layouts differ".into()));
        }
        let width = self.layout.total_width();
        let mut dense_from_sparse = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (label, amp) in state.branches() {
            dense_from_sparse[label.field(Span::new(0, width)) as usize] = *amp;
        }
        Ok(self
            .amps
            .iter()
            .zip(dense_from_sparse.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}
