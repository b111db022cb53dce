//! Sparse state vector over a register layout.
//!
//! Branches (basis terms) are kept in a vector sorted by label, so iteration
//! order is deterministic and runs are bit-reproducible. Reversible
//! arithmetic is applied as branch-level label rewrites; interference-bearing
//! steps (Hadamards, reflections, QFTs) are applied at amplitude level with
//! exact merging of colliding labels.

use crate::error::{Error, Result};
use crate::sim::counter::GateCounter;
use crate::sim::label::{BasisLabel, Span};
use crate::sim::layout::{RegisterId, RegisterLayout};
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

/// Norm must stay within this of its target after every operation.
pub const NORM_TOL: f64 = 1e-12;

/// Amplitudes with magnitude below this are dropped after each operation.
pub const PRUNE_TOL: f64 = 1e-14;

/// A total bijection on basis labels. Implementations must be defined for
/// every label (simulator replays visit labels outside the forward orbit),
/// and `backward` must invert `forward` exactly.
pub trait BranchBijection: Send + Sync {
    fn forward(&self, label: &mut BasisLabel, layout: &RegisterLayout);
    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout);
    fn describe(&self) -> String;
}

/// Marks the branches whose amplitude a phase flip negates.
pub trait PhasePredicate: Send + Sync {
    fn flips(&self, label: &BasisLabel, layout: &RegisterLayout) -> bool;
    fn describe(&self) -> String;
}

/// One invertible simulator operation. These are the units that operation
/// logs (state-preparation handles) are made of.
#[derive(Clone)]
pub enum Op {
    /// 2x2 unitary on one qubit, row-major.
    Qubit { qubit: usize, matrix: [Complex64; 4] },
    /// 2^w x 2^w unitary on a register span (w <= 6), row-major.
    RegisterUnitary { span: Span, matrix: Arc<Vec<Complex64>> },
    Branch(Arc<dyn BranchBijection>),
    Phase(Arc<dyn PhasePredicate>),
}

impl std::fmt::Debug for Op {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Op::Qubit { qubit, .. } => write!(f, "Qubit({qubit})"),
            Op::RegisterUnitary { span, .. } => write!(f, "RegisterUnitary({span:?})"),
            Op::Branch(b) => write!(f, "Branch({})", b.describe()),
            Op::Phase(p) => write!(f, "Phase({})", p.describe()),
        }
    }
}

/// Trace of everything applied to a state, for replay on an independent
/// simulator. Only recorded when tracing is enabled.
#[derive(Clone, Debug)]
pub enum LiveOp {
    Op { op: Op, inverse: bool },
    GlobalPhase(Complex64),
    Controlled { controls: Vec<usize>, ops: Vec<LiveOp> },
}

#[derive(Clone)]
pub struct SparseState {
    layout: RegisterLayout,
    entries: Vec<(BasisLabel, Complex64)>,
    counter: GateCounter,
    charging: bool,
    norm_target: f64,
    tracer: Option<Vec<LiveOp>>,
}

impl SparseState {
    /// The all-zeros basis state.
    pub fn zero(layout: RegisterLayout) -> Self {
        let label = BasisLabel::zero(layout.limb_count());
        Self {
            layout,
            entries: vec![(label, Complex64::new(1.0, 0.0))],
            counter: GateCounter::new(),
            charging: true,
            norm_target: 1.0,
            tracer: None,
        }
    }

    /// Builds a normalized state from explicit branches.
    pub fn from_entries(
        layout: RegisterLayout,
        mut entries: Vec<(BasisLabel, Complex64)>,
    ) -> Result<Self> {
        let limbs = layout.limb_count();
        for (label, _) in entries.iter_mut() {
            label.extend_limbs(limbs);
        }
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidArgument("duplicate branch label".into()));
            }
        }
        let state = Self {
            layout,
            entries,
            counter: GateCounter::new(),
            charging: true,
            norm_target: 1.0,
            tracer: None,
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NormDrift { norm: n, tol: 1e-9 });
        }
        Ok(state)
    }

    /// Uniform superposition over the index register, all other registers
    /// zero: a Hadamard on each index qubit.
    pub fn prepare_uniform_index(layout: RegisterLayout, index: RegisterId) -> Result<Self> {
        let span = layout.span(index);
        if span.width < 1 {
            return Err(Error::InvalidArgument("index register must have width >= 1".into()));
        }
        let mut state = Self::zero(layout);
        let h = hadamard();
        for q in span.offset..span.end() {
            state.apply_qubit_unitary(q, &h)?;
        }
        Ok(state)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn counter(&self) -> &GateCounter {
        &self.counter
    }

    pub fn reset_counter(&mut self) {
        self.counter = GateCounter::new();
    }

    /// Enables/disables gate accounting; returns the previous setting.
    /// Verification replays and uncomputation run uncharged.
    pub fn set_charging(&mut self, on: bool) -> bool {
        std::mem::replace(&mut self.charging, on)
    }

    pub fn charge_u_invocation(&mut self) {
        if self.charging {
            self.counter.u_invocations += 1;
        }
    }

    pub fn enable_tracing(&mut self) {
        self.tracer = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<LiveOp> {
        self.tracer.take().unwrap_or_default()
    }

    pub fn num_branches(&self) -> usize {
        self.entries.len()
    }

    /// Branches in label order.
    pub fn branches(&self) -> &[(BasisLabel, Complex64)] {
        &self.entries
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        match self.entries.binary_search_by(|(l, _)| l.cmp(label)) {
            Ok(i) => self.entries[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Appends a register to the layout; existing branches get zero bits.
    pub fn append_register(&mut self, name: &str, width: usize) -> Result<RegisterId> {
        let id = self.layout.append(name, width)?;
        let limbs = self.layout.limb_count();
        if limbs > self.entries.first().map_or(1, |(l, _)| l.limb_count()) {
            for (label, _) in self.entries.iter_mut() {
                label.extend_limbs(limbs);
            }
        }
        Ok(id)
    }

    fn charge(&mut self, f: impl FnOnce(&mut GateCounter)) {
        if self.charging {
            f(&mut self.counter);
        }
    }

    fn trace(&mut self, op: LiveOp) {
        if let Some(t) = self.tracer.as_mut() {
            t.push(op);
        }
    }

    fn finish_op(&mut self) -> Result<()> {
        self.entries.retain(|(_, a)| a.norm() >= PRUNE_TOL);
        let n = self.norm_sqr();
        if (n - self.norm_target).abs() > NORM_TOL {
            return Err(Error::NormDrift { norm: n, tol: NORM_TOL });
        }
        Ok(())
    }

    fn sort_merge(mut raw: Vec<(BasisLabel, Complex64)>) -> Vec<(BasisLabel, Complex64)> {
        raw.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(BasisLabel, Complex64)> = Vec::with_capacity(raw.len());
        for (label, amp) in raw {
            match out.last_mut() {
                Some((last, acc)) if *last == label => *acc += amp,
                _ => out.push((label, amp)),
            }
        }
        out
    }

    /// Applies one op, optionally inverted. The single entry point used by
    /// operation-log replays.
    pub fn apply_op(&mut self, op: &Op, inverse: bool) -> Result<()> {
        match op {
            Op::Qubit { qubit, matrix } => {
                let m = if inverse { dagger2(matrix) } else { *matrix };
                self.qubit_unitary_unchecked(*qubit, &m)?;
                self.charge(|c| c.single_qubit += 1);
            }
            Op::RegisterUnitary { span, matrix } => {
                self.register_unitary_unchecked(*span, matrix, inverse)?;
                self.charge(|c| {
                    if span.width == 1 {
                        c.single_qubit += 1
                    } else {
                        c.register_unitary += 1
                    }
                });
            }
            Op::Branch(f) => {
                for (label, _) in self.entries.iter_mut() {
                    if inverse {
                        f.backward(label, &self.layout);
                    } else {
                        f.forward(label, &self.layout);
                    }
                }
                self.entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                for pair in self.entries.windows(2) {
                    if pair[0].0 == pair[1].0 {
                        return Err(Error::NotInjective {
                            label: format!("{:?} under {}", pair[0].0, f.describe()),
                        });
                    }
                }
                self.charge(|c| c.branch_function += 1);
            }
            Op::Phase(p) => {
                for (label, amp) in self.entries.iter_mut() {
                    if p.flips(label, &self.layout) {
                        *amp = -*amp;
                    }
                }
                self.charge(|c| c.reflection += 1);
            }
        }
        self.trace(LiveOp::Op { op: op.clone(), inverse });
        self.finish_op()
    }

    fn qubit_unitary_unchecked(&mut self, qubit: usize, m: &[Complex64; 4]) -> Result<()> {
        if qubit >= self.layout.total_width() {
            return Err(Error::InvalidArgument(format!("qubit {qubit} out of range")));
        }
        let mut raw = Vec::with_capacity(self.entries.len() * 2);
        for (label, amp) in self.entries.drain(..) {
            let bit = label.bit(qubit) as usize;
            let c0 = m[bit] * amp;
            let c1 = m[2 + bit] * amp;
            if c0.norm_sqr() > 0.0 {
                let mut l0 = label.clone();
                l0.set_bit(qubit, false);
                raw.push((l0, c0));
            }
            if c1.norm_sqr() > 0.0 {
                let mut l1 = label;
                l1.set_bit(qubit, true);
                raw.push((l1, c1));
            }
        }
        self.entries = Self::sort_merge(raw);
        Ok(())
    }

    fn register_unitary_unchecked(
        &mut self,
        span: Span,
        matrix: &[Complex64],
        inverse: bool,
    ) -> Result<()> {
        if span.width > 6 {
            return Err(Error::InvalidArgument(format!(
                "register unitary width {} exceeds the supported 6 qubits",
                span.width
            )));
        }
        if span.end() > self.layout.total_width() {
            return Err(Error::InvalidArgument("span out of range".into()));
        }
        let dim = 1usize << span.width;
        let mut raw = Vec::with_capacity(self.entries.len() * dim);
        for (label, amp) in self.entries.drain(..) {
            let x = label.field(span) as usize;
            for y in 0..dim {
                let c = if inverse {
                    matrix[x * dim + y].conj()
                } else {
                    matrix[y * dim + x]
                };
                let contrib = c * amp;
                if contrib.norm_sqr() > 0.0 {
                    let mut l = label.clone();
                    l.set_field(span, y as u64);
                    raw.push((l, contrib));
                }
            }
        }
        self.entries = Self::sort_merge(raw);
        Ok(())
    }

    /// 2x2 unitary on one qubit. The matrix must be unitary within 1e-12.
    pub fn apply_qubit_unitary(&mut self, qubit: usize, matrix: &[Complex64; 4]) -> Result<()> {
        check_unitary(matrix, 2)?;
        self.apply_op(&Op::Qubit { qubit, matrix: *matrix }, false)
    }

    /// Small dense unitary on a whole register span.
    pub fn apply_register_unitary(&mut self, span: Span, matrix: Arc<Vec<Complex64>>) -> Result<()> {
        let dim = 1usize << span.width;
        if matrix.len() != dim * dim {
            return Err(Error::InvalidArgument("matrix size does not match span".into()));
        }
        check_unitary(&matrix, dim)?;
        self.apply_op(&Op::RegisterUnitary { span, matrix }, false)
    }

    /// Rewrites every branch label by a reversible bit-string permutation.
    pub fn apply_branch_function(&mut self, f: Arc<dyn BranchBijection>) -> Result<()> {
        self.apply_op(&Op::Branch(f), false)
    }

    pub fn apply_branch_function_inverse(&mut self, f: Arc<dyn BranchBijection>) -> Result<()> {
        self.apply_op(&Op::Branch(f), true)
    }

    pub fn apply_phase_flip(&mut self, p: Arc<dyn PhasePredicate>) -> Result<()> {
        self.apply_op(&Op::Phase(p), false)
    }

    /// 2|0><0| - I on a register: negates branches where the register is
    /// nonzero.
    pub fn reflection_about_zero(&mut self, span: Span) -> Result<()> {
        self.apply_phase_flip(Arc::new(NonZeroField { span }))
    }

    /// Multiplies every amplitude by a unit-modulus scalar.
    pub fn apply_global_phase(&mut self, c: Complex64) -> Result<()> {
        if (c.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument("global phase must have unit modulus".into()));
        }
        for (_, amp) in self.entries.iter_mut() {
            *amp *= c;
        }
        self.trace(LiveOp::GlobalPhase(c));
        self.finish_op()
    }

    /// Applies `body` only to the branches where every control qubit is 1.
    /// The body must not touch the control qubits or the layout.
    pub fn with_controls<F>(&mut self, controls: &[usize], body: F) -> Result<()>
    where
        F: FnOnce(&mut SparseState) -> Result<()>,
    {
        let width = self.layout.total_width();
        for (i, &c) in controls.iter().enumerate() {
            if c >= width {
                return Err(Error::InvalidArgument(format!("control qubit {c} out of range")));
            }
            if controls[..i].contains(&c) {
                return Err(Error::InvalidArgument("duplicate control qubit".into()));
            }
        }
        let all_set = |l: &BasisLabel| controls.iter().all(|&c| l.bit(c));
        let mut ones = Vec::new();
        let mut rest = Vec::new();
        for (label, amp) in self.entries.drain(..) {
            if all_set(&label) {
                ones.push((label, amp));
            } else {
                rest.push((label, amp));
            }
        }
        let mass: f64 = ones.iter().map(|(_, a)| a.norm_sqr()).sum();
        let mut sub = SparseState {
            layout: self.layout.clone(),
            entries: ones,
            counter: GateCounter::new(),
            charging: self.charging,
            norm_target: mass,
            tracer: self.tracer.as_ref().map(|_| Vec::new()),
        };
        body(&mut sub)?;
        if sub.layout != self.layout {
            return Err(Error::LayoutMismatch(
                "controlled body must not change the layout".into(),
            ));
        }
        if !sub.entries.iter().all(|(l, _)| all_set(l)) {
            return Err(Error::ControlViolation);
        }
        let sub_trace = sub.tracer.take();
        self.counter.absorb(&sub.counter);
        self.entries = merge_disjoint(rest, sub.entries);
        self.charge(|c| c.controlled += 1);
        if let Some(ops) = sub_trace {
            self.trace(LiveOp::Controlled { controls: controls.to_vec(), ops });
        }
        self.finish_op()
    }

    /// Controlled application of a 2x2 unitary; controls must not overlap
    /// the target.
    pub fn apply_controlled_unitary(
        &mut self,
        controls: &[usize],
        target: usize,
        matrix: &[Complex64; 4],
    ) -> Result<()> {
        if controls.contains(&target) {
            return Err(Error::ControlViolation);
        }
        check_unitary(matrix, 2)?;
        let m = *matrix;
        self.with_controls(controls, |s| s.apply_op(&Op::Qubit { qubit: target, matrix: m }, false))
    }

    /// Born-rule probabilities of each value of a register, in value order.
    pub fn register_distribution(&self, span: Span) -> Vec<(u64, f64)> {
        if span.width > 64 {
            return Vec::new();
        }
        let mut acc: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
        for (label, amp) in &self.entries {
            *acc.entry(label.field(span)).or_insert(0.0) += amp.norm_sqr();
        }
        acc.into_iter().collect()
    }

    pub fn register_probability(&self, span: Span, value: u64) -> f64 {
        self.entries
            .iter()
            .filter(|(l, _)| l.field(span) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Samples a register by the Born rule and collapses the state.
    pub fn measure_register<R: Rng + ?Sized>(
        &mut self,
        span: Span,
        rng: &mut R,
    ) -> Result<(u64, f64)> {
        if span.width > 64 {
            return Err(Error::InvalidArgument("cannot measure a register wider than 64".into()));
        }
        let dist = self.register_distribution(span);
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = dist.last().map(|(v, _)| *v).unwrap_or(0);
        let mut prob = dist.last().map(|(_, p)| *p).unwrap_or(0.0);
        for (v, p) in &dist {
            acc += p;
            if draw < acc {
                outcome = *v;
                prob = *p;
                break;
            }
        }
        if prob <= 0.0 {
            return Err(Error::Integrity("measurement hit a zero-probability outcome".into()));
        }
        let scale = prob.sqrt().recip();
        self.entries.retain(|(l, _)| l.field(span) == outcome);
        for (_, amp) in self.entries.iter_mut() {
            *amp *= scale;
        }
        self.finish_op()?;
        Ok((outcome, prob))
    }

    pub fn inner_product(&self, other: &SparseState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("states have different layouts".into()));
        }
        let mut ip = Complex64::new(0.0, 0.0);
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    ip += self.entries[i].1.conj() * other.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(ip)
    }

    /// |<a|b>|^2.
    pub fn fidelity(&self, other: &SparseState) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// c1|a> + c2|b>; the result must be normalized (within 1e-9).
    pub fn superpose(
        c1: Complex64,
        a: &SparseState,
        c2: Complex64,
        b: &SparseState,
    ) -> Result<SparseState> {
        if a.layout != b.layout {
            return Err(Error::LayoutMismatch("states have different layouts".into()));
        }
        let mut raw: Vec<(BasisLabel, Complex64)> = Vec::new();
        raw.extend(a.entries.iter().map(|(l, amp)| (l.clone(), c1 * amp)));
        raw.extend(b.entries.iter().map(|(l, amp)| (l.clone(), c2 * amp)));
        let entries = Self::sort_merge(raw);
        let state = SparseState {
            layout: a.layout.clone(),
            entries,
            counter: GateCounter::new(),
            charging: true,
            norm_target: 1.0,
            tracer: None,
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NormDrift { norm: n, tol: 1e-9 });
        }
        Ok(state)
    }

    /// Reflection 2|axis><axis| - I about a fixed state.
    pub fn reflect_about(&mut self, axis: &SparseState) -> Result<()> {
        if self.layout != axis.layout {
            return Err(Error::LayoutMismatch("states have different layouts".into()));
        }
        let ip = axis.inner_product(self)?;
        let mut raw: Vec<(BasisLabel, Complex64)> = Vec::new();
        raw.extend(axis.entries.iter().map(|(l, amp)| (l.clone(), 2.0 * ip * amp)));
        raw.extend(self.entries.drain(..).map(|(l, amp)| (l, -amp)));
        self.entries = Self::sort_merge(raw);
        self.charge(|c| c.reflection += 1);
        self.finish_op()
    }
}

fn merge_disjoint(
    a: Vec<(BasisLabel, Complex64)>,
    b: Vec<(BasisLabel, Complex64)>,
) -> Vec<(BasisLabel, Complex64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (0, 0);
    let mut a = a.into_iter().peekable();
    let mut b = b.into_iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => {
                if x.0 <= y.0 {
                    out.push(a.next().unwrap());
                    ia += 1;
                } else {
                    out.push(b.next().unwrap());
                    ib += 1;
                }
            }
            (Some(_), None) => {
                out.extend(a);
                break;
            }
            (None, Some(_)) => {
                out.extend(b);
                break;
            }
            (None, None) => break,
        }
    }
    let _ = (ia, ib);
    out
}

fn dagger2(m: &[Complex64; 4]) -> [Complex64; 4] {
    [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()]
}

/// Verifies U†U = I within 1e-12.
pub fn check_unitary(matrix: &[Complex64], dim: usize) -> Result<()> {
    let tol = 1e-12;
    let mut dev = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                s += matrix[k * dim + i].conj() * matrix[k * dim + j];
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s - expect).norm());
        }
    }
    if dev > tol {
        return Err(Error::NotUnitary { dev, tol });
    }
    Ok(())
}

/// Negates branches where a register is nonzero.
pub struct NonZeroField {
    pub span: Span,
}

impl PhasePredicate for NonZeroField {
    fn flips(&self, label: &BasisLabel, _layout: &RegisterLayout) -> bool {
        label.field(self.span) != 0
    }

    fn describe(&self) -> String {
        format!("nonzero[{}..{}]", self.span.offset, self.span.end())
    }
}

/// Negates branches where one qubit is 1.
pub struct BitIsOne {
    pub bit: usize,
}

impl PhasePredicate for BitIsOne {
    fn flips(&self, label: &BasisLabel, _layout: &RegisterLayout) -> bool {
        label.bit(self.bit)
    }

    fn describe(&self) -> String {
        format!("bit{}", self.bit)
    }
}

/// XORs a constant into a field; its own inverse.
pub struct XorConstField {
    pub span: Span,
    pub value: u64,
}

impl BranchBijection for XorConstField {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        label.xor_field(self.span, self.value);
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        format!("xor[{}..{}]^={:#x}", self.span.offset, self.span.end(), self.value)
    }
}

pub fn hadamard() -> [Complex64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        Complex64::new(h, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
    ]
}

pub fn pauli_x() -> [Complex64; 4] {
    [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ]
}

pub fn pauli_z() -> [Complex64; 4] {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]
}

/// An append-only composition of operations, used as an invertible handle to
/// "everything applied so far" (the state-preparation operator).
#[derive(Clone, Default)]
pub struct OpLog {
    ops: Arc<Vec<Op>>,
}

impl OpLog {
    pub fn snapshot(history: &[Op]) -> Self {
        Self { ops: Arc::new(history.to_vec()) }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn apply(&self, state: &mut SparseState) -> Result<()> {
        for op in self.ops.iter() {
            state.apply_op(op, false)?;
        }
        Ok(())
    }

    pub fn apply_inverse(&self, state: &mut SparseState) -> Result<()> {
        for op in self.ops.iter().rev() {
            state.apply_op(op, true)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_qubit_layout() -> (RegisterLayout, RegisterId) {
        let mut lay = RegisterLayout::new();
        let q = lay.append("index", 1).unwrap();
        (lay, q)
    }

    fn index_layout(n: usize) -> (RegisterLayout, RegisterId) {
        let mut lay = RegisterLayout::new();
        let q = lay.append("index", n).unwrap();
        (lay, q)
    }

    #[test]
    fn uniform_prep_single_qubit() {
        let (lay, idx) = one_qubit_layout();
        let s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        assert_eq!(s.num_branches(), 2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (_, amp) in s.branches() {
            assert!((amp.re - h).abs() < 1e-12 && amp.im == 0.0);
        }
    }

    #[test]
    fn uniform_prep_two_qubits_quarter_amplitudes() {
        let (lay, idx) = index_layout(2);
        let s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        assert_eq!(s.num_branches(), 4);
        for (_, amp) in s.branches() {
            assert!((amp.re - 0.5).abs() < 1e-12);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_prep_normalized_for_various_n() {
        for n in 1..=8 {
            let (lay, idx) = index_layout(n);
            let s = SparseState::prepare_uniform_index(lay, idx).unwrap();
            assert_eq!(s.num_branches(), 1 << n);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hadamard_then_z_flips_relative_sign() {
        let (lay, _) = one_qubit_layout();
        let mut s = SparseState::zero(lay);
        s.apply_qubit_unitary(0, &hadamard()).unwrap();
        s.apply_qubit_unitary(0, &pauli_z()).unwrap();
        let one = BasisLabel::from(1);
        assert!(s.amplitude(&one).re < 0.0);
    }

    #[test]
    fn hadamard_is_involution() {
        let (lay, idx) = index_layout(3);
        let s0 = SparseState::prepare_uniform_index(lay, idx).unwrap();
        let mut s = s0.clone();
        s.apply_qubit_unitary(1, &hadamard()).unwrap();
        s.apply_qubit_unitary(1, &hadamard()).unwrap();
        assert!((s.fidelity(&s0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_matrix_rejected() {
        let (lay, _) = one_qubit_layout();
        let mut s = SparseState::zero(lay);
        let bad = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(matches!(s.apply_qubit_unitary(0, &bad), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn branch_identity_and_not() {
        let (lay, _) = one_qubit_layout();
        let mut s = SparseState::zero(lay);
        struct Identity;
        impl BranchBijection for Identity {
            fn forward(&self, _l: &mut BasisLabel, _lay: &RegisterLayout) {}
            fn backward(&self, _l: &mut BasisLabel, _lay: &RegisterLayout) {}
            fn describe(&self) -> String {
                "id".into()
            }
        }
        s.apply_branch_function(Arc::new(Identity)).unwrap();
        assert_eq!(s.branches()[0].0, BasisLabel::from(0));

        s.apply_branch_function(Arc::new(XorConstField { span: Span::new(0, 1), value: 1 }))
            .unwrap();
        assert_eq!(s.branches()[0].0, BasisLabel::from(1));
    }

    #[test]
    fn increment_permutes_uniform_state_to_itself() {
        let (lay, idx) = index_layout(2);
        let span = lay.span(idx);
        let s0 = SparseState::prepare_uniform_index(lay, idx).unwrap();
        let mut s = s0.clone();
        struct Inc {
            span: Span,
        }
        impl BranchBijection for Inc {
            fn forward(&self, l: &mut BasisLabel, _lay: &RegisterLayout) {
                let v = l.field(self.span);
                l.set_field(self.span, (v + 1) & 0b11);
            }
            fn backward(&self, l: &mut BasisLabel, _lay: &RegisterLayout) {
                let v = l.field(self.span);
                l.set_field(self.span, v.wrapping_sub(1) & 0b11);
            }
            fn describe(&self) -> String {
                "inc".into()
            }
        }
        s.apply_branch_function(Arc::new(Inc { span })).unwrap();
        assert!((s.fidelity(&s0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_injective_branch_function_detected() {
        let (lay, idx) = index_layout(1);
        let _ = idx;
        let mut s = SparseState::zero(lay);
        s.apply_qubit_unitary(0, &hadamard()).unwrap();
        struct Collapse;
        impl BranchBijection for Collapse {
            fn forward(&self, l: &mut BasisLabel, _lay: &RegisterLayout) {
                l.set_field(Span::new(0, 1), 0);
            }
            fn backward(&self, _l: &mut BasisLabel, _lay: &RegisterLayout) {}
            fn describe(&self) -> String {
                "collapse".into()
            }
        }
        assert!(matches!(
            s.apply_branch_function(Arc::new(Collapse)),
            Err(Error::NotInjective { .. })
        ));
    }

    #[test]
    fn cnot_truth_table_via_controls() {
        let mut lay = RegisterLayout::new();
        lay.append("c", 1).unwrap();
        lay.append("t", 1).unwrap();
        for (input, expected) in [(0b00u64, 0b00u64), (0b01, 0b11), (0b10, 0b10), (0b11, 0b01)] {
            // bit 0 = control, bit 1 = target
            let entries = vec![(BasisLabel::from(input), Complex64::new(1.0, 0.0))];
            let mut s = SparseState::from_entries(lay.clone(), entries).unwrap();
            s.apply_controlled_unitary(&[0], 1, &pauli_x()).unwrap();
            assert_eq!(s.branches()[0].0, BasisLabel::from(expected), "input {input:02b}");
        }
    }

    #[test]
    fn control_zero_branch_unchanged() {
        let mut lay = RegisterLayout::new();
        lay.append("c", 1).unwrap();
        lay.append("t", 1).unwrap();
        let s0 = SparseState::zero(lay);
        let mut s = s0.clone();
        s.apply_controlled_unitary(&[0], 1, &pauli_x()).unwrap();
        assert!((s.fidelity(&s0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controls_may_not_overlap_target() {
        let (lay, _) = index_layout(2);
        let mut s = SparseState::zero(lay);
        assert!(matches!(
            s.apply_controlled_unitary(&[0], 0, &pauli_x()),
            Err(Error::ControlViolation)
        ));
    }

    #[test]
    fn reflection_about_zero_cases() {
        let (lay, idx) = index_layout(1);
        let span = lay.span(idx);
        let mut s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        s.reflection_about_zero(span).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(&BasisLabel::from(0)).re - h).abs() < 1e-12);
        assert!((s.amplitude(&BasisLabel::from(1)).re + h).abs() < 1e-12);
    }

    #[test]
    fn measurement_of_definite_register_is_certain() {
        let (lay, idx) = index_layout(3);
        let span = lay.span(idx);
        let entries = vec![(BasisLabel::from(5), Complex64::new(1.0, 0.0))];
        let mut s = SparseState::from_entries(lay, entries).unwrap();
        let _ = idx;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (outcome, p) = s.measure_register(span, &mut rng).unwrap();
        assert_eq!(outcome, 5);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_frequencies_track_born_rule() {
        let (lay, idx) = index_layout(2);
        let span = lay.span(idx);
        let s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0u32; 4];
        let trials = 100_000;
        for _ in 0..trials {
            let mut copy = s.clone();
            let (v, _) = copy.measure_register(span, &mut rng).unwrap();
            counts[v as usize] += 1;
        }
        // 3 sigma on a p=1/4 binomial
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - trials as f64 / 4.0).abs() < 3.0 * sigma, "counts {counts:?}");
        }
    }

    #[test]
    fn fixed_seed_reproduces_outcome_sequence() {
        let (lay, idx) = index_layout(4);
        let span = lay.span(idx);
        let s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        let sample = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32)
                .map(|_| s.clone().measure_register(span, &mut rng).unwrap().0)
                .collect::<Vec<_>>()
        };
        assert_eq!(sample(123), sample(123));
        assert_ne!(sample(123), sample(124));
    }

    #[test]
    fn fidelity_basics() {
        let (lay, idx) = index_layout(1);
        let zero = SparseState::zero(lay.clone());
        let mut one = SparseState::zero(lay.clone());
        one.apply_qubit_unitary(0, &pauli_x()).unwrap();
        let plus = SparseState::prepare_uniform_index(lay, idx).unwrap();
        assert!((zero.fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(zero.fidelity(&one).unwrap() < 1e-12);
        assert!((zero.fidelity(&plus).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_layout_mismatch() {
        let (lay1, _) = index_layout(1);
        let (lay2, _) = index_layout(2);
        let a = SparseState::zero(lay1);
        let b = SparseState::zero(lay2);
        assert!(matches!(a.fidelity(&b), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn operations_are_linear() {
        let (lay, _) = index_layout(2);
        let a = SparseState::from_entries(
            lay.clone(),
            vec![(BasisLabel::from(0), Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let b = SparseState::from_entries(
            lay.clone(),
            vec![(BasisLabel::from(3), Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let c1 = Complex64::new(0.6, 0.0);
        let c2 = Complex64::new(0.0, 0.8);
        let mut combined = SparseState::superpose(c1, &a, c2, &b).unwrap();
        combined.apply_qubit_unitary(0, &hadamard()).unwrap();
        let mut ta = a.clone();
        ta.apply_qubit_unitary(0, &hadamard()).unwrap();
        let mut tb = b.clone();
        tb.apply_qubit_unitary(0, &hadamard()).unwrap();
        let expected = SparseState::superpose(c1, &ta, c2, &tb).unwrap();
        assert!((combined.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_functions_preserve_magnitude_multiset() {
        let (lay, idx) = index_layout(3);
        let span = lay.span(idx);
        let mut s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        s.apply_qubit_unitary(0, &[
            Complex64::new(0.8, 0.0),
            Complex64::new(0.6, 0.0),
            Complex64::new(-0.6, 0.0),
            Complex64::new(0.8, 0.0),
        ])
        .unwrap();
        let mut before: Vec<f64> = s.branches().iter().map(|(_, a)| a.norm()).collect();
        s.apply_branch_function(Arc::new(XorConstField { span, value: 0b101 })).unwrap();
        let mut after: Vec<f64> = s.branches().iter().map(|(_, a)| a.norm()).collect();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before.len(), after.len());
        for (x, y) in before.iter().zip(after.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn counter_tallies_are_monotone() {
        let (lay, idx) = index_layout(2);
        let span = lay.span(idx);
        let mut s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        let g0 = s.counter().total_gates();
        s.reflection_about_zero(span).unwrap();
        let g1 = s.counter().total_gates();
        s.apply_branch_function(Arc::new(XorConstField { span, value: 1 })).unwrap();
        let g2 = s.counter().total_gates();
        assert!(g0 < g1 && g1 < g2);
        assert_eq!(s.counter().single_qubit, 2);
        assert_eq!(s.counter().reflection, 1);
        assert_eq!(s.counter().branch_function, 1);
    }
}
