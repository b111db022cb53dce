//! Pipeline substrate: a simulator state paired with the growing operation
//! log that serves as the cumulative state-preparation handle.
//!
//! Every operation a pipeline applies is also recorded in `history`, so the
//! composition of the log maps the all-zeros reference input to the current
//! state at any point. Sharing runs record their net branch-level effect
//! (the phi-record write) rather than their internal interference steps;
//! the round-trip fidelity check performed before each run guards that
//! equivalence.

use crate::error::{Error, Result};
use crate::sim::{BasisLabel, Op, OpLog, RegisterLayout, SparseState, Span};

/// Which branches a level operation touches: indices congruent to `offset`
/// modulo `modulus` (modulus 1 means every branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activity {
    pub modulus: u64,
    pub offset: u64,
}

impl Activity {
    pub fn all() -> Self {
        Self { modulus: 1, offset: 0 }
    }

    pub fn stride(stride: u64) -> Self {
        Self { modulus: stride, offset: 0 }
    }

    pub fn is_active(&self, index: u64) -> bool {
        self.modulus <= 1 || index % self.modulus == self.offset
    }
}

pub struct PipelineCore {
    pub state: SparseState,
    pub history: Vec<Op>,
}

impl PipelineCore {
    pub fn new(state: SparseState) -> Self {
        Self { state, history: Vec::new() }
    }

    /// Applies an operation and records it in the preparation log.
    pub fn apply_record(&mut self, op: Op) -> Result<()> {
        self.state.apply_op(&op, false)?;
        self.history.push(op);
        Ok(())
    }

    /// Records an operation whose effect has already been realized on the
    /// state by other means (a completed sharing run).
    pub fn record_applied(&mut self, op: Op) {
        self.history.push(op);
    }

    pub fn snapshot(&self) -> OpLog {
        OpLog::snapshot(&self.history)
    }

    /// Replays the log on the all-zeros input and returns the fidelity with
    /// the current state. Uncharged.
    pub fn preparation_fidelity(&self) -> Result<f64> {
        let mut reference = SparseState::zero(self.state.layout().clone());
        reference.set_charging(false);
        self.snapshot().apply(&mut reference)?;
        reference.fidelity(&self.state)
    }

    /// Inverts the recorded suffix `ops` (most recent last) on the state;
    /// used by reversibility checks.
    pub fn apply_inverse_suffix(&mut self, ops: &[Op]) -> Result<()> {
        for op in ops.iter().rev() {
            self.state.apply_op(op, true)?;
        }
        Ok(())
    }
}

/// Branch map: index += delta (mod 2^width), the cyclic register shift.
pub struct CyclicShift {
    pub index: Span,
    pub delta: i64,
}

impl crate::sim::BranchBijection for CyclicShift {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let n = 1u64 << self.index.width;
        let v = label.field(self.index);
        label.set_field(self.index, (v.wrapping_add(self.delta.rem_euclid(n as i64) as u64)) % n);
    }

    fn backward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let n = 1u64 << self.index.width;
        let v = label.field(self.index);
        label.set_field(self.index, (v.wrapping_add((-self.delta).rem_euclid(n as i64) as u64)) % n);
    }

    fn describe(&self) -> String {
        format!("shift(index {:+})", self.delta)
    }
}

/// Writes a per-index word into a register: target ^= table[index].
/// Used to load initial guesses and other index-oracle payloads.
pub struct IndexTableXor {
    pub index: Span,
    pub target: Span,
    pub table: std::sync::Arc<Vec<u64>>,
    pub what: &'static str,
}

impl crate::sim::BranchBijection for IndexTableXor {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let i = label.field(self.index) as usize;
        label.xor_field(self.target, self.table[i]);
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        format!("{}[index]", self.what)
    }
}

/// At one boundary branch, swaps the wrapped neighbor word into a garbage
/// slot and writes the ghost word in its place.
pub struct BoundaryFix {
    pub index: Span,
    pub at_index: u64,
    pub target: Span,
    pub wrap_slot: Span,
    pub ghost_bits: u64,
}

impl crate::sim::BranchBijection for BoundaryFix {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        if label.field(self.index) == self.at_index {
            label.swap_fields(self.target, self.wrap_slot);
            label.xor_field(self.target, self.ghost_bits);
        }
    }

    fn backward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        if label.field(self.index) == self.at_index {
            label.xor_field(self.target, self.ghost_bits);
            label.swap_fields(self.target, self.wrap_slot);
        }
    }

    fn describe(&self) -> String {
        format!("boundary-fix@{}", self.at_index)
    }
}

/// Unconditional register swap (moves content to a fresh garbage slot).
pub struct SwapRegs {
    pub a: Span,
    pub b: Span,
    pub what: &'static str,
}

impl crate::sim::BranchBijection for SwapRegs {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        label.swap_fields(self.a, self.b);
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        format!("swap({})", self.what)
    }
}

/// Exhaustive bijection check over the touched registers, for tests on small
/// widths: applies the map to every pattern of the given spans (other bits
/// zero) and verifies injectivity and that backward inverts forward.
pub fn verify_bijection_exhaustive(
    f: &dyn crate::sim::BranchBijection,
    spans: &[Span],
    layout: &RegisterLayout,
) -> Result<()> {
    let total: usize = spans.iter().map(|s| s.width).sum();
    if total > 16 {
        return Err(Error::InvalidArgument("exhaustive check limited to 16 bits".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for pattern in 0u64..(1 << total) {
        let mut label = BasisLabel::zero(layout.limb_count());
        let mut cursor = 0;
        for s in spans {
            label.set_field(*s, (pattern >> cursor) & ((1 << s.width) - 1));
            cursor += s.width;
        }
        let original = label.clone();
        f.forward(&mut label, layout);
        if !seen.insert(label.clone()) {
            return Err(Error::NotInjective { label: format!("{label:?}") });
        }
        f.backward(&mut label, layout);
        if label != original {
            return Err(Error::Integrity(format!(
                "backward does not invert forward at {original:?}"
            )));
        }
    }
    Ok(())
}
