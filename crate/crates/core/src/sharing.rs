//! Quantum data register sharing.
//!
//! Branches paired across one index qubit learn each other's data bit
//! without measurement: an ancilla is loaded with the negated bit, the
//! two-branch Grover operator built from the state-preparation handle
//! rotates the pair subspace by an angle whose sine squared is the mean of
//! the two bits, and exact 3-bit phase estimation writes that angle into a
//! phase register. The phase value is copied out, the estimation is
//! uncomputed, and the copy decodes the partner's bit on every branch.
//!
//! All eight possible phase outcomes are multiples of 1/8, so the 3-bit
//! estimation is deterministic. The Grover operator is taken as
//! -S_psi S_xi on the span of the two ancilla sectors, with eigenvalues
//! exp(+-i 2 pi phi), phi in {0, 1/4, 1/2}; the estimation register reads m
//! with phi = m/8 mod 1.

use crate::error::{Error, Result};
use crate::pipeline::{Activity, PipelineCore};
use crate::sim::{
    hadamard, BasisLabel, BitIsOne, BranchBijection, Op, OpLog, RegisterLayout, SparseState, Span,
};
use num_complex::Complex64;
use std::sync::Arc;

/// Tolerance for the preparation-handle round-trip check.
pub const PREP_FIDELITY_TOL: f64 = 1e-12;

/// Tolerance for the full-protocol round-trip fidelity.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

/// Off-support probability mass above this in the phase register is a
/// numerical-integrity failure.
pub const OFF_SUPPORT_TOL: f64 = 1e-9;

/// Sign-resolved magnitude record of an estimated phase: m/8 with
/// m in {0, 2, 4}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseValue {
    m: u8,
}

impl PhaseValue {
    pub fn from_m(m: u8) -> Result<Self> {
        if !matches!(m, 0 | 2 | 4) {
            return Err(Error::Integrity(format!("non-canonical phase record m={m}")));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    /// |phi| in turns: 0, 1/4 or 1/2.
    pub fn phi(&self) -> f64 {
        self.m as f64 / 8.0
    }

    pub fn sin_sqr(&self) -> f64 {
        (std::f64::consts::PI * self.phi()).sin().powi(2)
    }
}

/// Canonical |phi| record of a 3-bit phase word: maps negative phases
/// m in {5,6,7} to 8-m.
pub fn canonical_m(m: u64) -> u64 {
    if m <= 4 {
        m
    } else {
        8 - m
    }
}

/// Exact 8x8 QFT matrix: entry (y, x) = omega^{x y} / sqrt(8).
pub fn qft3_matrix() -> Arc<Vec<Complex64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let s = 0.5 * std::f64::consts::SQRT_2 * r; // 1/2
    let _ = s;
    let omega = |k: usize| -> Complex64 {
        match k % 8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(r, r),
            2 => Complex64::new(0.0, 1.0),
            3 => Complex64::new(-r, r),
            4 => Complex64::new(-1.0, 0.0),
            5 => Complex64::new(-r, -r),
            6 => Complex64::new(0.0, -1.0),
            _ => Complex64::new(r, -r),
        }
    };
    let norm = 1.0 / 8f64.sqrt();
    let mut m = Vec::with_capacity(64);
    for y in 0..8 {
        for x in 0..8 {
            m.push(omega(x * y) * norm);
        }
    }
    Arc::new(m)
}

/// Context for one sharing run on one data bit.
pub struct SharingContext {
    /// Handle to the preparation operator: replaying it on the all-zeros
    /// input reproduces the pre-run state.
    pub prep: OpLog,
    /// Index qubit distinguishing the two branches of each pair.
    pub pairing_qubit: usize,
    /// Absolute position of the data bit being shared.
    pub data_bit: usize,
    pub ancilla: Span,
    pub phase: Span,
    /// Destination for this run's phase record.
    pub phase_copy: Span,
}

impl SharingContext {
    /// Builds a context and verifies the preparation handle reproduces the
    /// current state (fidelity >= 1 - 1e-12).
    pub fn new(
        state: &SparseState,
        prep: OpLog,
        pairing_qubit: usize,
        data_bit: usize,
        ancilla: Span,
        phase: Span,
        phase_copy: Span,
    ) -> Result<Self> {
        if ancilla.width != 1 || phase.width != 3 || phase_copy.width != 3 {
            return Err(Error::InvalidArgument(
                "sharing needs a 1-qubit ancilla and 3-qubit phase/copy registers".into(),
            ));
        }
        let width = state.layout().total_width();
        if pairing_qubit >= width || data_bit >= width {
            return Err(Error::InvalidArgument("pairing/data qubit out of range".into()));
        }
        for span in [ancilla, phase, phase_copy] {
            if span.contains_bit(pairing_qubit) || span.contains_bit(data_bit) {
                return Err(Error::InvalidArgument(
                    "ancilla/phase registers overlap the shared data".into(),
                ));
            }
        }
        let ctx = Self { prep, pairing_qubit, data_bit, ancilla, phase, phase_copy };
        ctx.verify_preparation(state)?;
        Ok(ctx)
    }

    fn verify_preparation(&self, state: &SparseState) -> Result<()> {
        let mut reference = SparseState::zero(state.layout().clone());
        reference.set_charging(false);
        self.prep.apply(&mut reference)?;
        let fid = reference.fidelity(state)?;
        if fid < 1.0 - PREP_FIDELITY_TOL {
            return Err(Error::Integrity(format!(
                "preparation handle does not reproduce the current state (fidelity {fid})"
            )));
        }
        Ok(())
    }
}

/// Ancilla := NOT(data bit); an involution.
pub struct AncillaFromNotData {
    pub data_bit: usize,
    pub ancilla_bit: usize,
}

impl BranchBijection for AncillaFromNotData {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        if !label.bit(self.data_bit) {
            label.flip_bit(self.ancilla_bit);
        } else {
            // anc ^= (data ^ 1) with data = 1: no change
        }
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        format!("anc{} ^= !bit{}", self.ancilla_bit, self.data_bit)
    }
}

fn g_op(ctx: &SharingContext) -> Op {
    Op::Branch(Arc::new(AncillaFromNotData {
        data_bit: ctx.data_bit,
        ancilla_bit: ctx.ancilla.offset,
    }))
}

/// Loads the ancilla with the negated data bit on every branch. Rejects a
/// dirty ancilla.
pub fn apply_g(state: &mut SparseState, ctx: &SharingContext) -> Result<()> {
    if state.branches().iter().any(|(l, _)| l.field(ctx.ancilla) != 0) {
        return Err(Error::Integrity("ancilla must be clean before G".into()));
    }
    state.apply_op(&g_op(ctx), false)
}

/// Phase flip on branches whose ancilla is 1.
pub fn oracle_s_xi(state: &mut SparseState, ctx: &SharingContext) -> Result<()> {
    state.apply_phase_flip(Arc::new(BitIsOne { bit: ctx.ancilla.offset }))
}

/// The pair-subspace reflection 2|Psi><Psi| - I, realized by conjugating a
/// one-qubit reflection with the preparation handle:
/// G . U . H_pair . (2|0><0|-I)_pair . H_pair . U^{-1} . G^{-1}.
/// Charges two U invocations.
pub fn grover_diffusion(state: &mut SparseState, ctx: &SharingContext) -> Result<()> {
    let pair_span = Span::new(ctx.pairing_qubit, 1);
    let h = Op::Qubit { qubit: ctx.pairing_qubit, matrix: hadamard() };
    state.apply_op(&g_op(ctx), false)?;
    state.charge_u_invocation();
    ctx.prep.apply_inverse(state)?;
    state.apply_op(&h, false)?;
    state.reflection_about_zero(pair_span)?;
    state.apply_op(&h, false)?;
    state.charge_u_invocation();
    ctx.prep.apply(state)?;
    state.apply_op(&g_op(ctx), false)
}

/// One application of the Grover operator -S_psi S_xi (or its inverse).
fn apply_grover_operator(
    state: &mut SparseState,
    ctx: &SharingContext,
    inverse: bool,
) -> Result<()> {
    if inverse {
        grover_diffusion(state, ctx)?;
        oracle_s_xi(state, ctx)?;
    } else {
        oracle_s_xi(state, ctx)?;
        grover_diffusion(state, ctx)?;
    }
    state.apply_global_phase(Complex64::new(-1.0, 0.0))
}

#[derive(Debug, Clone)]
pub struct PhaseEstimateReport {
    /// Probability per phase-register value, nonzero entries only.
    pub support: Vec<(u8, f64)>,
    /// Mass outside the canonical outcomes {0, 2, 4, 6}.
    pub off_support_mass: f64,
}

/// Textbook 3-bit phase estimation of the Grover operator: Hadamards on the
/// phase qubits, 7 controlled operator applications (powers 1, 2, 4), then
/// the inverse QFT. Exact here, because every eigenphase is a multiple of
/// 1/8.
pub fn phase_estimate_3bit(
    state: &mut SparseState,
    ctx: &SharingContext,
) -> Result<PhaseEstimateReport> {
    if state.branches().iter().any(|(l, _)| l.field(ctx.phase) != 0) {
        return Err(Error::Integrity("phase register must be zeroed before estimation".into()));
    }
    let h = hadamard();
    for q in ctx.phase.offset..ctx.phase.end() {
        state.apply_op(&Op::Qubit { qubit: q, matrix: h }, false)?;
    }
    for j in 0..3 {
        let control = ctx.phase.offset + j;
        for _ in 0..(1u32 << j) {
            state.with_controls(&[control], |sub| apply_grover_operator(sub, ctx, false))?;
        }
    }
    state.apply_op(&Op::RegisterUnitary { span: ctx.phase, matrix: qft3_matrix() }, true)?;

    let mut support = Vec::new();
    let mut off = 0.0;
    for (m, p) in state.register_distribution(ctx.phase) {
        if p > 0.0 {
            support.push((m as u8, p));
        }
        if m % 2 == 1 {
            off += p;
        }
    }
    if off > OFF_SUPPORT_TOL {
        return Err(Error::Integrity(format!(
            "phase estimation off-support mass {off:e} exceeds {OFF_SUPPORT_TOL:e}"
        )));
    }
    Ok(PhaseEstimateReport { support, off_support_mass: off })
}

/// copy ^= canonical(|m|): the sign-resolved magnitude record.
pub struct CopyCanonicalPhase {
    pub phase: Span,
    pub copy: Span,
}

impl BranchBijection for CopyCanonicalPhase {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let m = label.field(self.phase);
        label.xor_field(self.copy, canonical_m(m));
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        "copy |phi|".into()
    }
}

/// Copies the estimated phase into the copy register, mapping negative
/// phases m in {5,6,7} to 8-m so both eigencomponents record the same
/// magnitude.
pub fn copy_phase_and_fix_sign(state: &mut SparseState, ctx: &SharingContext) -> Result<()> {
    for (label, _) in state.branches() {
        let m = label.field(ctx.phase);
        if m % 2 == 1 {
            return Err(Error::Integrity(format!("non-canonical phase value m={m}")));
        }
        if label.field(ctx.phase_copy) != 0 {
            return Err(Error::Integrity("phase copy register must be zeroed".into()));
        }
    }
    state.apply_branch_function(Arc::new(CopyCanonicalPhase {
        phase: ctx.phase,
        copy: ctx.phase_copy,
    }))
}

/// Inverse phase estimation followed by the inverse of G, leaving the
/// original state tensored with the copy register. Does not charge U
/// invocations; flags residual population on the ancilla or phase register.
pub fn uncompute(state: &mut SparseState, ctx: &SharingContext) -> Result<()> {
    let was = state.set_charging(false);
    let run = (|| -> Result<()> {
        state.apply_op(&Op::RegisterUnitary { span: ctx.phase, matrix: qft3_matrix() }, false)?;
        for j in (0..3).rev() {
            let control = ctx.phase.offset + j;
            for _ in 0..(1u32 << j) {
                state.with_controls(&[control], |sub| apply_grover_operator(sub, ctx, true))?;
            }
        }
        let h = hadamard();
        for q in ctx.phase.offset..ctx.phase.end() {
            state.apply_op(&Op::Qubit { qubit: q, matrix: h }, false)?;
        }
        state.apply_op(&g_op(ctx), false)
    })();
    state.set_charging(was);
    run?;
    let residual: f64 = state
        .branches()
        .iter()
        .filter(|(l, _)| l.field(ctx.ancilla) != 0 || l.field(ctx.phase) != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if residual > OFF_SUPPORT_TOL {
        return Err(Error::Integrity(format!(
            "uncomputation left {residual:e} probability on the ancilla/phase registers"
        )));
    }
    Ok(())
}

/// Recovers the partner's bit from one's own bit and the shared phase
/// record: sin^2(pi phi) = (alpha + beta)/2.
pub fn decode_neighbor_bit(alpha: bool, phi: PhaseValue) -> Result<bool> {
    match (alpha, phi.m()) {
        (false, 0) => Ok(false),
        (_, 2) => Ok(!alpha),
        (true, 4) => Ok(true),
        (a, m) => Err(Error::Integrity(format!(
            "inconsistent pair record: alpha={} with m={m}",
            a as u8
        ))),
    }
}

/// Total-map version of the decode used inside branch rewrites: agrees with
/// `decode_neighbor_bit` on every consistent input.
fn decode_bit_total(alpha: bool, m: u64) -> bool {
    if m == 2 {
        !alpha
    } else {
        alpha
    }
}

/// slot ^= phi_table[index]: the net effect of one completed sharing run,
/// recorded into preparation logs in place of its interference steps.
pub struct PhiTableWrite {
    pub index: Span,
    pub slot: Span,
    pub table: Arc<Vec<u8>>,
}

impl BranchBijection for PhiTableWrite {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let i = label.field(self.index) as usize;
        label.xor_field(self.slot, self.table[i] as u64);
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        format!("phi-record@{}", self.slot.offset)
    }
}

/// Where the decoded partner word lands.
#[derive(Debug, Clone, Copy)]
pub enum ShareTarget {
    /// One destination register for every branch.
    Register(Span),
    /// The partner of a branch with pairing bit 0 sits one stride to the
    /// right, so its word goes to `right`; pairing bit 1 goes to `left`.
    /// Only branches passing `activity` (on the index value) are written.
    Routed { index: Span, left: Span, right: Span, activity: Activity },
}

impl ShareTarget {
    fn dest_for(&self, label: &BasisLabel, pairing_qubit: usize) -> Option<Span> {
        match self {
            ShareTarget::Register(span) => Some(*span),
            ShareTarget::Routed { index, left, right, activity } => {
                if !activity.is_active(label.field(*index)) {
                    return None;
                }
                Some(if label.bit(pairing_qubit) { *left } else { *right })
            }
        }
    }
}

/// Writes the decoded partner bits into the destination register.
pub struct DecodeWrite {
    pub source: Span,
    /// (bit offset within the source register, phi slot) pairs.
    pub pairs: Vec<(usize, Span)>,
    pub target: ShareTarget,
    pub pairing_qubit: usize,
}

impl BranchBijection for DecodeWrite {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let Some(dest) = self.target.dest_for(label, self.pairing_qubit) else {
            return;
        };
        for (rel, slot) in &self.pairs {
            let alpha = label.bit(self.source.offset + rel);
            let m = label.field(*slot);
            if decode_bit_total(alpha, m) {
                label.flip_bit(dest.offset + rel);
            }
        }
    }

    fn backward(&self, label: &mut BasisLabel, layout: &RegisterLayout) {
        self.forward(label, layout);
    }

    fn describe(&self) -> String {
        format!("decode {} bits", self.pairs.len())
    }
}

/// m value of the phase record for a bit pair.
pub fn phi_m(alpha: bool, beta: bool) -> u8 {
    match (alpha, beta) {
        (false, false) => 0,
        (true, true) => 4,
        _ => 2,
    }
}

/// Policy for the phase-record registers accumulated by a multi-bit share.
#[derive(Debug, Clone, Copy)]
pub enum PhiSlotPolicy {
    /// Append a fresh 3-qubit slot per shared bit and keep them as garbage.
    FreshPerBit,
    /// Reuse one slot, decoding each bit immediately and erasing the record
    /// by recomputing it from the written neighbor bit. Requires the caller
    /// to pass a zeroed 3-qubit slot.
    Reuse(Span),
}

#[derive(Debug, Clone)]
pub struct ShareSpec {
    pub pairing_qubit: usize,
    pub index: Span,
    pub source: Span,
    pub ancilla: Span,
    pub phase: Span,
    pub target: ShareTarget,
    pub phi_slots: PhiSlotPolicy,
}

#[derive(Debug, Clone)]
pub struct ShareReport {
    /// Phase table per shared bit, indexed by index-register value.
    pub phi_tables: Vec<Arc<Vec<u8>>>,
    /// Phase-record slots used, one per bit.
    pub slots: Vec<Span>,
}

/// Builds the per-index phase table for one data bit from the paired branch
/// contents, validating the two-branch-per-pair, equal-magnitude
/// pre-condition.
fn phi_table_for_bit(
    state: &SparseState,
    index: Span,
    pairing_qubit: usize,
    data_bit: usize,
) -> Result<Arc<Vec<u8>>> {
    if !index.contains_bit(pairing_qubit) {
        return Err(Error::InvalidArgument("pairing qubit must be an index qubit".into()));
    }
    let n = 1usize << index.width;
    let mut bits = vec![None; n];
    let mut mags = vec![0.0f64; n];
    for (label, amp) in state.branches() {
        let i = label.field(index) as usize;
        if bits[i].replace(label.bit(data_bit)).is_some() {
            return Err(Error::Integrity(format!("two branches share index {i}")));
        }
        mags[i] = amp.norm();
    }
    let pair_mask = 1usize << (pairing_qubit - index.offset);
    let mut table = vec![0u8; n];
    for i in 0..n {
        let Some(alpha) = bits[i] else {
            return Err(Error::Integrity(format!("pairing requires a branch at index {i}")));
        };
        let partner = i ^ pair_mask;
        let Some(beta) = bits[partner] else {
            return Err(Error::Integrity(format!("missing pair partner at index {partner}")));
        };
        if (mags[i] - mags[partner]).abs() > 1e-12 {
            return Err(Error::Integrity(format!(
                "pair ({i},{partner}) amplitudes differ: {} vs {}",
                mags[i], mags[partner]
            )));
        }
        table[i] = phi_m(alpha, beta);
    }
    Ok(Arc::new(table))
}

/// Runs the full protocol once for a single data bit, verifies the
/// round trip, and records the net phi write into the history.
fn share_one_bit(
    core: &mut PipelineCore,
    spec: &ShareSpec,
    data_bit: usize,
    slot: Span,
) -> Result<Arc<Vec<u8>>> {
    let ctx = SharingContext::new(
        &core.state,
        core.snapshot(),
        spec.pairing_qubit,
        data_bit,
        spec.ancilla,
        spec.phase,
        slot,
    )?;
    let table = phi_table_for_bit(&core.state, spec.index, spec.pairing_qubit, data_bit)?;
    let before = core.state.clone();

    apply_g(&mut core.state, &ctx)?;
    phase_estimate_3bit(&mut core.state, &ctx)?;
    copy_phase_and_fix_sign(&mut core.state, &ctx)?;
    uncompute(&mut core.state, &ctx)?;

    let phi_write = Arc::new(PhiTableWrite { index: spec.index, slot, table: Arc::clone(&table) });
    let mut expected = before;
    let was = expected.set_charging(false);
    expected.apply_op(&Op::Branch(phi_write.clone()), false)?;
    expected.set_charging(was);
    let fid = core.state.fidelity(&expected)?;
    if fid < 1.0 - ROUND_TRIP_TOL {
        return Err(Error::Integrity(format!(
            "sharing round trip degraded: fidelity {fid}"
        )));
    }
    core.record_applied(Op::Branch(phi_write));
    Ok(table)
}

fn validate_decode(
    state: &SparseState,
    source: Span,
    pairs: &[(usize, Span)],
    target: &ShareTarget,
    pairing_qubit: usize,
) -> Result<()> {
    for (label, _) in state.branches() {
        if target.dest_for(label, pairing_qubit).is_none() {
            continue;
        }
        for (rel, slot) in pairs {
            let alpha = label.bit(source.offset + rel);
            let m = label.field(*slot);
            let phi = PhaseValue::from_m(m as u8)?;
            decode_neighbor_bit(alpha, phi)?;
        }
    }
    Ok(())
}

/// Shares every bit of the source register with each branch's pair partner
/// and writes the decoded partner word to the target. Phase records are
/// retained as garbage (or erased per the slot policy); the source register
/// is untouched.
pub fn share_data_registers(core: &mut PipelineCore, spec: &ShareSpec) -> Result<ShareReport> {
    let mut tables = Vec::with_capacity(spec.source.width);
    let mut slots = Vec::with_capacity(spec.source.width);
    match spec.phi_slots {
        PhiSlotPolicy::FreshPerBit => {
            for rel in 0..spec.source.width {
                let name = core.state.layout().fresh_name("phi");
                let id = core.state.append_register(&name, 3)?;
                let slot = core.state.layout().span(id);
                tables.push(share_one_bit(core, spec, spec.source.offset + rel, slot)?);
                slots.push(slot);
            }
            let pairs: Vec<(usize, Span)> =
                slots.iter().enumerate().map(|(rel, s)| (rel, *s)).collect();
            validate_decode(&core.state, spec.source, &pairs, &spec.target, spec.pairing_qubit)?;
            core.apply_record(Op::Branch(Arc::new(DecodeWrite {
                source: spec.source,
                pairs,
                target: spec.target,
                pairing_qubit: spec.pairing_qubit,
            })))?;
        }
        PhiSlotPolicy::Reuse(slot) => {
            for rel in 0..spec.source.width {
                let table = share_one_bit(core, spec, spec.source.offset + rel, slot)?;
                slots.push(slot);
                let pairs = vec![(rel, slot)];
                validate_decode(
                    &core.state,
                    spec.source,
                    &pairs,
                    &spec.target,
                    spec.pairing_qubit,
                )?;
                core.apply_record(Op::Branch(Arc::new(DecodeWrite {
                    source: spec.source,
                    pairs,
                    target: spec.target,
                    pairing_qubit: spec.pairing_qubit,
                })))?;
                // Maintenance uncompute: reversing the copy clears the slot
                // for the next bit (the inputs are still intact).
                core.apply_record(Op::Branch(Arc::new(PhiTableWrite {
                    index: spec.index,
                    slot,
                    table: Arc::clone(&table),
                })))?;
                tables.push(table);
            }
        }
    }
    Ok(ShareReport { phi_tables: tables, slots })
}
