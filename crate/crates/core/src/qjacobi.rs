//! Quantum Jacobi pipeline.
//!
//! The encoded state keeps one branch per grid point. Each sweep gathers
//! both neighbor words into dedicated registers (a pair share across one
//! index bit, a cyclic shift, a second share, the shift undone, and a
//! reversible boundary overwrite at the two wrap branches), then applies
//! the Jacobi update as a branch-level rewrite: the old solution and the
//! consumed neighbor words move to garbage and the new word is computed
//! with the shared fixed-point kernels, so decoded iterates are
//! bit-identical to the classical fixed-point solver.

use crate::classical::fixed::{ghost_words, jacobi_iterates_fixed, rhs_scaled_table};
use crate::classical::problem::{GridProblem, Side};
use crate::encoding::{jacobi_raw, DataWord, FixedPointFormat};
use crate::error::{Error, Result};
use crate::pipeline::{Activity, BoundaryFix, CyclicShift, IndexTableXor, PipelineCore};
use crate::sharing::{share_data_registers, PhiSlotPolicy, ShareSpec, ShareTarget};
use crate::sim::{hadamard, BasisLabel, BranchBijection, Op, RegisterLayout, Span};
use std::sync::Arc;

pub fn sign_extend(v: u64, width: usize) -> i64 {
    let shift = 64 - width as u32;
    ((v << shift) as i64) >> shift
}

pub fn mask_raw(raw: i64, width: usize) -> u64 {
    (raw as u64) & ((1u64 << width) - 1)
}

/// Where a branch update reads its right-hand side.
#[derive(Clone)]
pub enum RhsWords {
    /// Pre-quantized raw(f * dx^2) per index value.
    Table(Arc<Vec<i64>>),
    /// A register holding a stored residual word; the raw value is shifted
    /// left by `shift` (the exact dx^2 ratio between levels).
    Register { span: Span, shift: u32 },
}

impl RhsWords {
    fn eval(&self, label: &BasisLabel, index_value: u64, data_width: usize) -> i64 {
        match self {
            RhsWords::Table(t) => t[index_value as usize],
            RhsWords::Register { span, shift } => {
                sign_extend(label.field(*span), data_width) << *shift
            }
        }
    }
}

/// The reversible Jacobi step: on active branches, moves (solution, left,
/// right) into fresh garbage slots and writes the kernel result into the
/// solution register.
pub struct JacobiUpdateOp {
    pub index: Span,
    pub activity: Activity,
    pub sol: Span,
    pub left: Span,
    pub right: Span,
    pub g_sol: Span,
    pub g_left: Span,
    pub g_right: Span,
    pub rhs: RhsWords,
}

impl JacobiUpdateOp {
    fn kernel(&self, label: &BasisLabel, index_value: u64) -> i64 {
        let k = self.sol.width;
        let l = sign_extend(label.field(self.g_left), k);
        let r = sign_extend(label.field(self.g_right), k);
        jacobi_raw(l, r, self.rhs.eval(label, index_value, k))
    }
}

impl BranchBijection for JacobiUpdateOp {
    fn forward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let i = label.field(self.index);
        if !self.activity.is_active(i) {
            return;
        }
        label.swap_fields(self.sol, self.g_sol);
        label.swap_fields(self.left, self.g_left);
        label.swap_fields(self.right, self.g_right);
        let out = self.kernel(label, i);
        label.xor_field(self.sol, mask_raw(out, self.sol.width));
    }

    fn backward(&self, label: &mut BasisLabel, _layout: &RegisterLayout) {
        let i = label.field(self.index);
        if !self.activity.is_active(i) {
            return;
        }
        let out = self.kernel(label, i);
        label.xor_field(self.sol, mask_raw(out, self.sol.width));
        label.swap_fields(self.right, self.g_right);
        label.swap_fields(self.left, self.g_left);
        label.swap_fields(self.sol, self.g_sol);
    }

    fn describe(&self) -> String {
        "jacobi-update".into()
    }
}

/// One neighbor-gather pass of the sweep engine: which index bit pairs the
/// branches, which register is shared, and which branches consume the
/// decoded words.
pub(crate) struct GatherSpec {
    pub index: Span,
    /// Pairing bit within the index register; the pair stride is 2^bit.
    pub bit: usize,
    pub source: Span,
    pub left: Span,
    pub right: Span,
    pub ancilla: Span,
    pub phase: Span,
    pub consumer: Activity,
    /// Boundary overwrites applied after the gather: (index, side, ghost
    /// word bits).
    pub fixes: Vec<(u64, Side, u64)>,
    pub phi_slots: PhiSlotPolicy,
}

pub(crate) fn gather_engine(core: &mut PipelineCore, g: &GatherSpec) -> Result<()> {
    let pairing_qubit = g.index.offset + g.bit;
    let stride = 1u64 << g.bit;
    let spec1 = ShareSpec {
        pairing_qubit,
        index: g.index,
        source: g.source,
        ancilla: g.ancilla,
        phase: g.phase,
        target: ShareTarget::Routed {
            index: g.index,
            left: g.left,
            right: g.right,
            activity: g.consumer,
        },
        phi_slots: g.phi_slots,
    };
    share_data_registers(core, &spec1)?;
    core.apply_record(Op::Branch(Arc::new(CyclicShift { index: g.index, delta: stride as i64 })))?;
    let shifted = Activity {
        modulus: g.consumer.modulus,
        offset: (g.consumer.offset + stride) % g.consumer.modulus.max(1),
    };
    let spec2 = ShareSpec {
        target: ShareTarget::Routed {
            index: g.index,
            left: g.left,
            right: g.right,
            activity: shifted,
        },
        ..spec1
    };
    share_data_registers(core, &spec2)?;
    core.apply_record(Op::Branch(Arc::new(CyclicShift {
        index: g.index,
        delta: -(stride as i64),
    })))?;
    if !g.fixes.is_empty() {
        let name = core.state.layout().fresh_name("wrap");
        let id = core.state.append_register(&name, g.source.width)?;
        let wrap_slot = core.state.layout().span(id);
        for (at_index, side, ghost_bits) in &g.fixes {
            let target = match side {
                Side::Left => g.left,
                Side::Right => g.right,
            };
            core.apply_record(Op::Branch(Arc::new(BoundaryFix {
                index: g.index,
                at_index: *at_index,
                target,
                wrap_slot,
                ghost_bits: *ghost_bits,
            })))?;
        }
    }
    Ok(())
}

/// Grid-value initial guess.
#[derive(Debug, Clone, Copy)]
pub enum InitialGuess {
    Zero,
    Const(f64),
    /// Straight line between the two ghost values.
    Linear,
}

impl InitialGuess {
    pub fn value(&self, i: u64, problem: &GridProblem) -> f64 {
        match self {
            InitialGuess::Zero => 0.0,
            InitialGuess::Const(v) => *v,
            InitialGuess::Linear => {
                let n = problem.size() as f64;
                let (l, r) = problem.boundary;
                l + (r - l) * (i as f64 + 1.0) / (n + 1.0)
            }
        }
    }
}

pub struct JacobiPipeline {
    pub core: PipelineCore,
    pub problem: GridProblem,
    pub format: FixedPointFormat,
    pub index: Span,
    pub data: Span,
    pub left: Span,
    pub right: Span,
    pub ancilla: Span,
    pub phase: Span,
    pub sweeps_done: u32,
    rhs_table: Arc<Vec<i64>>,
    ghosts: (DataWord, DataWord),
}

impl JacobiPipeline {
    /// Builds the encoded state: uniform index superposition with the
    /// quantized guess in every branch's data register. The layout cap is
    /// sized for `sweeps_hint` sweeps of garbage growth.
    pub fn prepare_initial_state(
        problem: GridProblem,
        guess: InitialGuess,
        format: FixedPointFormat,
        sweeps_hint: u32,
    ) -> Result<Self> {
        let n = problem.n as usize;
        let k = format.bits() as usize;
        let base = n + 3 * k + 1 + 3;
        let per_sweep = 2 * 3 * k + 3 * k + k;
        let cap = base + per_sweep * (sweeps_hint as usize + 1) + 64;

        let mut layout = RegisterLayout::with_width_cap(cap);
        let index = layout.append("index", n)?;
        let data = layout.append("data", k)?;
        let left = layout.append("left", k)?;
        let right = layout.append("right", k)?;
        let ancilla = layout.append("ancilla", 1)?;
        let phase = layout.append("phase", 3)?;
        let spans = (
            layout.span(index),
            layout.span(data),
            layout.span(left),
            layout.span(right),
            layout.span(ancilla),
            layout.span(phase),
        );

        let mut core = PipelineCore::new(crate::sim::SparseState::zero(layout));
        for q in spans.0.offset..spans.0.end() {
            core.apply_record(Op::Qubit { qubit: q, matrix: hadamard() })?;
        }
        let guess_words: Vec<u64> = (0..problem.size())
            .map(|i| Ok(format.encode(guess.value(i, &problem))?.bits() as u64))
            .collect::<Result<_>>()?;
        core.apply_record(Op::Branch(Arc::new(IndexTableXor {
            index: spans.0,
            target: spans.1,
            table: Arc::new(guess_words),
            what: "guess",
        })))?;

        let rhs_table = Arc::new(rhs_scaled_table(&problem, &format)?);
        let ghosts = ghost_words(&problem, &format)?;
        Ok(Self {
            core,
            problem,
            format,
            index: spans.0,
            data: spans.1,
            left: spans.2,
            right: spans.3,
            ancilla: spans.4,
            phase: spans.5,
            sweeps_done: 0,
            rhs_table,
            ghosts,
        })
    }

    /// Cyclic shift of the index register: i -> i + delta mod N.
    pub fn cyclic_shift_index(&mut self, delta: i64) -> Result<()> {
        self.core
            .apply_record(Op::Branch(Arc::new(CyclicShift { index: self.index, delta })))
    }

    /// Gathers both neighbor words into the left/right registers, boundary
    /// branches closed with the ghost words.
    pub fn gather_neighbors(&mut self) -> Result<()> {
        self.gather_neighbors_with(PhiSlotPolicy::FreshPerBit)
    }

    pub fn gather_neighbors_with(&mut self, phi_slots: PhiSlotPolicy) -> Result<()> {
        let n_points = self.problem.size();
        let spec = GatherSpec {
            index: self.index,
            bit: 0,
            source: self.data,
            left: self.left,
            right: self.right,
            ancilla: self.ancilla,
            phase: self.phase,
            consumer: Activity::all(),
            fixes: vec![
                (0, Side::Left, self.ghosts.0.bits() as u64),
                (n_points - 1, Side::Right, self.ghosts.1.bits() as u64),
            ],
            phi_slots,
        };
        gather_engine(&mut self.core, &spec)
    }

    /// The branch-level Jacobi step; neighbor registers must be populated.
    pub fn jacobi_update(&mut self) -> Result<()> {
        let k = self.format.bits() as usize;
        let g_sol = self.append_span("gu", k)?;
        let g_left = self.append_span("gl", k)?;
        let g_right = self.append_span("gr", k)?;
        let op = JacobiUpdateOp {
            index: self.index,
            activity: Activity::all(),
            sol: self.data,
            left: self.left,
            right: self.right,
            g_sol,
            g_left,
            g_right,
            rhs: RhsWords::Table(Arc::clone(&self.rhs_table)),
        };
        self.validate_update(&op)?;
        self.core.apply_record(Op::Branch(Arc::new(op)))?;
        self.sweeps_done += 1;
        Ok(())
    }

    fn append_span(&mut self, prefix: &str, width: usize) -> Result<Span> {
        let name = self.core.state.layout().fresh_name(prefix);
        let id = self.core.state.append_register(&name, width)?;
        Ok(self.core.state.layout().span(id))
    }

    /// Checks the update stays in range on every live branch before the
    /// total map is applied.
    fn validate_update(&self, op: &JacobiUpdateOp) -> Result<()> {
        let k = self.format.bits() as usize;
        for (label, _) in self.core.state.branches() {
            let i = label.field(self.index);
            if !op.activity.is_active(i) {
                continue;
            }
            let l = sign_extend(label.field(op.left), k);
            let r = sign_extend(label.field(op.right), k);
            let rhs = match &op.rhs {
                RhsWords::Table(t) => t[i as usize],
                RhsWords::Register { span, shift } => {
                    sign_extend(label.field(*span), k) << *shift
                }
            };
            self.format.word_from_raw(jacobi_raw(l, r, rhs))?;
        }
        Ok(())
    }

    /// One full sweep: gather plus update.
    pub fn sweep(&mut self) -> Result<()> {
        self.gather_neighbors()?;
        self.jacobi_update()
    }

    /// Decoded data register per grid point.
    pub fn decode_data(&self) -> Vec<DataWord> {
        decode_register(&self.core, self.index, self.data, self.format)
    }

    /// Largest deviation of branch amplitude magnitudes from 1/sqrt(N).
    pub fn amplitude_deviation(&self) -> f64 {
        let target = 1.0 / (self.problem.size() as f64).sqrt();
        self.core
            .state
            .branches()
            .iter()
            .map(|(_, a)| (a.norm() - target).abs())
            .fold(0.0, f64::max)
    }

    /// Neighbor registers must be zero at sweep boundaries.
    pub fn neighbors_clean(&self) -> bool {
        self.core
            .state
            .branches()
            .iter()
            .all(|(l, _)| l.field(self.left) == 0 && l.field(self.right) == 0)
    }
}

/// Reads a per-index register out of the branch set.
pub fn decode_register(
    core: &PipelineCore,
    index: Span,
    reg: Span,
    format: FixedPointFormat,
) -> Vec<DataWord> {
    let mut by_index = std::collections::BTreeMap::new();
    for (label, _) in core.state.branches() {
        by_index.insert(label.field(index), format.word_from_bits(label.field(reg) as u16));
    }
    by_index.into_values().collect()
}

#[derive(Debug, Clone)]
pub struct JacobiRunReport {
    pub decoded_per_sweep: Vec<Vec<DataWord>>,
    pub oracle_per_sweep: Vec<Vec<DataWord>>,
    pub bit_exact: bool,
    pub max_amplitude_deviation: f64,
    /// Total register width after each sweep (garbage growth check).
    pub width_per_sweep: Vec<usize>,
    pub u_invocations: u64,
}

/// Runs `sweeps` sweeps and compares every decoded iterate with the
/// classical fixed-point oracle.
pub fn run_quantum_jacobi(
    problem: GridProblem,
    guess: InitialGuess,
    sweeps: u32,
    format: FixedPointFormat,
) -> Result<(JacobiPipeline, JacobiRunReport)> {
    let mut pipe = JacobiPipeline::prepare_initial_state(problem.clone(), guess, format, sweeps)?;
    let guess_words: Vec<DataWord> = (0..problem.size())
        .map(|i| format.encode(guess.value(i, &problem)))
        .collect::<Result<_>>()?;
    let oracle = jacobi_iterates_fixed(&problem, &guess_words, sweeps, &format)?;
    let mut decoded = Vec::with_capacity(sweeps as usize);
    let mut widths = Vec::with_capacity(sweeps as usize);
    let mut amp_dev = pipe.amplitude_deviation();
    for _ in 0..sweeps {
        pipe.sweep()?;
        decoded.push(pipe.decode_data());
        widths.push(pipe.core.state.layout().total_width());
        amp_dev = amp_dev.max(pipe.amplitude_deviation());
    }
    let bit_exact = decoded == oracle;
    let u = pipe.core.state.counter().u_invocations;
    Ok((
        pipe,
        JacobiRunReport {
            decoded_per_sweep: decoded,
            oracle_per_sweep: oracle,
            bit_exact,
            max_amplitude_deviation: amp_dev,
            width_per_sweep: widths,
            u_invocations: u,
        },
    ))
}
