//! Gate accounting.

/// Monotone tallies per gate class, plus the count of state-preparation
/// operator invocations that the sharing cost formulas are written in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateCounter {
    pub single_qubit: u64,
    pub register_unitary: u64,
    pub controlled: u64,
    pub reflection: u64,
    pub branch_function: u64,
    pub u_invocations: u64,
}

impl GateCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_gates(&self) -> u64 {
        self.single_qubit
            + self.register_unitary
            + self.controlled
            + self.reflection
            + self.branch_function
    }

    pub fn absorb(&mut self, other: &GateCounter) {
        self.single_qubit += other.single_qubit;
        self.register_unitary += other.register_unitary;
        self.controlled += other.controlled;
        self.reflection += other.reflection;
        self.branch_function += other.branch_function;
        self.u_invocations += other.u_invocations;
    }
}
