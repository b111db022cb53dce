//! Named register layout over a single qubit line.
//!
//! Registers are contiguous, disjoint, and append-only: adding a register
//! never moves an existing one. The layout carries a width cap (64 qubits by
//! default); pipelines that deliberately accumulate wide garbage construct
//! their layouts with a larger cap.

use crate::error::{Error, Result};
use crate::sim::label::Span;

pub const DEFAULT_WIDTH_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RegisterId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterInfo {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    regs: Vec<RegisterInfo>,
    total_width: usize,
    width_cap: usize,
}

impl RegisterLayout {
    pub fn new() -> Self {
        Self::with_width_cap(DEFAULT_WIDTH_CAP)
    }

    pub fn with_width_cap(width_cap: usize) -> Self {
        Self { regs: Vec::new(), total_width: 0, width_cap }
    }

    /// Appends a register after all existing ones.
    pub fn append(&mut self, name: &str, width: usize) -> Result<RegisterId> {
        if width == 0 {
            return Err(Error::InvalidArgument(format!("register `{name}` has width 0")));
        }
        if self.regs.iter().any(|r| r.name == name) {
            return Err(Error::DuplicateRegister(name.to_string()));
        }
        if self.total_width + width > self.width_cap {
            return Err(Error::Capacity {
                requested: self.total_width + width,
                cap: self.width_cap,
            });
        }
        let id = RegisterId(self.regs.len());
        self.regs.push(RegisterInfo {
            name: name.to_string(),
            span: Span::new(self.total_width, width),
        });
        self.total_width += width;
        Ok(id)
    }

    pub fn get(&self, id: RegisterId) -> &RegisterInfo {
        &self.regs[id.0]
    }

    pub fn span(&self, id: RegisterId) -> Span {
        self.regs[id.0].span
    }

    pub fn by_name(&self, name: &str) -> Result<RegisterId> {
        self.regs
            .iter()
            .position(|r| r.name == name)
            .map(RegisterId)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    /// A fresh register name `prefix<counter>` not yet in use.
    pub fn fresh_name(&self, prefix: &str) -> String {
        let mut i = self.regs.len();
        loop {
            let candidate = format!("{prefix}{i}");
            if self.regs.iter().all(|r| r.name != candidate) {
                return candidate;
            }
            i += 1;
        }
    }

    pub fn registers(&self) -> impl Iterator<Item = &RegisterInfo> {
        self.regs.iter()
    }

    pub fn total_width(&self) -> usize {
        self.total_width
    }

    pub fn width_cap(&self) -> usize {
        self.width_cap
    }

    pub fn limb_count(&self) -> usize {
        self.total_width.div_ceil(64).max(1)
    }
}

impl Default for RegisterLayout {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_contiguous_and_stable() {
        let mut lay = RegisterLayout::new();
        let a = lay.append("index", 2).unwrap();
        let b = lay.append("data", 8).unwrap();
        assert_eq!(lay.span(a), Span::new(0, 2));
        assert_eq!(lay.span(b), Span::new(2, 8));
        let before = lay.span(a);
        lay.append("work", 4).unwrap();
        assert_eq!(lay.span(a), before);
        assert_eq!(lay.total_width(), 14);
    }

    #[test]
    fn default_cap_is_64_bits() {
        let mut lay = RegisterLayout::new();
        lay.append("wide", 60).unwrap();
        assert!(matches!(
            lay.append("more", 5),
            Err(Error::Capacity { requested: 65, cap: 64 })
        ));
    }

    #[test]
    fn raised_cap_allows_wide_layouts() {
        let mut lay = RegisterLayout::with_width_cap(512);
        for i in 0..6 {
            lay.append(&format!("g{i}"), 64).unwrap();
        }
        assert_eq!(lay.total_width(), 384);
        assert_eq!(lay.limb_count(), 6);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut lay = RegisterLayout::new();
        lay.append("index", 2).unwrap();
        assert!(matches!(lay.append("index", 2), Err(Error::DuplicateRegister(_))));
    }

    #[test]
    fn fresh_names_do_not_collide() {
        let mut lay = RegisterLayout::with_width_cap(128);
        lay.append("phi0", 3).unwrap();
        let name = lay.fresh_name("phi");
        assert_ne!(name, "phi0");
        lay.append(&name, 3).unwrap();
    }
}
