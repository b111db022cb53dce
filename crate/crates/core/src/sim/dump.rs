//! CSV state dumps: one record per branch with the hexadecimal label, every
//! register decoded as an unsigned field, and the amplitude at 17
//! significant digits.

use crate::sim::state::SparseState;
use std::io::{self, Write};

pub fn write_csv<W: Write>(state: &SparseState, out: &mut W) -> io::Result<()> {
    let layout = state.layout();
    write!(out, "label_hex")?;
    for reg in layout.registers() {
        write!(out, ",{}", reg.name)?;
    }
    writeln!(out, ",amp_re,amp_im")?;
    let width = layout.total_width();
    for (label, amp) in state.branches() {
        write!(out, "{}", label.to_hex(width))?;
        for reg in layout.registers() {
            write!(out, ",{}", label.field(reg.span))?;
        }
        writeln!(out, ",{:.16e},{:.16e}", amp.re, amp.im)?;
    }
    Ok(())
}

pub fn to_csv_string(state: &SparseState) -> String {
    let mut buf = Vec::new();
    write_csv(state, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv dump is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::layout::RegisterLayout;
    use crate::sim::state::SparseState;

    #[test]
    fn dump_has_one_row_per_branch_and_decodes_fields() {
        let mut lay = RegisterLayout::new();
        let idx = lay.append("index", 2).unwrap();
        lay.append("data", 4).unwrap();
        let s = SparseState::prepare_uniform_index(lay, idx).unwrap();
        let text = to_csv_string(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "label_hex,index,data,amp_re,amp_im");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("00,0,0,"));
        assert!(lines[2].starts_with("01,1,0,"));
        // 17 significant digits
        assert!(lines[1].contains("5.0000000000000000e-1"));
    }
}
