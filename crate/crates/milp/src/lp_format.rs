//! Write-only dump in the CPLEX LP text format, for debugging models with
//! external tools.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::model::{MilpModel, ObjSense, Sense, VarKind};

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.!\"#$%&()/,;?@'{}|~".contains(c) { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert(0, '_');
    }
    out
}

fn write_terms(buf: &mut String, names: &[String], terms: &[(crate::VarId, f64)]) {
    if terms.is_empty() {
        buf.push_str(" 0 ");
        buf.push_str(&names[0]);
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        let sign = if c < 0.0 { '-' } else { '+' };
        if k == 0 && c >= 0.0 {
            let _ = write!(buf, " {} {}", c, names[v.0]);
        } else {
            let _ = write!(buf, " {sign} {} {}", c.abs(), names[v.0]);
        }
    }
}

/// Renders the model as LP-format text.
pub fn to_lp_string(model: &MilpModel) -> String {
    let names: Vec<String> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(j, v)| format!("{}_{j}", sanitize(&v.name)))
        .collect();
    let mut buf = String::new();
    buf.push_str(match model.objective().sense {
        ObjSense::Minimize => "Minimize\n",
        ObjSense::Maximize => "Maximize\n",
    });
    buf.push_str(" obj:");
    if model.num_vars() > 0 {
        write_terms(&mut buf, &names, &model.objective().expr.compact().terms);
    }
    buf.push_str("\nSubject To\n");
    for (i, c) in model.constraints().iter().enumerate() {
        let _ = write!(buf, " {}_{i}:", sanitize(&c.name));
        write_terms(&mut buf, &names, &c.terms);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(buf, " {op} {}", c.rhs);
    }
    buf.push_str("Bounds\n");
    for (v, name) in model.vars().iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => {
                let _ = writeln!(buf, " {} <= {name} <= {}", v.lower, v.upper);
            }
            (true, false) => {
                let _ = writeln!(buf, " {name} >= {}", v.lower);
            }
            (false, true) => {
                let _ = writeln!(buf, " -inf <= {name} <= {}", v.upper);
            }
            (false, false) => {
                let _ = writeln!(buf, " {name} free");
            }
        }
    }
    for (kind, header) in [(VarKind::Integer, "General"), (VarKind::Binary, "Binary")] {
        let list: Vec<&String> =
            model.vars().iter().zip(&names).filter(|(v, _)| v.kind == kind).map(|(_, n)| n).collect();
        if !list.is_empty() {
            let _ = writeln!(buf, "{header}");
            for n in list {
                let _ = writeln!(buf, " {n}");
            }
        }
    }
    buf.push_str("End\n");
    buf
}

pub fn write_lp<W: Write>(model: &MilpModel, mut out: W) -> io::Result<()> {
    out.write_all(to_lp_string(model).as_bytes())
}
