//! Writer for the CPLEX-style LP text format.

use std::fmt::Write;

use crate::model::{LinearProgram, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.()[]{}!\"#$%&,;?@'`~|".contains(c) { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E') {
        out.insert(0, '_');
    }
    out
}

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&names.first().cloned().unwrap_or_else(|| "_zero".into()));
        return;
    }
    for (n, &(j, a)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        if n == 0 && sign == '+' {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        let mag = a.abs();
        if mag == 1.0 {
            out.push_str(&names[j]);
        } else {
            let _ = write!(out, "{} {}", number(mag), names[j]);
        }
    }
}

/// Renders `lp` in the LP text format read by common external solvers.
pub fn export_lp(lp: &LinearProgram) -> String {
    let names: Vec<String> = lp
        .variables()
        .iter()
        .enumerate()
        .map(|(j, v)| if v.name.is_empty() { format!("_v{j}") } else { sanitize(&v.name) })
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {} variables, {} constraints", lp.num_vars(), lp.num_constraints());
    out.push_str(match lp.sense() {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let obj: Vec<(usize, f64)> = lp
        .objective()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (j, c))
        .collect();
    out.push_str(" obj:");
    write_terms(&mut out, &obj, &names);
    out.push('\n');
    out.push_str("Subject To\n");
    for (i, c) in lp.constraints().iter().enumerate() {
        let row = if c.name.is_empty() { format!("c{i}") } else { sanitize(&c.name) };
        let _ = write!(out, " {row}:");
        write_terms(&mut out, &c.coeffs, &names);
        let _ = writeln!(out, " {} {}", c.relation.symbol(), number(c.rhs));
    }
    let bounded: Vec<String> = lp
        .variables()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Continuous && !(v.lower == 0.0 && v.upper == f64::INFINITY))
        .map(|(v, n)| {
            if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
                format!(" {n} free")
            } else if v.lower == v.upper {
                format!(" {n} = {}", number(v.lower))
            } else {
                format!(" {} <= {n} <= {}", number(v.lower), number(v.upper))
            }
        })
        .collect();
    if !bounded.is_empty() {
        out.push_str("Bounds\n");
        for line in bounded {
            out.push_str(&line);
            out.push('\n');
        }
    }
    let binaries: Vec<&String> = lp
        .variables()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(&chunk.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}
