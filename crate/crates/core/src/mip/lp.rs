use std::fmt::Write;

use super::model::{MipModel, Sense};

fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .map(|c| if c == '[' || c == ']' { '_' } else { c })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert(0, 'v');
    }
    out
}

fn write_terms<'a>(out: &mut String, terms: impl Iterator<Item = (f64, &'a str)>) {
    let mut first = true;
    let mut on_line = 0;
    for (c, name) in terms {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { " -" } else if first { "" } else { " +" };
        let mag = c.abs();
        if mag == 1.0 {
            let _ = write!(out, "{sign} {name}");
        } else {
            let _ = write!(out, "{sign} {mag} {name}");
        }
        first = false;
        on_line += 1;
        if on_line == 8 {
            out.push_str("\n   ");
            on_line = 0;
        }
    }
    if first {
        out.push_str(" 0");
    }
}

/// Render the model in LP file format (minimize, `Binary` section, fixings as bounds).
pub fn write_lp(m: &MipModel) -> String {
    let names: Vec<String> = m.var_names().iter().map(|n| sanitize(n)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", m.name());
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, m.objective().iter().zip(&names).map(|(&c, n)| (c, n.as_str())));
    if m.objective_offset() != 0.0 {
        let off = m.objective_offset();
        let _ = write!(out, " {} {}", if off < 0.0 { "-" } else { "+" }, off.abs());
    }
    out.push_str("\nSubject To\n");
    for (i, c) in m.constraints().iter().enumerate() {
        let _ = write!(out, " c{}_{}:", i, sanitize(&c.name));
        write_terms(&mut out, c.terms.iter().map(|&(v, a)| (a as f64, names[v.index()].as_str())));
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    let fixed: Vec<(usize, bool)> =
        m.fixings().iter().enumerate().filter_map(|(i, f)| f.map(|v| (i, v))).collect();
    if !fixed.is_empty() {
        out.push_str("Bounds\n");
        for (i, v) in fixed {
            let _ = writeln!(out, " {} = {}", names[i], v as u8);
        }
    }
    out.push_str("Binary\n");
    for chunk in names.chunks(10) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_model_text() {
        let mut m = MipModel::new("demo");
        let x = m.add_var("x[0,1]", 2.0);
        let y = m.add_var("y", -1.0);
        m.add_constraint("link", vec![(x, 1), (y, -1)], Sense::Ge, 0).unwrap();
        m.fix(y, true);
        let text = write_lp(&m);
        assert_eq!(
            text,
            "\\ Problem: demo\nMinimize\n obj: 2 x_0_1_ - y\nSubject To\n c0_link: x_0_1_ - y >= 0\nBounds\n y = 1\nBinary\n x_0_1_ y\nEnd\n"
        );
    }
}
