use std::fmt::Write;

use super::model::{ColumnKind, MilpModel, Sense};

fn sanitize(prefix: char, idx: usize, name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{prefix}{idx}_{clean}")
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut first = true;
    let mut any = false;
    for (name, a) in terms {
        if a == 0.0 {
            continue;
        }
        any = true;
        let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
        let mag = a.abs();
        if first {
            let _ = write!(out, "{sign}{mag:?} {name}");
        } else {
            let _ = write!(out, " {sign} {mag:?} {name}");
        }
        first = false;
    }
    if !any {
        out.push_str("0");
    }
}

/// Renders the model in CPLEX LP syntax.
pub fn to_lp_string(model: &MilpModel) -> String {
    let names: Vec<String> = model
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| sanitize('c', i, &c.name))
        .collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj: ");
    write_terms(
        &mut out,
        model
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (names[i].clone(), c.cost)),
    );
    out.push_str("\nSubject To\n");
    for (ri, row) in model.rows.iter().enumerate() {
        let terms = || row.terms.iter().map(|(c, a)| (names[c.0].clone(), *a));
        let rname = sanitize('r', ri, &row.name);
        if row.lower == row.upper {
            let _ = write!(out, " {rname}: ");
            write_terms(&mut out, terms());
            let _ = writeln!(out, " = {:?}", row.lower);
            continue;
        }
        if row.lower.is_finite() {
            let _ = write!(out, " {rname}_lo: ");
            write_terms(&mut out, terms());
            let _ = writeln!(out, " >= {:?}", row.lower);
        }
        if row.upper.is_finite() {
            let _ = write!(out, " {rname}_up: ");
            write_terms(&mut out, terms());
            let _ = writeln!(out, " <= {:?}", row.upper);
        }
    }
    out.push_str("Bounds\n");
    for (i, c) in model.columns.iter().enumerate() {
        let n = &names[i];
        match (c.lower.is_finite(), c.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {n} free");
            }
            (true, true) => {
                let _ = writeln!(out, " {:?} <= {n} <= {:?}", c.lower, c.upper);
            }
            (true, false) => {
                let _ = writeln!(out, " {n} >= {:?}", c.lower);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {n} <= {:?}", c.upper);
            }
        }
    }
    let bins: Vec<&String> = model
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ColumnKind::Binary)
        .map(|(i, _)| &names[i])
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for n in bins {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::ObjectiveKind;
    use crate::fixtures::toy_market;
    use crate::milp_builder::{build_umfs, restrict_to_pcr, set_objective};

    #[test]
    fn toy_export_has_all_sections() {
        let inst = toy_market();
        let m = set_objective(
            restrict_to_pcr(build_umfs(&inst).unwrap()).unwrap(),
            &inst,
            ObjectiveKind::Welfare,
        )
        .unwrap();
        let lp = to_lp_string(&m);
        for section in ["Maximize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(lp.contains(section), "missing {section}");
        }
        assert!(lp.contains("y_C_"));
        assert!(!lp.contains('['));
    }
}
