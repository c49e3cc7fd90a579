use std::io::Write;

use super::sweep::SweepRecord;

pub const CSV_HEADER: &str =
    "b_over_a,n_t,match_kind,r_matched,t_g,energy_at_tg,n_0,n_r,n_g,ratio_r0,ratio_rg,cutoff,conv_delta";
const COLUMNS: usize = 13;

/// Twelve significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.11e}")
    }
}

fn opt(x: Option<f64>, missing: &str) -> String {
    x.map(format_value).unwrap_or_else(|| missing.to_string())
}

pub fn write_csv<W: Write>(mut out: W, records: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for rec in records {
        let head = [format_value(rec.b_over_a), format_value(rec.n_t), rec.match_kind.to_string()];
        let tail: Vec<String> = match &rec.outcome {
            Ok(p) => vec![
                format_value(p.r_matched),
                format_value(p.t_g),
                format_value(p.energy_at_tg),
                format_value(p.n_0),
                format_value(p.n_r),
                format_value(p.n_g),
                opt(p.ratio_r0, "undefined"),
                opt(p.ratio_rg, "undefined"),
                p.cutoff.to_string(),
                opt(p.conv_delta, "unchecked"),
            ],
            Err(reason) => {
                let clean: String = reason.chars().map(|c| if c == ',' || c == '\n' { ';' } else { c }).collect();
                let mut cols = vec![format!("error={clean}")];
                cols.resize(COLUMNS - head.len(), String::new());
                cols
            }
        };
        writeln!(out, "{},{}", head.join(","), tail.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::{MatchKind, SweepPoint};

    #[test]
    fn formatting() {
        assert_eq!(format_value(0.05), "5.00000000000e-2");
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!(CSV_HEADER.split(',').count(), COLUMNS);
    }

    #[test]
    fn rows_have_fixed_width() {
        let ok = SweepRecord {
            b_over_a: 0.1,
            n_t: 0.1 / 0.9,
            match_kind: MatchKind::Energy,
            outcome: Ok(SweepPoint {
                r_matched: 0.3,
                t_g: 1.0,
                energy_at_tg: 0.2,
                n_0: 0.0,
                n_r: 0.0,
                n_g: 0.1,
                ratio_r0: None,
                ratio_rg: Some(0.0),
                cutoff: 12,
                conv_delta: None,
            }),
        };
        let bad = SweepRecord { outcome: Err("cutoff 12, too small".into()), ..ok.clone() };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[ok, bad]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        for line in &lines {
            assert_eq!(line.split(',').count(), COLUMNS, "{line}");
        }
        assert!(lines[1].contains("undefined") && lines[1].ends_with("unchecked"));
        assert!(lines[2].contains("error=cutoff 12; too small"));
    }
}
