//! CSV tables with a `#` preamble.
//!
//! Preamble lines of the form `# key=value` echo the run configuration and
//! nothing else; derived facts and timing go on `## ` lines.

use std::fmt::Write as _;

use amdi_core::rates::{RateError, RatePoint};

use crate::config::RunConfig;

/// Columns of a scan table.
pub const SCAN_COLUMNS: [&str; 14] = [
    "distance_km",
    "eta_ch",
    "p_qnd",
    "p_c_z",
    "p_nc_z",
    "p_c_x",
    "p_nc_x",
    "e_x",
    "e_z",
    "r_sifted",
    "r_secret_per_pulse",
    "r_secret_per_second",
    "qber",
    "status",
];

/// Per-detector columns of a comparison table, prefixed by the detector
/// name.
pub const COMPARE_FIELDS: [&str; 12] = [
    "p_qnd",
    "p_c_z",
    "p_nc_z",
    "p_c_x",
    "p_nc_x",
    "e_x",
    "e_z",
    "r_sifted",
    "r_secret_per_pulse",
    "r_secret_per_second",
    "qber",
    "status",
];

/// Threshold minus PNR, except the first which is relative to PNR.
pub const DIFF_COLUMNS: [&str; 3] = ["rel_diff_r_sifted", "diff_r_secret_per_pulse", "diff_qber"];

/// Zero prints as `0`; everything else in shortest round-trip exponent form.
pub fn number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:e}")
    }
}

fn point_fields(p: &RatePoint) -> [String; 11] {
    let b = &p.bundle;
    [
        b.p_qnd,
        b.p_c_z,
        b.p_nc_z,
        b.p_c_x,
        b.p_nc_x,
        p.e_x,
        p.e_z,
        p.r_sifted,
        p.r_secret_per_pulse,
        p.r_secret_per_second,
        p.qber,
    ]
    .map(number)
}

/// Failed points keep empty numeric cells and put the error in `status`.
fn result_fields(r: &Result<RatePoint, RateError>) -> Vec<String> {
    match r {
        Ok(p) => {
            let mut v = point_fields(p).to_vec();
            v.push("ok".into());
            v
        }
        Err(e) => {
            let mut v = vec![String::new(); 11];
            v.push(format!("error: {}", e.to_string().replace('\n', " ")));
            v
        }
    }
}

pub fn preamble(title: &str, cfg: &RunConfig, notes: &[String], timing: Option<&str>) -> String {
    let mut out = format!("## {title}\n");
    for (k, v) in cfg.entries() {
        let _ = writeln!(out, "# {k}={v}");
    }
    for n in notes {
        let _ = writeln!(out, "## {n}");
    }
    if let Some(t) = timing {
        let _ = writeln!(out, "## {t}");
    }
    out
}

fn csv_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

pub fn scan_table(distances: &[f64], eta_ch: impl Fn(f64) -> f64, points: &[Result<RatePoint, RateError>]) -> String {
    let header: Vec<String> = SCAN_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = distances
        .iter()
        .zip(points)
        .map(|(&d, r)| {
            let mut row = vec![d.to_string(), number(eta_ch(d))];
            row.extend(result_fields(r));
            row
        })
        .collect();
    csv_rows(&header, &rows)
}

pub fn compare_table(
    distances: &[f64],
    eta_ch: impl Fn(f64) -> f64,
    pnr: &[Result<RatePoint, RateError>],
    threshold: &[Result<RatePoint, RateError>],
) -> String {
    let mut header = vec!["distance_km".to_string(), "eta_ch".to_string()];
    for kind in ["pnr", "threshold"] {
        header.extend(COMPARE_FIELDS.iter().map(|f| format!("{kind}_{f}")));
    }
    header.extend(DIFF_COLUMNS.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = distances
        .iter()
        .zip(pnr.iter().zip(threshold))
        .map(|(&d, (a, b))| {
            let mut row = vec![d.to_string(), number(eta_ch(d))];
            row.extend(result_fields(a));
            row.extend(result_fields(b));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let rel =
                        if a.r_sifted == 0.0 { String::new() } else { number((b.r_sifted - a.r_sifted) / a.r_sifted) };
                    row.extend([rel, number(b.r_secret_per_pulse - a.r_secret_per_pulse), number(b.qber - a.qber)]);
                }
                _ => row.extend(vec![String::new(); DIFF_COLUMNS.len()]),
            }
            row
        })
        .collect();
    csv_rows(&header, &rows)
}
