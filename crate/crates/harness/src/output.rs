//! CSV, summary JSON and SVG outputs for run records.
//!
//! `population.csv`: `t, g_<lineage>..., f_bar, rho_acs_<lineage>..., rho_aut_<lineage>...`
//!
//! `macro.csv`: `t, pi_h, pi_m, gamma, dependence, delta_aut, lever, feedback_active`
//!
//! Reals are printed with 17 significant digits, flags as `true`/`false`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{HarnessError, Result};
use crate::run::{Journal, JournalEntry, MacroRow, PopulationRow, RunRecord};

pub const POPULATION_CSV: &str = "population.csv";
pub const MACRO_CSV: &str = "macro.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const JOURNAL_JSON: &str = "journal.json";
pub const PREVALENCE_SVG: &str = "prevalence.svg";
pub const MACRO_SVG: &str = "macro.svg";

#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    pub svg: bool,
}

/// `%.17g`: shortest of fixed or exponential notation at 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        trim_zeros(&fixed).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn population_header(lineages: &[String]) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(lineages.iter().map(|l| format!("g_{l}")));
    h.push("f_bar".into());
    h.extend(lineages.iter().map(|l| format!("rho_acs_{l}")));
    h.extend(lineages.iter().map(|l| format!("rho_aut_{l}")));
    h
}

pub const MACRO_HEADER: [&str; 8] = [
    "t",
    "pi_h",
    "pi_m",
    "gamma",
    "dependence",
    "delta_aut",
    "lever",
    "feedback_active",
];

pub fn population_fields(row: &PopulationRow) -> Vec<String> {
    let mut f = vec![fmt_real(row.t)];
    f.extend(row.shares.iter().map(|&g| fmt_real(g)));
    f.push(fmt_real(row.f_bar));
    f.extend(row.rho_acs.iter().map(|&x| fmt_real(x)));
    f.extend(row.rho_aut.iter().map(|&x| fmt_real(x)));
    f
}

pub fn macro_fields(row: &MacroRow) -> Vec<String> {
    vec![
        fmt_real(row.t),
        fmt_real(row.pi_h),
        fmt_real(row.pi_m),
        fmt_real(row.gamma),
        fmt_real(row.dependence),
        fmt_real(row.delta_aut),
        fmt_flag(row.lever).into(),
        fmt_flag(row.feedback_active).into(),
    ]
}

fn csv_bytes<I, R>(header: I, rows: impl Iterator<Item = R>) -> Result<Vec<u8>>
where
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
}

pub fn population_csv(record: &RunRecord) -> Result<Vec<u8>> {
    csv_bytes(
        population_header(&record.lineages),
        record.population.iter().map(population_fields),
    )
}

pub fn macro_csv(record: &RunRecord) -> Result<Vec<u8>> {
    csv_bytes(MACRO_HEADER, record.macro_rows.iter().map(macro_fields))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    scenario_hash: &'a str,
    seed: u64,
    dt: f64,
    steps: usize,
    t_final: f64,
    t_crit: Option<f64>,
    fixation_winner: Option<&'a str>,
    lever_first_true: Option<f64>,
    final_shares: serde_json::Map<String, Value>,
    journal: &'a [JournalEntry],
}

pub fn summary_json(record: &RunRecord) -> Result<Vec<u8>> {
    let last = record
        .population
        .last()
        .expect("a record holds at least the initial row");
    let final_shares = record
        .lineages
        .iter()
        .zip(&last.shares)
        .map(|(l, &g)| (l.clone(), Value::from(g)))
        .collect();
    let s = Summary {
        scenario: &record.scenario,
        scenario_hash: &record.scenario_hash,
        seed: record.seed,
        dt: record.dt,
        steps: record.population.len() - 1,
        t_final: last.t,
        t_crit: record.t_crit,
        fixation_winner: record.fixation_winner.as_deref(),
        lever_first_true: record.lever_first_true,
        final_shares,
        journal: &record.journal,
    };
    let mut bytes = serde_json::to_vec_pretty(&s)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes CSVs and the summary (plus SVG charts when asked) into `dir`.
pub fn emit_outputs(record: &RunRecord, dir: &Path, opts: OutputOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut out = vec![
        write(dir, POPULATION_CSV, &population_csv(record)?)?,
        write(dir, MACRO_CSV, &macro_csv(record)?)?,
        write(dir, SUMMARY_JSON, &summary_json(record)?)?,
    ];
    if opts.svg {
        out.push(write(dir, PREVALENCE_SVG, prevalence_svg(record).as_bytes())?);
        out.push(write(dir, MACRO_SVG, macro_svg(record).as_bytes())?);
    }
    Ok(out)
}

pub fn write_journal(journal: &Journal, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(journal)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn read_journal(path: &Path) -> Result<Journal> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| HarnessError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart on a fixed 960x540 canvas, axes scaled to the data range.
pub fn line_chart(title: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let (x0, x1) = span(x.iter().copied());
    let (y0, y1) = span(series.iter().flat_map(|(_, ys)| ys.iter().copied()));
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        xml_escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<polyline points="{left},{top} {left},{bottom} {right},{bottom}" fill="none" stroke="black"/>"#
    );
    for (label, x, y, anchor) in [
        (fmt_tick(y1), left - 6.0, top + 4.0, "end"),
        (fmt_tick(y0), left - 6.0, bottom + 4.0, "end"),
        (fmt_tick(x0), left, bottom + 18.0, "middle"),
        (fmt_tick(x1), right, bottom + 18.0, "middle"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{label}</text>"#
        );
    }
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = x
            .iter()
            .zip(ys)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            right - 150.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.4}")
}

pub fn prevalence_svg(record: &RunRecord) -> String {
    let x: Vec<f64> = record.population.iter().map(|r| r.t).collect();
    let series: Vec<(String, Vec<f64>)> = record
        .lineages
        .iter()
        .enumerate()
        .map(|(i, l)| {
            (
                format!("g_{l}"),
                record.population.iter().map(|r| r.shares[i]).collect(),
            )
        })
        .collect();
    line_chart("Lineage prevalence", &x, &series)
}

pub fn macro_svg(record: &RunRecord) -> String {
    let rows = &record.macro_rows;
    let x: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let series = vec![
        ("dependence".to_string(), rows.iter().map(|r| r.dependence).collect()),
        ("gamma".to_string(), rows.iter().map(|r| r.gamma).collect()),
        ("delta_aut".to_string(), rows.iter().map(|r| r.delta_aut).collect()),
    ];
    line_chart("Dependence, capability gap and autarky advantage", &x, &series)
}
