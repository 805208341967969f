use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ExitCodeExt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

const SIG_DIGITS: i32 = 12;

/// Fixed notation with 12 significant digits.
pub fn fmt_sig12(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.99.. -> 10.0..).
    let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if digits > SIG_DIGITS as usize && decimals > 0 {
        let decimals = decimals - 1;
        format!("{x:.decimals$}")
    } else {
        s
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).or_io()?;
    for row in rows {
        w.write_record(row).or_io()?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error()).or_io()?;
    String::from_utf8(bytes).or_io()
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).or_usage()?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("cannot write {}", p.display()))
            .or_io(),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .context("cannot write to stdout")
                .or_io()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(1.0535714285714286), "1.05357142857");
        assert_eq!(fmt_sig12(0.10714285714285714), "0.107142857143");
        assert_eq!(fmt_sig12(-0.5329), "-0.532900000000");
        assert_eq!(fmt_sig12(1234.5), "1234.50000000");
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(1e-5), "0.0000100000000000");
        assert_eq!(fmt_sig12(3e13), "30000000000000");
        assert_eq!(fmt_sig12(9.9999999999999), "10.0000000000");
        assert_eq!(fmt_sig12(f64::INFINITY), "inf");
    }

    #[test]
    fn fixed_notation_only() {
        for x in [1e-9, 2.5e-3, 1.0, 7.7e8, 1e15] {
            let s = fmt_sig12(x);
            assert!(!s.contains('e'), "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs(), "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let s = csv_string(&["g", "value"], &[vec!["0".into(), "1.5".into()]]).unwrap();
        assert_eq!(s, "g,value\n0,1.5\n");
    }
}
