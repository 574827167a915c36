//! Text formatting shared by CSV and report writers.

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // Normalise negative zero so identical values print identically.
        return "0".to_string();
    }
    format!("{v:.16e}")
}

/// Writes rows of numbers (with an optional leading integer column) as CSV.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
