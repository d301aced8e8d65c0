//! Human-readable report formatting.

use std::fmt::Write;

use perf_charter_core::sched::Schedule;

/// `x` with at most `digits` significant digits, `%g` style: fixed notation
/// for exponents in `[-4, digits)`, scientific otherwise, trailing zeros
/// removed.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

/// Six significant digits, the precision used in every printed report.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn is_numeric(cell: &str) -> bool {
    cell.is_empty() || cell.trim_end_matches('%').parse::<f64>().is_ok()
}

/// Columns whose cells are all numbers (optionally with `%`) are
/// right-aligned, all others left-aligned.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let right: Vec<bool> = (0..cols)
        .map(|j| !rows.is_empty() && rows.iter().all(|r| r.get(j).is_none_or(|c| is_numeric(c))))
        .collect();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        for (j, cell) in cells.enumerate().take(cols) {
            if j > 0 {
                out.push_str("  ");
            }
            let pad = width[j] - cell.chars().count();
            if !right[j] {
                out.push_str(cell);
                if j + 1 < cols {
                    out.push_str(&" ".repeat(pad));
                }
            } else {
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
        }
        out.push('\n');
    };
    line(&mut out, &mut header.iter().copied());
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &mut rule.iter().map(String::as_str));
    for r in rows {
        line(&mut out, &mut r.iter().map(String::as_str));
    }
    out
}

/// Symbol for the `i`-th job in Gantt charts.
pub fn job_symbol(i: usize) -> char {
    const SYMBOLS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    SYMBOLS.get(i).map_or('#', |&b| b as char)
}

/// One text row per GPU, `columns` characters wide; each cell shows the job
/// running at the cell's midpoint, `.` when idle.
pub fn ascii_gantt(schedule: &Schedule, columns: usize) -> String {
    let columns = columns.max(1);
    let mut out = String::new();
    let span = schedule.makespan;
    let label_width = format!("GPU{}", schedule.gpu_count.saturating_sub(1)).len();
    for g in 0..schedule.gpu_count {
        let mut row = String::with_capacity(columns);
        for c in 0..columns {
            let t = span * (c as f64 + 0.5) / columns as f64;
            let sym = schedule
                .placements
                .iter()
                .enumerate()
                .find(|(_, p)| p.gpu_ids.contains(&g) && p.start <= t && t < p.end)
                .map_or('.', |(i, _)| job_symbol(i));
            row.push(sym);
        }
        let _ = writeln!(out, "{:<label_width$} |{row}|", format!("GPU{g}"));
    }
    let _ = writeln!(
        out,
        "{:<label_width$}  0{:>width$}",
        "",
        format!("{} min", sig6(span)),
        width = columns.saturating_sub(1)
    );
    for (i, p) in schedule.placements.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {} {}  width {}  {} to {} min",
            job_symbol(i),
            p.job,
            p.width,
            sig6(p.start),
            sig6(p.end)
        );
    }
    out
}
