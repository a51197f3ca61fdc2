//! Text renderings: aligned tables with six significant digits, CSV with
//! full precision.

use num_complex::Complex64;

/// `x` to six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let decimals = (5 - a.log10().floor() as i32).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        // Rounding can carry into a new leading digit, e.g. 999999.7.
        if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 6 {
            return sci(x);
        }
        if s == "-0" {
            return "0".into();
        }
        s
    } else {
        sci(x)
    }
}

fn sci(x: f64) -> String {
    let s = format!("{x:.5e}");
    match s.split_once('e') {
        Some((m, e)) if m.contains('.') => {
            format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.'))
        }
        _ => s,
    }
}

pub fn complex6(c: Complex64) -> String {
    if c.im == 0.0 {
        return sig6(c.re);
    }
    let im = sig6(c.im.abs());
    let sign = if c.im < 0.0 { '-' } else { '+' };
    if c.re == 0.0 {
        return format!("{}{im}i", if c.im < 0.0 { "-" } else { "" });
    }
    format!("{}{sign}{im}i", sig6(c.re))
}

/// Full-precision complex value for CSV cells.
pub fn complex_full(c: Complex64) -> String {
    format!("{}{:+}i", c.re, c.im)
}

/// Left-aligned fixed-width columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            s.push_str(cell);
            if i + 1 < cols {
                let pad = width[i] - cell.chars().count() + 2;
                s.extend(std::iter::repeat_n(' ', pad));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

/// Two-column key/value block.
pub fn pairs(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<w$}  {v}\n"))
        .collect()
}

/// A CSV cell, quoted when needed.
pub fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row<S: AsRef<str>>(cells: &[S]) -> String {
    cells
        .iter()
        .map(|c| csv_cell(c.as_ref()))
        .collect::<Vec<_>>()
        .join(",")
        + "\n"
}
