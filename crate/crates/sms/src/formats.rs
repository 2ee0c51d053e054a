//! Text formats for characteristic curves (`SMSCURVES v1`), learned trees
//! (`SMSTREE v1`) and the curve plot table.
//!
//! Both formats start with their magic line. `#` comment lines may follow
//! anywhere after it and are ignored on load. Reals are written with 17
//! significant digits, which round-trips `f64` exactly.

use std::io::Write;
use std::path::Path;

use sms_core::curves::{rho_grid, PriorSpec};
use sms_core::{CharacteristicCurve, CopulaFamily, CopulaTree, TreeEdge};

use crate::data::{write_atomic, write_comments};
use crate::error::{Error, Result};

pub const CURVES_MAGIC: &str = "SMSCURVES v1";
pub const TREE_MAGIC: &str = "SMSTREE v1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_curves(
    w: &mut impl Write,
    curves: &[CharacteristicCurve],
    comments: &[String],
) -> std::io::Result<()> {
    writeln!(w, "{CURVES_MAGIC}")?;
    write_comments(w, comments)?;
    for (k, c) in curves.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        let prior = c.prior.expect("only posterior curves are written");
        writeln!(w, "family={} prior={prior} step={}", c.family, c.step)?;
        for ((r, raw), post) in c.rho_grid.iter().zip(&c.raw_values).zip(&c.posterior_values) {
            writeln!(w, "{} {} {}", real(*r), real(*raw), real(*post))?;
        }
    }
    Ok(())
}

pub fn save_curves(path: &Path, curves: &[CharacteristicCurve], comments: &[String]) -> Result<()> {
    if let Some(c) = curves.iter().find(|c| c.prior.is_none()) {
        return Err(Error::Config(format!("{} curve has no prior", c.family)));
    }
    write_atomic(path, |w| write_curves(w, curves, comments))
}

pub fn load_curves(path: &Path) -> Result<Vec<CharacteristicCurve>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curves(&text, path)
}

struct Section {
    line: usize,
    family: CopulaFamily,
    spec: PriorSpec,
    step: f64,
    rows: Vec<[f64; 3]>,
}

fn header_field<'a>(path: &Path, line: usize, token: Option<&'a str>, key: &str) -> Result<&'a str> {
    token
        .and_then(|t| t.strip_prefix(key)?.strip_prefix('='))
        .ok_or_else(|| Error::format(path, line, format!("expected `{key}=...` in section header")))
}

/// Parses a whole curve file. Any defect rejects the file; no partial result
/// is returned.
pub fn parse_curves(text: &str, path: &Path) -> Result<Vec<CharacteristicCurve>> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, CURVES_MAGIC)) => {}
        Some((n, other)) => {
            return Err(Error::format(path, n, format!("expected `{CURVES_MAGIC}`, found `{other}`")))
        }
        None => return Err(Error::format(path, 1, "empty file")),
    }
    if !text.ends_with('\n') {
        return Err(Error::format(path, text.lines().count(), "last line is unterminated (truncated file?)"));
    }
    let mut sections: Vec<Section> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("family=") {
            let mut parts = line.split_whitespace();
            let fam = header_field(path, n, parts.next(), "family")?;
            let family: CopulaFamily = fam.parse().map_err(|e: sms_core::Error| Error::format(path, n, e.to_string()))?;
            let prior = header_field(path, n, parts.next(), "prior")?;
            let spec: PriorSpec = prior.parse().map_err(|e: sms_core::Error| Error::format(path, n, e.to_string()))?;
            let step = header_field(path, n, parts.next(), "step")?;
            let step: f64 = step
                .parse()
                .map_err(|_| Error::format(path, n, format!("bad step `{step}`")))?;
            if parts.next().is_some() {
                return Err(Error::format(path, n, "unexpected trailing fields in section header"));
            }
            if sections.iter().any(|s| s.family == family) {
                return Err(Error::format(path, n, format!("second section for {family}")));
            }
            sections.push(Section { line: n, family, spec, step, rows: Vec::new() });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(Error::format(path, n, "data row before any section header"));
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::format(path, n, format!("expected 3 values, found {}", fields.len())));
        }
        let mut row = [0.0; 3];
        for (slot, f) in row.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Error::format(path, n, format!("bad number `{f}`")))?;
        }
        if let Some(prev) = section.rows.last() {
            if row[0] <= prev[0] {
                return Err(Error::format(path, n, "rho grid is not strictly increasing"));
            }
        }
        section.rows.push(row);
    }
    if sections.is_empty() {
        return Err(Error::format(path, 1, "no curve sections"));
    }
    sections.into_iter().map(|s| build_section(s, path)).collect()
}

fn build_section(s: Section, path: &Path) -> Result<CharacteristicCurve> {
    let fail = |msg: String| Error::format(path, s.line, format!("{} section: {msg}", s.family));
    let expected = rho_grid(s.family, s.step).map_err(|e| fail(e.to_string()))?;
    if s.rows.len() != expected.len() {
        return Err(fail(format!(
            "{} rows, the grid at step {} has {} (truncated file?)",
            s.rows.len(),
            s.step,
            expected.len()
        )));
    }
    if let Some(k) = expected.iter().zip(&s.rows).position(|(g, r)| *g != r[0]) {
        return Err(fail(format!("row {} has rho {}, expected {}", k + 1, s.rows[k][0], expected[k])));
    }
    let prior = s.spec.bind(s.family).map_err(|e| fail(e.to_string()))?;
    let raw = CharacteristicCurve::from_raw(
        s.family,
        s.step,
        s.rows.iter().map(|r| r[0]).collect(),
        s.rows.iter().map(|r| r[1]).collect(),
    )
    .map_err(|e| fail(e.to_string()))?;
    let log_prior = s.rows.iter().map(|r| r[2] - r[1]).collect();
    let mut curve = raw.with_posterior(prior, log_prior).map_err(|e| fail(e.to_string()))?;
    // keep the stored posterior bit for bit rather than raw + (post - raw)
    curve.posterior_values = s.rows.iter().map(|r| r[2]).collect();
    Ok(curve)
}

/// `rho,family,raw,posterior`, one row per grid point of every curve.
pub fn write_plot_csv(
    w: &mut impl Write,
    curves: &[CharacteristicCurve],
    comments: &[String],
) -> std::io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "rho,family,raw,posterior")?;
    for c in curves {
        for (k, r) in c.rho_grid.iter().enumerate() {
            let post = c.posterior_values.get(k).copied().unwrap_or(f64::NAN);
            writeln!(w, "{},{},{},{}", real(*r), c.family, real(c.raw_values[k]), real(post))?;
        }
    }
    Ok(())
}

pub fn write_tree(w: &mut impl Write, tree: &CopulaTree, comments: &[String]) -> std::io::Result<()> {
    writeln!(w, "{TREE_MAGIC}")?;
    write_comments(w, comments)?;
    writeln!(w, "{}", tree.names().join(","))?;
    for e in tree.edges() {
        writeln!(w, "{} {} {} {} {} {}", e.i, e.j, e.family, real(e.theta), real(e.rho_hat), real(e.score))?;
    }
    Ok(())
}

pub fn save_tree(path: &Path, tree: &CopulaTree, comments: &[String]) -> Result<()> {
    write_atomic(path, |w| write_tree(w, tree, comments))
}

pub fn load_tree(path: &Path) -> Result<CopulaTree> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tree(&text, path)
}

pub fn parse_tree(text: &str, path: &Path) -> Result<CopulaTree> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(k, l)| *k == 1 || !(l.is_empty() || l.starts_with('#')));
    match lines.next() {
        Some((_, TREE_MAGIC)) => {}
        Some((n, other)) => {
            return Err(Error::format(path, n, format!("expected `{TREE_MAGIC}`, found `{other}`")))
        }
        None => return Err(Error::format(path, 1, "empty file")),
    }
    if !text.ends_with('\n') {
        return Err(Error::format(path, text.lines().count(), "last line is unterminated (truncated file?)"));
    }
    let (names_line, names) = lines
        .next()
        .ok_or_else(|| Error::format(path, 2, "missing variable names line"))?;
    let names: Vec<String> = names.split(',').map(|s| s.trim().to_owned()).collect();
    if names.iter().any(String::is_empty) {
        return Err(Error::format(path, names_line, "empty variable name"));
    }
    let mut edges = Vec::new();
    let mut last_line = names_line;
    for (n, line) in lines {
        last_line = n;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::format(path, n, format!("expected 6 fields, found {}", f.len())));
        }
        let index = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::format(path, n, format!("bad index `{s}`")))
        };
        let number = |s: &str| -> Result<f64> {
            s.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| Error::format(path, n, format!("bad number `{s}`")))
        };
        let family: CopulaFamily = f[2].parse().map_err(|e: sms_core::Error| Error::format(path, n, e.to_string()))?;
        let (i, j) = (index(f[0])?, index(f[1])?);
        if i >= names.len() || j >= names.len() {
            return Err(Error::format(path, n, format!("edge ({i}, {j}) names a variable beyond {}", names.len() - 1)));
        }
        edges.push(TreeEdge { i, j, family, theta: number(f[3])?, rho_hat: number(f[4])?, score: number(f[5])? });
    }
    CopulaTree::new(names, edges).map_err(|e| Error::format(path, last_line, e.to_string()))
}
