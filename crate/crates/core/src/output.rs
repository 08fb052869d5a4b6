//! CSV writers for trajectories, Poincaré sections, regime maps and the
//! stability boundary. Floats are written with 17 significant digits so
//! that they round-trip exactly.

use std::io::{self, Write};

use crate::dynamics::{Lambda, Representation, SystemState};
use crate::linearization::BoundaryPoint;
use crate::simulate::{PoincareSection, SweepCell};

/// `{:.16e}`; non-finite values as `NaN`, `inf`, `-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_lambda(l: Lambda) -> String {
    match l {
        Lambda::Finite(v) => format_float(v),
        Lambda::Infinite => "inf".into(),
    }
}

/// Column names of one trajectory row: `t` followed by, for each agent
/// `k = 1..N`, its position components, `m{k}`, `v{k}1` and `v{k}2`.
/// Planar positions are named `y{k}x, y{k}y` in rotated coordinates and
/// `x{k}x, x{k}y` in original ones.
pub fn trajectory_header(n_agents: usize, dimension: usize, repr: Representation) -> Vec<String> {
    let prefix = match repr {
        Representation::Rotated => "y",
        Representation::Original => "x",
    };
    let mut cols = vec!["t".to_string()];
    for k in 1..=n_agents {
        if dimension == 2 {
            cols.push(format!("{prefix}{k}x"));
            cols.push(format!("{prefix}{k}y"));
        } else {
            cols.extend((1..=dimension).map(|i| format!("{prefix}{k}_{i}")));
        }
        cols.push(format!("m{k}"));
        cols.push(format!("v{k}1"));
        cols.push(format!("v{k}2"));
    }
    cols
}

fn write_row<W: Write>(w: &mut W, fields: impl IntoIterator<Item = String>) -> io::Result<()> {
    let line: Vec<String> = fields.into_iter().collect();
    writeln!(w, "{}", line.join(","))
}

/// Samples must share one representation and shape.
pub fn write_trajectory_csv<W: Write>(w: &mut W, samples: &[(f64, SystemState)]) -> io::Result<()> {
    let Some((_, first)) = samples.first() else {
        return Ok(());
    };
    write_row(w, trajectory_header(first.n_agents(), first.dimension(), first.representation))?;
    for (t, s) in samples {
        write_row(
            w,
            std::iter::once(format_float(*t)).chain(s.to_row().into_iter().map(format_float)),
        )?;
    }
    Ok(())
}

pub const SECTION_HEADER: [&str; 6] = ["j", "tau", "a1", "a2", "a3", "parity"];

pub fn write_section_csv<W: Write>(w: &mut W, section: &PoincareSection) -> io::Result<()> {
    write_row(w, SECTION_HEADER.map(String::from))?;
    for c in &section.crossings {
        write_row(
            w,
            [
                c.j.to_string(),
                format_float(c.tau),
                format_float(c.alpha[0]),
                format_float(c.alpha[1]),
                format_float(c.alpha[2]),
                c.parity.to_string(),
            ],
        )?;
    }
    Ok(())
}

/// The first five columns are the regime-map schema; `initial` tells the
/// two rows of a symmetric-and-generic sweep apart.
pub const REGIME_HEADER: [&str; 6] = ["sigma", "lambda", "label", "metric_final", "spread_final", "initial"];

pub fn write_regime_csv<W: Write>(w: &mut W, cells: &[SweepCell]) -> io::Result<()> {
    write_row(w, REGIME_HEADER.map(String::from))?;
    for c in cells {
        write_row(
            w,
            [
                format_float(c.sigma),
                format_lambda(c.lambda),
                c.regime.label.to_string(),
                format_float(c.regime.metric_final),
                format_float(c.regime.spread_final),
                c.initial.to_string(),
            ],
        )?;
    }
    Ok(())
}

pub const BOUNDARY_HEADER: [&str; 3] = ["lambda", "sigma_critical", "sigma_hat"];

/// A point whose bisection failed is written with `sigma_critical = NaN`.
pub fn write_boundary_csv<W: Write>(w: &mut W, points: &[BoundaryPoint]) -> io::Result<()> {
    write_row(w, BOUNDARY_HEADER.map(String::from))?;
    for p in points {
        write_row(
            w,
            [
                format_float(p.lambda),
                format_float(*p.sigma_critical.as_ref().unwrap_or(&f64::NAN)),
                format_float(p.sigma_hat),
            ],
        )?;
    }
    Ok(())
}
