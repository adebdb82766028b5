//! Text formats for fields and traces.
//!
//! A field file is one JSON header line followed by CSV: a column row, then one
//! row per grid point with the index tuple and each component (complex values
//! as `re,im`). Numbers are written with 17 significant digits, which round
//! trips every `f64` exactly.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::EvolutionTrace;
use crate::error::{Error, Result};
use crate::field::{FieldState, ModelTag, Samples};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub model_tag: ModelTag,
    pub dim: usize,
    pub n: Vec<usize>,
    #[serde(rename = "L")]
    pub box_length: Vec<f64>,
    pub components: Vec<String>,
}

impl FieldHeader {
    pub fn of(state: &FieldState) -> Self {
        FieldHeader {
            model_tag: state.model(),
            dim: state.grid().dim(),
            n: state.grid().n().to_vec(),
            box_length: state.grid().box_length().to_vec(),
            components: state.model().component_names().iter().map(|s| s.to_string()).collect(),
        }
    }
}

const AXES: [&str; 3] = ["i", "j", "k"];

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_field<W: Write>(state: &FieldState, mut out: W) -> Result<()> {
    let header = FieldHeader::of(state);
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    let mut cols: Vec<String> = AXES[..header.dim].iter().map(|s| s.to_string()).collect();
    for (name, comp) in header.components.iter().zip(state.components()) {
        match comp {
            Samples::Complex(_) => {
                cols.push(format!("{name}_re"));
                cols.push(format!("{name}_im"));
            }
            Samples::Real(_) => cols.push(name.clone()),
        }
    }
    writeln!(out, "{}", cols.join(","))?;
    let grid = state.grid();
    let mut row = String::new();
    for flat in 0..grid.len() {
        row.clear();
        let idx = grid.unravel(flat);
        for (a, i) in idx.iter().take(header.dim).enumerate() {
            if a > 0 {
                row.push(',');
            }
            row.push_str(&i.to_string());
        }
        for comp in state.components() {
            match comp {
                Samples::Complex(v) => {
                    row.push(',');
                    row.push_str(&fmt17(v[flat].re));
                    row.push(',');
                    row.push_str(&fmt17(v[flat].im));
                }
                Samples::Real(v) => {
                    row.push(',');
                    row.push_str(&fmt17(v[flat]));
                }
            }
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::FieldFormat(msg.into())
}

/// Reads a field file. When `expected` is given, the header must describe
/// the same model and grid.
pub fn read_field<R: Read>(input: R, expected: Option<(ModelTag, &Grid)>) -> Result<FieldState> {
    let mut lines = BufReader::new(input).lines();
    let header_line = lines.next().ok_or_else(|| bad("empty file"))??;
    let header: FieldHeader = serde_json::from_str(&header_line).map_err(|e| bad(format!("header: {e}")))?;
    let grid = Grid::new(&header.n, &header.box_length)?;
    if header.dim != grid.dim() {
        return Err(bad("dim disagrees with n"));
    }
    let names = header.model_tag.component_names();
    if header.components.len() != names.len() || header.components.iter().zip(names).any(|(a, b)| a != b) {
        return Err(bad(format!("components {:?} do not match model {}", header.components, header.model_tag.as_str())));
    }
    if let Some((tag, g)) = expected {
        if tag != header.model_tag || g != &grid {
            return Err(bad("header does not match the expected model and grid"));
        }
    }
    lines.next().ok_or_else(|| bad("missing column row"))??;
    let complex = header.model_tag.is_complex();
    let per = if complex { 2 } else { 1 };
    let width = header.dim + per * names.len();
    let mut values = vec![vec![0.0; grid.len() * per]; names.len()];
    let mut seen = vec![false; grid.len()];
    let mut count = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(bad(format!("row {} has {} columns, expected {width}", lineno + 1, fields.len())));
        }
        let mut idx = [0usize; 3];
        for a in 0..header.dim {
            let i: usize = fields[a].trim().parse().map_err(|_| bad(format!("row {}: bad index", lineno + 1)))?;
            if i >= header.n[a] {
                return Err(bad(format!("row {}: index {i} out of range", lineno + 1)));
            }
            idx[a] = i;
        }
        let flat: usize = (0..header.dim).map(|a| idx[a] * grid.strides()[a]).sum();
        if seen[flat] {
            return Err(bad(format!("row {}: duplicate grid point", lineno + 1)));
        }
        seen[flat] = true;
        count += 1;
        for (c, vals) in values.iter_mut().enumerate() {
            for j in 0..per {
                let text = fields[header.dim + c * per + j].trim();
                vals[flat * per + j] = text.parse().map_err(|_| bad(format!("row {}: bad number {text:?}", lineno + 1)))?;
            }
        }
    }
    if count != grid.len() {
        return Err(bad(format!("expected {} rows, found {count}", grid.len())));
    }
    let comps = values
        .into_iter()
        .map(|v| {
            if complex {
                Samples::Complex(v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
            } else {
                Samples::Real(v)
            }
        })
        .collect();
    FieldState::new(header.model_tag, grid, comps)
}

pub const TRACE_HEADER: &str = "t,E,C,V,sharp,xnorm,orbit_dist";

pub fn write_trace<W: Write>(trace: &EvolutionTrace, mut out: W) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt17(s.t),
            fmt17(s.energy),
            fmt17(s.charge),
            opt(s.v),
            fmt17(s.sharp),
            fmt17(s.x_norm),
            opt(s.orbit_dist)
        )?;
    }
    Ok(())
}
