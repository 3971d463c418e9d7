use std::path::Path;

use locfrac::attractor::PointSet;
use locfrac::{AxisBox, Grid, Point, SampledFunction};

use crate::error::CliError;

/// Shortest decimal that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_string()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    write_records(path, header, rows.map(|r| r.into_iter().map(num).collect()))
}

pub fn write_records(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn axis_names(dim: usize) -> &'static [&'static str] {
    &["x", "y", "z"][..dim]
}

pub fn write_function(path: &Path, f: &SampledFunction) -> Result<(), CliError> {
    let mut header = axis_names(f.grid().dim()).to_vec();
    header.push("value");
    let rows = f.grid().nodes().zip(f.values()).map(|(x, &v)| {
        let mut r = x.as_slice().to_vec();
        r.push(v);
        r
    });
    write_rows(path, &header, rows)
}

pub fn write_points(path: &Path, set: &PointSet) -> Result<(), CliError> {
    write_rows(path, axis_names(set.dim()), set.iter().map(|p| p.to_vec()))
}

/// Reads `x[,y],value` rows laid out on a uniform grid with `2^L + 1` nodes
/// per axis; the domain is the bounding box of the coordinates.
pub fn read_function(path: &Path) -> Result<SampledFunction, CliError> {
    let parse_err = |line: usize, message: String| CliError::Parse {
        origin: path.display().to_string(),
        line,
        col: 1,
        message,
    };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let header: Vec<String> = r.headers().map_err(|e| parse_err(1, e.to_string()))?.iter().map(String::from).collect();
    let dim = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["x", "value"] => 1,
        ["x", "y", "value"] => 2,
        _ => return Err(parse_err(1, format!("expected header x,value or x,y,value, got {}", header.join(",")))),
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| parse_err(line, format!("`{s}` is not a number"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != dim + 1 {
            return Err(parse_err(line, format!("expected {} columns, got {}", dim + 1, row.len())));
        }
        rows.push(row);
    }
    let semantic = |m: String| CliError::Semantic(format!("{}: {m}", path.display()));
    let per_axis = (rows.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if per_axis < 3 || per_axis.pow(dim as u32) != rows.len() || !(per_axis - 1).is_power_of_two() {
        return Err(semantic(format!("{} rows do not form a grid with 2^L + 1 nodes per axis", rows.len())));
    }
    let level = (per_axis - 1).trailing_zeros();
    let lo: Vec<f64> = (0..dim).map(|k| rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..dim).map(|k| rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let grid = Grid::new(AxisBox::new(Point::new(&lo)?, Point::new(&hi)?)?, level)?;
    let tol = 1e-6 * grid.max_spacing();
    let mut values = vec![f64::NAN; grid.len()];
    for row in &rows {
        let x = Point::new(&row[..dim])?;
        let k = grid.node_index_of(&x, tol).ok_or_else(|| semantic(format!("point {x} is not a grid node")))?;
        if !values[k].is_nan() {
            return Err(semantic(format!("node {x} listed twice")));
        }
        values[k] = row[dim];
    }
    Ok(SampledFunction::new(grid, values)?)
}
