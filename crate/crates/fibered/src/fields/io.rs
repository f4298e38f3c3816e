//! Field serialization.
//!
//! Text layout, one item per line, exact round trip (values are printed
//! with Rust's shortest-exact float formatting):
//!
//! ```text
//! fibered-field v1
//! axes <N> m <m>
//! axis <lo> <hi> <nodes> <dirichlet|periodic|neumann-zero>   (N lines)
//! values <node count>
//! <value>                                                    (row-major)
//! ```

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::field::ScalarField;
use crate::fields::grid::{Boundary, Grid};

const MAGIC: &str = "fibered-field v1";

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Dirichlet => "dirichlet",
        Boundary::Periodic => "periodic",
        Boundary::NeumannZero => "neumann-zero",
    }
}

fn parse_boundary(s: &str) -> Result<Boundary> {
    match s {
        "dirichlet" => Ok(Boundary::Dirichlet),
        "periodic" => Ok(Boundary::Periodic),
        "neumann-zero" => Ok(Boundary::NeumannZero),
        other => Err(Error::Parse(format!("unknown boundary flag '{other}'"))),
    }
}

pub fn write_field(field: &ScalarField, path: &Path) -> Result<()> {
    let mut out = String::new();
    let grid = field.grid();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("axes {} m {}\n", grid.dim_total(), grid.dim_x()));
    for ax in grid.axes() {
        out.push_str(&format!(
            "axis {} {} {} {}\n",
            ax.lo,
            ax.hi,
            ax.nodes,
            boundary_name(ax.boundary)
        ));
    }
    out.push_str(&format!("values {}\n", grid.len()));
    for v in field.values() {
        out.push_str(&format!("{v}\n"));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let f = std::fs::File::open(path)?;
    let mut lines = BufReader::new(f).lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of field file".into()))?
            .map_err(Error::Io)
    };
    if next()? != MAGIC {
        return Err(Error::Parse("missing field file magic line".into()));
    }
    let header = next()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "axes" || parts[2] != "m" {
        return Err(Error::Parse(format!("bad axes header '{header}'")));
    }
    let n: usize = parts[1]
        .parse()
        .map_err(|_| Error::Parse("bad axis count".into()))?;
    let m: usize = parts[3]
        .parse()
        .map_err(|_| Error::Parse("bad m".into()))?;
    let mut extents = Vec::new();
    let mut nodes = Vec::new();
    let mut bounds = Vec::new();
    for _ in 0..n {
        let line = next()?;
        let p: Vec<&str> = line.split_whitespace().collect();
        if p.len() != 5 || p[0] != "axis" {
            return Err(Error::Parse(format!("bad axis line '{line}'")));
        }
        let lo: f64 = p[1].parse().map_err(|_| Error::Parse("bad lo".into()))?;
        let hi: f64 = p[2].parse().map_err(|_| Error::Parse("bad hi".into()))?;
        let nn: usize = p[3]
            .parse()
            .map_err(|_| Error::Parse("bad node count".into()))?;
        extents.push([lo, hi]);
        nodes.push(nn);
        bounds.push(parse_boundary(p[4])?);
    }
    let grid = Arc::new(Grid::new(&extents, &nodes, m, &bounds)?);
    let count_line = next()?;
    let cp: Vec<&str> = count_line.split_whitespace().collect();
    if cp.len() != 2 || cp[0] != "values" {
        return Err(Error::Parse(format!("bad values header '{count_line}'")));
    }
    let count: usize = cp[1]
        .parse()
        .map_err(|_| Error::Parse("bad value count".into()))?;
    if count != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "file declares {count} values, grid has {}",
            grid.len()
        )));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next()?;
        values.push(
            line.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad value '{line}'")))?,
        );
    }
    ScalarField::from_values(grid, values)
}
