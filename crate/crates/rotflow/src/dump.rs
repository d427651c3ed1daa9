//! RNSF1 field dumps: the magic line `RNSF1`, an ASCII header `d n L kind`
//! (kind is `scalar` or `vector`), then little-endian f64 samples in row-major
//! order with vector components stored one after another.

use std::io::{BufRead, Write};

use rotflow_core::{Grid, ScalarField, VectorField};

use crate::Failure;

pub const MAGIC: &str = "RNSF1";

#[derive(Debug, Clone, PartialEq)]
pub enum Dump {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Dump {
    pub fn grid(&self) -> &Grid {
        match self {
            Self::Scalar(f) => f.grid(),
            Self::Vector(u) => u.grid(),
        }
    }
}

fn write_values<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn write_dump<W: Write>(mut w: W, dump: &Dump) -> std::io::Result<()> {
    let g = dump.grid();
    let kind = match dump {
        Dump::Scalar(_) => "scalar",
        Dump::Vector(_) => "vector",
    };
    write!(w, "{MAGIC}\n{} {} {} {kind}\n", g.dim(), g.n(), g.half_width())?;
    match dump {
        Dump::Scalar(f) => write_values(&mut w, f.values())?,
        Dump::Vector(u) => {
            for c in u.components() {
                write_values(&mut w, c.values())?;
            }
        }
    }
    w.flush()
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Validation(format!("field dump: {}", msg.into()))
}

pub fn read_dump<R: BufRead>(mut r: R) -> Result<Dump, Failure> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| bad(e.to_string()))?;
    if line != format!("{MAGIC}\n") {
        return Err(bad("missing RNSF1 magic"));
    }
    line.clear();
    r.read_line(&mut line).map_err(|e| bad(e.to_string()))?;
    let parts: Vec<&str> = line.trim_end_matches('\n').split(' ').collect();
    let [d, n, l, kind] = parts[..] else {
        return Err(bad(format!("malformed header `{}`", line.trim_end())));
    };
    let d: usize = d.parse().map_err(|_| bad("bad dimension"))?;
    let n: usize = n.parse().map_err(|_| bad("bad point count"))?;
    let l: f64 = l.parse().map_err(|_| bad("bad half-width"))?;
    let grid = Grid::new(d, n, l).map_err(|e| bad(e.to_string()))?;
    let components = match kind {
        "scalar" => 1,
        "vector" => d,
        other => return Err(bad(format!("unknown kind `{other}`"))),
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| bad(e.to_string()))?;
    if bytes.len() != components * grid.len() * 8 {
        return Err(bad(format!("expected {} bytes of samples, found {}", components * grid.len() * 8, bytes.len())));
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let fields = values
        .chunks(grid.len())
        .map(|c| ScalarField::new(grid, c.to_vec()).map_err(|e| bad(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if kind == "scalar" {
        Ok(Dump::Scalar(fields.into_iter().next().expect("one component")))
    } else {
        VectorField::new(fields).map(Dump::Vector).map_err(|e| bad(e.to_string()))
    }
}
