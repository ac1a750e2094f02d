use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{MxtError, Result};
use crate::media::GridField;

const MAGIC: &str = "MXT-FIELD v1";

/// Serializes a grid field: one ASCII header line, then little-endian f64
/// node values (row-major, component fastest).
pub fn field_to_bytes(g: &GridField) -> Vec<u8> {
    let mut out = format!(
        "{MAGIC} {} {} {} {} {:e} {:e} {:e} {:e} {:e} {:e}\n",
        g.dims[0], g.dims[1], g.dims[2], g.ncomp, g.spacing[0], g.spacing[1], g.spacing[2], g.origin[0], g.origin[1], g.origin[2]
    )
    .into_bytes();
    out.reserve(8 * g.values.len());
    for v in &g.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn field_from_reader(r: impl Read) -> Result<GridField> {
    let mut r = BufReader::new(r);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let rest = header
        .trim_end()
        .strip_prefix(MAGIC)
        .ok_or_else(|| MxtError::Format(format!("missing `{MAGIC}` header")))?;
    let tok: Vec<&str> = rest.split_whitespace().collect();
    if tok.len() != 10 {
        return Err(MxtError::Format(format!("header needs 10 fields, found {}", tok.len())));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| MxtError::Format(format!("`{s}`: {e}")));
    let flt = |s: &str| s.parse::<f64>().map_err(|e| MxtError::Format(format!("`{s}`: {e}")));
    let dims = [int(tok[0])?, int(tok[1])?, int(tok[2])?];
    let ncomp = int(tok[3])?;
    let spacing = [flt(tok[4])?, flt(tok[5])?, flt(tok[6])?];
    let origin = [flt(tok[7])?, flt(tok[8])?, flt(tok[9])?];
    let n = dims.iter().product::<usize>() * ncomp;
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != 8 * n {
        return Err(MxtError::Format(format!("expected {} bytes of data, found {}", 8 * n, buf.len())));
    }
    let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    GridField::new(origin, spacing, dims, ncomp, values)
}

pub fn write_field(path: &Path, g: &GridField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&field_to_bytes(g))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    field_from_reader(std::fs::File::open(path)?)
}
