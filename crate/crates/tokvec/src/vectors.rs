//! Vector input files.
//!
//! Two encodings carry the same data:
//!
//! * text: one vector per line, whitespace-separated decimals, optionally
//!   preceded by an integer id. A first field made only of digits is the id;
//!   either every line has one or none does. Blank lines and lines starting
//!   with `#` are skipped.
//! * binary (`TVEC`): magic `TVEC`, version `u32 = 1`, dimension `n: u32`,
//!   count `d: u64`, then `d * n` little-endian `f32`; ids are `0..d`.
//!
//! Values are stored at 32-bit precision in both forms, then widened and
//! normalized, so the two files of one dataset load identically.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use tokvec_core::{DenseVector, DocId};

use crate::error::{Error, Result};

pub const TVEC_MAGIC: &[u8; 4] = b"TVEC";
pub const TVEC_VERSION: u32 = 1;

/// Reads a text or `TVEC` file, picking the format from the first bytes.
pub fn read_vectors(path: impl AsRef<Path>) -> Result<Vec<DenseVector>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
    let vectors = if head.starts_with(TVEC_MAGIC) {
        read_tvec(reader)?
    } else {
        read_text(reader)?
    };
    if vectors.is_empty() {
        return Err(Error::Input(format!("{}: no vectors", path.display())));
    }
    Ok(vectors)
}

fn is_id(field: &str) -> bool {
    !field.is_empty() && field.bytes().all(|b| b.is_ascii_digit())
}

pub fn read_text(reader: impl BufRead) -> Result<Vec<DenseVector>> {
    let mut out = Vec::new();
    let mut dim = None;
    let mut with_ids = None;
    for (line_no, line) in reader.lines().enumerate() {
        let row = line_no + 1;
        let line = line.map_err(|e| Error::Input(format!("line {row}: {e}")))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: Vec<&str> = line.split_whitespace().collect();
        let has_id = fields.len() > 1 && is_id(fields[0]);
        if *with_ids.get_or_insert(has_id) != has_id {
            return Err(Error::Input(format!("line {row}: ids must be given on every line or none")));
        }
        let id = if has_id {
            let id = fields.remove(0);
            id.parse::<DocId>().map_err(|_| Error::Input(format!("line {row}: bad id {id:?}")))?
        } else {
            out.len() as DocId
        };
        let values = fields
            .iter()
            .map(|f| f.parse::<f32>().map(f64::from))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Input(format!("line {row}: {e}")))?;
        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected {
            return Err(Error::Input(format!(
                "line {row}: expected {expected} values, found {}",
                values.len()
            )));
        }
        let v = DenseVector::new(id, values).map_err(|e| Error::Input(format!("line {row}: {e}")))?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_tvec(mut reader: impl Read) -> Result<Vec<DenseVector>> {
    let truncated = |e: std::io::Error| Error::Input(format!("truncated TVEC file: {e}"));
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).map_err(truncated)?;
    if &magic != TVEC_MAGIC {
        return Err(Error::Input("not a TVEC file".into()));
    }
    let version = reader.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != TVEC_VERSION {
        return Err(Error::Input(format!("unsupported TVEC version {version}")));
    }
    let dim = reader.read_u32::<LittleEndian>().map_err(truncated)? as usize;
    let count = reader.read_u64::<LittleEndian>().map_err(truncated)?;
    if dim == 0 {
        return Err(Error::Input("TVEC dimension is zero".into()));
    }
    let mut out = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut row = vec![0f32; dim];
    for id in 0..count {
        reader.read_f32_into::<LittleEndian>(&mut row).map_err(truncated)?;
        let values = row.iter().map(|&x| f64::from(x)).collect();
        out.push(DenseVector::new(id, values)?);
    }
    Ok(out)
}

/// Writes rows as a `TVEC` file. All rows must share one dimension.
pub fn write_tvec(path: impl AsRef<Path>, rows: &[Vec<f32>]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_tvec_to(&mut w, rows).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_tvec_to(w: &mut impl Write, rows: &[Vec<f32>]) -> std::io::Result<()> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "ragged rows"));
    }
    w.write_all(TVEC_MAGIC)?;
    w.write_u32::<LittleEndian>(TVEC_VERSION)?;
    w.write_u32::<LittleEndian>(dim as u32)?;
    w.write_u64::<LittleEndian>(rows.len() as u64)?;
    for row in rows {
        for &x in row {
            w.write_f32::<LittleEndian>(x)?;
        }
    }
    Ok(())
}

/// Writes rows as text with explicit ids.
pub fn write_text_to(w: &mut impl Write, rows: &[Vec<f32>]) -> std::io::Result<()> {
    for (id, row) in rows.iter().enumerate() {
        write!(w, "{id}")?;
        for x in row {
            write!(w, " {x:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parses a query literal such as `"0.1 -0.2 0.3"` or `"0.1,-0.2,0.3"`.
pub fn parse_vector_literal(text: &str, id: DocId) -> Result<DenseVector> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Input(format!("query vector: {s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DenseVector::new(id, values)?)
}
