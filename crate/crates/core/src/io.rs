//! File formats: the `RIPM` binary matrix format, its CSV counterpart, and
//! the plain-text edge-list graph format.
//!
//! `RIPM` layout (all little-endian): the four magic bytes `RIPM`, `n` and
//! `p` as `u64`, then `n * p` IEEE-754 doubles in row-major order.
//!
//! CSV layout: a first line `n,p` giving the dimensions, then `n` lines of
//! `p` comma-separated decimals.
//!
//! Graph layout: a first line `m E`, then `E` lines `u v` with 0-based
//! vertex indices and `u < v`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::matrix::DesignMatrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"RIPM";

pub fn write_matrix<W: Write>(mut w: W, x: &DesignMatrix) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(x.n() as u64).to_le_bytes())?;
    w.write_all(&(x.p() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(x.as_slice().len() * 8);
    for v in x.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DesignMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated matrix header".into()))?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"RIPM\"")));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("truncated matrix header".into()))?;
    let n = u64::from_le_bytes(word);
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("truncated matrix header".into()))?;
    let p = u64::from_le_bytes(word);
    let count = n
        .checked_mul(p)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::Format(format!("dimensions {n}x{p} too large")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes for {n}x{p}, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DesignMatrix::new(n as usize, p as usize, data)
}

pub fn save_matrix(path: &Path, x: &DesignMatrix) -> Result<()> {
    let mut f = fs::File::create(path)?;
    write_matrix(&mut f, x)?;
    f.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<DesignMatrix> {
    read_matrix(BufReader::new(fs::File::open(path)?))
}

pub fn write_matrix_csv<W: Write>(mut w: W, x: &DesignMatrix) -> Result<()> {
    writeln!(w, "{},{}", x.n(), x.p())?;
    for i in 0..x.n() {
        let line: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DesignMatrix> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("bad CSV header {header:?}: {e}")))?;
    let [n, p] = dims[..] else {
        return Err(Error::Format(format!("CSV header must be \"n,p\", got {header:?}")));
    };
    let mut data = Vec::with_capacity(n * p);
    let mut rows = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("row {rows}: bad value {field:?}: {e}")))?;
            data.push(v);
        }
        if data.len() - before != p {
            return Err(Error::Format(format!("row {rows} has {} values, expected {p}", data.len() - before)));
        }
    }
    if rows != n {
        return Err(Error::Format(format!("expected {n} rows, found {rows}")));
    }
    DesignMatrix::new(n, p, data)
}

pub fn write_graph<W: Write>(mut w: W, g: &Graph) -> Result<()> {
    let edges = g.edges();
    writeln!(w, "{} {}", g.m(), edges.len())?;
    for (u, v) in edges {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_graph<R: Read>(r: R) -> Result<Graph> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty graph file".into()))??;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (Some(Ok(m)), Some(Ok(e)), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Format(format!("graph header must be \"m E\", got {header:?}")));
    };
    let mut g = Graph::empty(m);
    let mut count = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(u)), Some(Ok(v)), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format(format!("bad edge line {line:?}")));
        };
        if u >= v || v >= m {
            return Err(Error::Format(format!("edge {u} {v} must satisfy u < v < m = {m}")));
        }
        if g.has_edge(u, v) {
            return Err(Error::Format(format!("duplicate edge {u} {v}")));
        }
        g.add_edge(u, v);
        count += 1;
    }
    if count != e {
        return Err(Error::Format(format!("header announces {e} edges, found {count}")));
    }
    Ok(g)
}

pub fn save_graph(path: &Path, g: &Graph) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_graph(&mut f, g)?;
    f.flush()?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(fs::File::open(path)?)
}
