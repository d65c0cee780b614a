//! Binary snapshot files.
//!
//! A snapshot is one text header line
//! `SNLS1 d=<d> N=<N> p=<p> s=<s> eps=<eps>` followed by the coefficients as
//! little-endian `f64` pairs `(re, im)` in basis order. A pack holds several
//! weighted snapshots: the same header line, a line `count=<n> modes=<m>`,
//! `n` little-endian weights, then the `n·m` coefficient pairs.
//!
//! Whether the basis was built with full shells is recovered from the
//! number of stored modes.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::basis::ModeBasis;
use super::field::SpectralField;
use crate::error::{Error, Result};

const MAGIC: &str = "SNLS1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub cutoff: usize,
    pub p: f64,
    pub s: f64,
    pub eps: f64,
}

impl SnapshotHeader {
    fn line(&self) -> String {
        // `{:?}` on f64 is the shortest round-tripping representation
        format!(
            "{MAGIC} d={} N={} p={:?} s={:?} eps={:?}\n",
            self.dim, self.cutoff, self.p, self.s, self.eps
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::Format("missing SNLS1 magic".into()));
        }
        let mut h = SnapshotHeader { dim: 0, cutoff: 0, p: f64::NAN, s: f64::NAN, eps: f64::NAN };
        let mut seen = 0;
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header field `{kv}`")))?;
            let bad = |_| Error::Format(format!("bad value in `{kv}`"));
            match k {
                "d" => h.dim = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "N" => h.cutoff = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "p" => h.p = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "s" => h.s = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "eps" => h.eps = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                _ => return Err(Error::Format(format!("unknown header field `{k}`"))),
            }
            seen += 1;
        }
        if seen != 5 {
            return Err(Error::Format("incomplete header".into()));
        }
        Ok(h)
    }

    /// Basis with `modes` entries compatible with this header.
    pub fn basis_for(&self, modes: usize) -> Result<Arc<ModeBasis>> {
        for full in [true, false] {
            let b = ModeBasis::new(self.dim, self.cutoff, full)?;
            if b.len() == modes {
                return Ok(Arc::new(b));
            }
        }
        Err(Error::Format(format!(
            "{modes} modes do not match d={} N={}",
            self.dim, self.cutoff
        )))
    }
}

fn write_coeffs<W: Write>(w: &mut W, coeffs: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(coeffs.len() * 16);
    for c in coeffs {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("truncated payload".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect())
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::Format("unterminated header line".into()));
    }
    Ok(line)
}

pub fn write_snapshot<W: Write>(w: &mut W, header: &SnapshotHeader, u: &SpectralField) -> Result<()> {
    check_header(header, u)?;
    w.write_all(header.line().as_bytes())?;
    write_coeffs(w, u.coeffs())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(SnapshotHeader, SpectralField)> {
    let mut r = BufReader::new(r);
    let header = SnapshotHeader::parse(&read_line(&mut r)?)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.len() % 16 != 0 {
        return Err(Error::Format("payload is not a whole number of complex values".into()));
    }
    let modes = rest.len() / 16;
    let basis = header.basis_for(modes)?;
    let vals = read_f64s(&mut rest.as_slice(), 2 * modes)?;
    let coeffs = vals.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok((header, SpectralField::from_coeffs(basis, coeffs)?))
}

/// Weighted collection of snapshots sharing one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPack {
    pub header: SnapshotHeader,
    pub weights: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl SnapshotPack {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.weights.len() != self.fields.len() {
            return Err(Error::Format("weight and snapshot counts differ".into()));
        }
        let modes = self.fields.first().map_or(0, |f| f.coeffs().len());
        for f in &self.fields {
            check_header(&self.header, f)?;
        }
        w.write_all(self.header.line().as_bytes())?;
        w.write_all(format!("count={} modes={}\n", self.fields.len(), modes).as_bytes())?;
        let mut buf = Vec::with_capacity(self.weights.len() * 8);
        for x in &self.weights {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
        for f in &self.fields {
            write_coeffs(w, f.coeffs())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let header = SnapshotHeader::parse(&read_line(&mut r)?)?;
        let counts = read_line(&mut r)?;
        let mut count = None;
        let mut modes = None;
        for kv in counts.split_whitespace() {
            match kv.split_once('=') {
                Some(("count", v)) => count = v.parse::<usize>().ok(),
                Some(("modes", v)) => modes = v.parse::<usize>().ok(),
                _ => return Err(Error::Format(format!("bad pack field `{kv}`"))),
            }
        }
        let (count, modes) = count
            .zip(modes)
            .ok_or_else(|| Error::Format("pack needs count and modes".into()))?;
        let weights = read_f64s(&mut r, count)?;
        let mut fields = Vec::with_capacity(count);
        if count > 0 {
            let basis = header.basis_for(modes)?;
            for _ in 0..count {
                let vals = read_f64s(&mut r, 2 * modes)?;
                let coeffs = vals.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
                fields.push(SpectralField::from_coeffs(basis.clone(), coeffs)?);
            }
        }
        let mut tail = [0u8; 1];
        if r.read(&mut tail)? != 0 {
            return Err(Error::Format("trailing bytes after pack payload".into()));
        }
        Ok(Self { header, weights, fields })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}

fn check_header(h: &SnapshotHeader, u: &SpectralField) -> Result<()> {
    let b = u.basis();
    if b.dim() != h.dim || b.cutoff() != h.cutoff {
        return Err(Error::Format("header does not describe the field's basis".into()));
    }
    Ok(())
}
