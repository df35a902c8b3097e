//! AGGF binary field snapshots.
//!
//! Layout (little endian): `b"AGGF"`, version `u16 = 1`, `ndim: u16`,
//! `ndim × u32` cell counts, kind `u8` (0 scalar, 1 vector), then the
//! `f64` payload in row-major order (last axis fastest). Vector payloads
//! hold the cell-centered components one after another in axis order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};

pub const MAGIC: &[u8; 4] = b"AGGF";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar = 0,
    Vector = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub cells: Vec<usize>,
    pub kind: FieldKind,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn scalar(f: &ScalarField) -> Self {
        Snapshot { cells: f.grid.cells[..f.grid.dim].to_vec(), kind: FieldKind::Scalar, data: f.interior() }
    }

    pub fn vector(u: &VectorField) -> Self {
        Snapshot {
            cells: u.grid.cells[..u.grid.dim].to_vec(),
            kind: FieldKind::Vector,
            data: u.cell_centered().concat(),
        }
    }

    fn expected_len(&self) -> usize {
        let n: usize = self.cells.iter().product();
        match self.kind {
            FieldKind::Scalar => n,
            FieldKind::Vector => n * self.cells.len(),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        if self.data.len() != self.expected_len() {
            return Err(Error::Snapshot(format!(
                "payload has {} values, shape needs {}",
                self.data.len(),
                self.expected_len()
            )));
        }
        let mut buf = Vec::with_capacity(13 + 4 * self.cells.len() + 8 * self.data.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.cells.len() as u16).to_le_bytes());
        for &n in &self.cells {
            let n = u32::try_from(n).map_err(|_| Error::Snapshot(format!("cell count {n} exceeds u32")))?;
            buf.extend_from_slice(&n.to_le_bytes());
        }
        buf.push(self.kind as u8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let ndim = u16::from_le_bytes(r.array()?) as usize;
        if !(1..=3).contains(&ndim) {
            return Err(Error::Snapshot(format!("unsupported dimension {ndim}")));
        }
        let cells = (0..ndim).map(|_| r.array().map(|b| u32::from_le_bytes(b) as usize)).collect::<Result<Vec<_>>>()?;
        let kind = match r.take(1)?[0] {
            0 => FieldKind::Scalar,
            1 => FieldKind::Vector,
            k => return Err(Error::Snapshot(format!("unknown field kind {k}"))),
        };
        let mut s = Snapshot { cells, kind, data: Vec::new() };
        let n = s.expected_len();
        if bytes.len() - r.pos != 8 * n {
            return Err(Error::Snapshot(format!(
                "payload has {} bytes, expected {}",
                bytes.len() - r.pos,
                8 * n
            )));
        }
        s.data = (0..n).map(|_| r.array().map(f64::from_le_bytes)).collect::<Result<_>>()?;
        Ok(s)
    }

    pub fn read_from(rd: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        rd.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Scalar snapshot as a field on `grid` with the given BC.
    pub fn to_scalar(&self, grid: &Grid, bc: crate::grid::ScalarBc) -> Result<ScalarField> {
        if self.kind != FieldKind::Scalar || self.cells[..] != grid.cells[..grid.dim] {
            return Err(Error::Snapshot("snapshot does not hold a scalar on this grid".into()));
        }
        let mut f = ScalarField::from_interior(grid, bc, &self.data);
        f.apply_bc();
        Ok(f)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Snapshot("truncated file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}
