use std::io::{Read, Write};
use std::path::Path;

use crate::grid::Grid;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SWXW";

/// Vertical particle velocity recorded at the surface receiver line.
///
/// Traces are kept in f64 in memory; the on-disk block stores them as
/// little-endian f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefield {
    /// One row per receiver, nt samples each.
    pub traces: Grid<f64>,
    pub dt_s: f64,
    pub receiver_x_m: Vec<f64>,
    pub source_x_m: f64,
    pub source_f0_hz: f64,
}

impl Wavefield {
    pub fn receiver_count(&self) -> usize {
        self.traces.rows()
    }

    pub fn nt(&self) -> usize {
        self.traces.cols()
    }

    pub fn duration_s(&self) -> f64 {
        self.nt() as f64 * self.dt_s
    }

    pub fn assert_finite(&self) -> Result<()> {
        for (i, &v) in self.traces.data().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Unstable { step: i % self.nt() });
            }
        }
        Ok(())
    }

    /// Binary block: header then 48 x nt little-endian f32 traces.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.receiver_count() as u64).to_le_bytes())?;
        w.write_all(&(self.nt() as u64).to_le_bytes())?;
        w.write_all(&self.dt_s.to_le_bytes())?;
        w.write_all(&self.source_x_m.to_le_bytes())?;
        w.write_all(&self.source_f0_hz.to_le_bytes())?;
        for &x in &self.receiver_x_m {
            w.write_all(&x.to_le_bytes())?;
        }
        for &v in self.traces.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a wavefield block".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported wavefield version {version}")));
        }
        let count = read_u64(&mut r)? as usize;
        let nt = read_u64(&mut r)? as usize;
        let dt_s = read_f64(&mut r)?;
        let source_x_m = read_f64(&mut r)?;
        let source_f0_hz = read_f64(&mut r)?;
        let mut receiver_x_m = Vec::with_capacity(count);
        for _ in 0..count {
            receiver_x_m.push(read_f64(&mut r)?);
        }
        let mut data = vec![0f64; count * nt];
        let mut buf = [0u8; 4];
        for v in &mut data {
            r.read_exact(&mut buf)?;
            *v = f32::from_le_bytes(buf) as f64;
        }
        Ok(Wavefield {
            traces: Grid::from_vec(count, nt, data),
            dt_s,
            receiver_x_m,
            source_x_m,
            source_f0_hz,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
