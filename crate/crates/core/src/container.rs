//! Dataset container: one file holding (seed, category, Vs label, dispersion
//! image) records as little-endian f32 blocks, with a manifest header that
//! pins the generator/simulation/dispersion config hashes so differently
//! configured records can never be mixed.

use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::geo::{InterfaceCategory, LABEL_COLS, LABEL_ROWS};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SWX1";
const VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 8 * 5 + 4 * 4 + 8 + 8;

pub const DISP_ROWS: usize = 400;
pub const DISP_COLS: usize = 76;

/// Pinned configuration fingerprints plus dataset-wide constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manifest {
    pub gen_hash: u64,
    pub sim_hash: u64,
    pub disp_hash: u64,
    pub base_seed: u64,
    /// Label normalization constant in m/s.
    pub norm_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub seed: u64,
    pub category: InterfaceCategory,
    /// 24 x 48 normalized Vs label, row-major.
    pub label: Vec<f32>,
    /// 400 x 76 dispersion image, row-major (velocity rows).
    pub dispersion: Vec<f32>,
}

impl Record {
    pub fn byte_len() -> usize {
        8 + 1 + 4 * (LABEL_ROWS * LABEL_COLS + DISP_ROWS * DISP_COLS)
    }
}

/// Container file handle. Records are fixed-size, so reads are random-access.
pub struct DatasetContainer {
    file: std::fs::File,
    manifest: Manifest,
    records: u64,
    /// Generation cursor: how many record indices have been attempted
    /// (written + skipped-as-unstable). Resume continues from here.
    attempted: u64,
}

impl DatasetContainer {
    /// Creates a new container, truncating any existing file.
    pub fn create(path: impl AsRef<Path>, manifest: Manifest) -> Result<Self> {
        let file = std::fs::OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        let mut c = DatasetContainer {
            file,
            manifest,
            records: 0,
            attempted: 0,
        };
        c.write_header()?;
        Ok(c)
    }

    /// Opens an existing container, verifying the manifest matches. A hash
    /// mismatch means the file was produced by a different configuration.
    pub fn open(path: impl AsRef<Path>, expected: Option<Manifest>) -> Result<Self> {
        let file = std::fs::OpenOptions::new().read(true).write(true).open(path)?;
        let mut c = DatasetContainer {
            file,
            manifest: Manifest::default(),
            records: 0,
            attempted: 0,
        };
        c.read_header()?;
        if let Some(want) = expected {
            if want != c.manifest {
                return Err(Error::InvalidConfig(
                    "container manifest does not match the current configuration; refusing to mix datasets".into(),
                ));
            }
        }
        Ok(c)
    }

    /// Opens read-only without manifest expectations.
    pub fn open_readonly(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::OpenOptions::new().read(true).open(path)?;
        let mut c = DatasetContainer {
            file,
            manifest: Manifest::default(),
            records: 0,
            attempted: 0,
        };
        c.read_header()?;
        Ok(c)
    }

    pub fn manifest(&self) -> Manifest {
        self.manifest
    }

    pub fn len(&self) -> usize {
        self.records as usize
    }

    pub fn is_empty(&self) -> bool {
        self.records == 0
    }

    pub fn attempted(&self) -> u64 {
        self.attempted
    }

    fn write_header(&mut self) -> Result<()> {
        self.file.seek(SeekFrom::Start(0))?;
        let mut buf = Vec::with_capacity(HEADER_LEN as usize);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.manifest.gen_hash.to_le_bytes());
        buf.extend_from_slice(&self.manifest.sim_hash.to_le_bytes());
        buf.extend_from_slice(&self.manifest.disp_hash.to_le_bytes());
        buf.extend_from_slice(&self.manifest.base_seed.to_le_bytes());
        buf.extend_from_slice(&self.manifest.norm_constant.to_le_bytes());
        for d in [LABEL_ROWS, LABEL_COLS, DISP_ROWS, DISP_COLS] {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        buf.extend_from_slice(&self.records.to_le_bytes());
        buf.extend_from_slice(&self.attempted.to_le_bytes());
        self.file.write_all(&buf)?;
        Ok(())
    }

    fn read_header(&mut self) -> Result<()> {
        self.file.seek(SeekFrom::Start(0))?;
        let mut magic = [0u8; 4];
        self.file.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a dataset container".into()));
        }
        let version = read_u32(&mut self.file)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        self.manifest.gen_hash = read_u64(&mut self.file)?;
        self.manifest.sim_hash = read_u64(&mut self.file)?;
        self.manifest.disp_hash = read_u64(&mut self.file)?;
        self.manifest.base_seed = read_u64(&mut self.file)?;
        self.manifest.norm_constant = f64::from_bits(read_u64(&mut self.file)?);
        let shapes = [
            read_u32(&mut self.file)? as usize,
            read_u32(&mut self.file)? as usize,
            read_u32(&mut self.file)? as usize,
            read_u32(&mut self.file)? as usize,
        ];
        if shapes != [LABEL_ROWS, LABEL_COLS, DISP_ROWS, DISP_COLS] {
            return Err(Error::Format(format!("unexpected record shapes {shapes:?}")));
        }
        self.records = read_u64(&mut self.file)?;
        self.attempted = read_u64(&mut self.file)?;
        Ok(())
    }

    /// Appends records and advances the generation cursor.
    pub fn append(&mut self, records: &[Record], attempted_through: u64) -> Result<()> {
        self.file
            .seek(SeekFrom::Start(HEADER_LEN + self.records * Record::byte_len() as u64))?;
        let mut buf = Vec::with_capacity(records.len() * Record::byte_len());
        for r in records {
            if r.label.len() != LABEL_ROWS * LABEL_COLS || r.dispersion.len() != DISP_ROWS * DISP_COLS {
                return Err(Error::Internal("record with wrong block sizes".into()));
            }
            buf.extend_from_slice(&r.seed.to_le_bytes());
            buf.push(r.category.tag());
            for &v in &r.label {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            for &v in &r.dispersion {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        self.file.write_all(&buf)?;
        self.records += records.len() as u64;
        self.attempted = attempted_through;
        self.write_header()?;
        self.file.flush()?;
        Ok(())
    }

    pub fn read_record(&mut self, index: usize) -> Result<Record> {
        if index >= self.records as usize {
            return Err(Error::InvalidArgument(format!(
                "record {index} out of range ({} records)",
                self.records
            )));
        }
        self.file
            .seek(SeekFrom::Start(HEADER_LEN + index as u64 * Record::byte_len() as u64))?;
        let mut buf = vec![0u8; Record::byte_len()];
        self.file.read_exact(&mut buf)?;
        let seed = u64::from_le_bytes(buf[0..8].try_into().unwrap());
        let category = InterfaceCategory::from_tag(buf[8])
            .ok_or_else(|| Error::Format(format!("bad category tag {}", buf[8])))?;
        let mut off = 9;
        let mut label = Vec::with_capacity(LABEL_ROWS * LABEL_COLS);
        for _ in 0..LABEL_ROWS * LABEL_COLS {
            label.push(f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        let mut dispersion = Vec::with_capacity(DISP_ROWS * DISP_COLS);
        for _ in 0..DISP_ROWS * DISP_COLS {
            dispersion.push(f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        Ok(Record {
            seed,
            category,
            label,
            dispersion,
        })
    }

    pub fn read_all(&mut self) -> Result<Vec<Record>> {
        (0..self.len()).map(|i| self.read_record(i)).collect()
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            gen_hash: 0,
            sim_hash: 0,
            disp_hash: 0,
            base_seed: 0,
            norm_constant: 0.0,
        }
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

#[cfg(test)]
mod tests {
    use super::*;

    fn record(seed: u64) -> Record {
        Record {
            seed,
            category: InterfaceCategory::Slight,
            label: (0..LABEL_ROWS * LABEL_COLS)
                .map(|i| (i as f32) * 0.001 + seed as f32)
                .collect(),
            dispersion: (0..DISP_ROWS * DISP_COLS).map(|i| (i as f32) * 1e-4).collect(),
        }
    }

    fn manifest() -> Manifest {
        Manifest {
            gen_hash: 11,
            sim_hash: 22,
            disp_hash: 33,
            base_seed: 7,
            norm_constant: 2048.0,
        }
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.swx");
        {
            let mut c = DatasetContainer::create(&path, manifest()).unwrap();
            c.append(&[record(1), record(2)], 2).unwrap();
            c.append(&[record(3)], 4).unwrap(); // one index skipped
        }
        let bytes_a = std::fs::read(&path).unwrap();
        let mut c = DatasetContainer::open(&path, Some(manifest())).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.attempted(), 4);
        let records = c.read_all().unwrap();
        assert_eq!(records[0], record(1));
        assert_eq!(records[2], record(3));
        // Rewriting the same content must reproduce the file byte for byte.
        let path2 = dir.path().join("data2.swx");
        let mut c2 = DatasetContainer::create(&path2, manifest()).unwrap();
        c2.append(&records[..2], 2).unwrap();
        c2.append(&records[2..], 4).unwrap();
        assert_eq!(bytes_a, std::fs::read(&path2).unwrap());
    }

    #[test]
    fn manifest_mismatch_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.swx");
        DatasetContainer::create(&path, manifest()).unwrap();
        let mut other = manifest();
        other.gen_hash = 99;
        assert!(matches!(
            DatasetContainer::open(&path, Some(other)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(DatasetContainer::open(&path, Some(manifest())).is_ok());
    }

    #[test]
    fn out_of_range_read_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.swx");
        let mut c = DatasetContainer::create(&path, manifest()).unwrap();
        assert!(c.read_record(0).is_err());
    }
}
