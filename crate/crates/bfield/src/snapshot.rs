//! Binary field snapshots ("GHBF1" format).
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   5 bytes  "GHBF1"
//! n       u32      points per axis
//! box     f64      box length
//! time    f64      snapshot time
//! count   u32      number of catalog entries
//! entry   u16 name length, name bytes (UTF-8), u8 kind (0 scalar, 1 vector)
//! payload per entry, catalog order: scalar n^3 f64; vector 3 n^3 f64
//!         (x component block, then y, then z), x-fastest within a block
//! ```
//!
//! Round trips are bit-identical; truncation and bad magic are distinct
//! errors carrying the byte offset.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flow::{CompressibleState, IncompressibleState};
use crate::grid::Grid;

pub const MAGIC: &[u8; 5] = b"GHBF1";

#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Scalar(Vec<f64>),
    Vector([Vec<f64>; 3]),
}

impl FieldData {
    fn kind_byte(&self) -> u8 {
        match self {
            FieldData::Scalar(_) => 0,
            FieldData::Vector(_) => 1,
        }
    }

    pub fn component_count(&self) -> usize {
        match self {
            FieldData::Scalar(_) => 1,
            FieldData::Vector(_) => 3,
        }
    }
}

/// A named-field snapshot tied to a grid size but not to a dealias
/// fraction; the caller supplies that when rebuilding states.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: u32,
    pub box_length: f64,
    pub time: f64,
    pub fields: Vec<(String, FieldData)>,
}

impl Snapshot {
    pub fn new(n: u32, box_length: f64, time: f64) -> Snapshot {
        Snapshot {
            n,
            box_length,
            time,
            fields: Vec::new(),
        }
    }

    pub fn push_scalar(&mut self, name: &str, f: &ScalarField) {
        self.fields
            .push((name.to_string(), FieldData::Scalar(f.values().to_vec())));
    }

    pub fn push_vector(&mut self, name: &str, v: &VectorField) {
        self.fields.push((
            name.to_string(),
            FieldData::Vector([
                v.x.values().to_vec(),
                v.y.values().to_vec(),
                v.z.values().to_vec(),
            ]),
        ));
    }

    pub fn field(&self, name: &str) -> Option<&FieldData> {
        self.fields
            .iter()
            .find(|(fname, _)| fname == name)
            .map(|(_, d)| d)
    }

    pub fn from_incompressible(state: &IncompressibleState, time: f64) -> Snapshot {
        let grid = state.grid();
        let mut s = Snapshot::new(grid.n() as u32, grid.box_length(), time);
        s.push_vector("u", &state.u);
        s.push_scalar("theta", &state.theta);
        s
    }

    pub fn from_compressible(state: &CompressibleState, time: f64) -> Snapshot {
        let grid = state.grid();
        let mut s = Snapshot::new(grid.n() as u32, grid.box_length(), time);
        s.push_vector("u", &state.u);
        s.push_scalar("rho", &state.rho);
        s.push_scalar("theta", &state.theta);
        s
    }

    pub fn grid(&self, dealias_fraction: f64) -> Result<Grid> {
        Grid::new(self.n as usize, self.box_length, dealias_fraction)
    }

    fn scalar_field(&self, grid: &Grid, name: &str) -> Result<ScalarField> {
        match self.field(name) {
            Some(FieldData::Scalar(v)) => Ok(ScalarField::from_values(grid, v.clone())),
            _ => Err(Error::config(
                "snapshot",
                format!("missing scalar field `{name}`"),
            )),
        }
    }

    fn vector_field(&self, grid: &Grid, name: &str) -> Result<VectorField> {
        match self.field(name) {
            Some(FieldData::Vector([x, y, z])) => Ok(VectorField {
                x: ScalarField::from_values(grid, x.clone()),
                y: ScalarField::from_values(grid, y.clone()),
                z: ScalarField::from_values(grid, z.clone()),
            }),
            _ => Err(Error::config(
                "snapshot",
                format!("missing vector field `{name}`"),
            )),
        }
    }

    pub fn to_incompressible(&self, dealias_fraction: f64) -> Result<(IncompressibleState, f64)> {
        let grid = self.grid(dealias_fraction)?;
        let u = self.vector_field(&grid, "u")?;
        let theta = self.scalar_field(&grid, "theta")?;
        Ok((IncompressibleState { u, theta }, self.time))
    }

    pub fn to_compressible(&self, dealias_fraction: f64) -> Result<(CompressibleState, f64)> {
        let grid = self.grid(dealias_fraction)?;
        let u = self.vector_field(&grid, "u")?;
        let rho = self.scalar_field(&grid, "rho")?;
        let theta = self.scalar_field(&grid, "theta")?;
        Ok((CompressibleState { u, rho, theta }, self.time))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let n3 = (self.n as usize).pow(3);
        w.write_all(MAGIC)?;
        w.write_all(&self.n.to_le_bytes())?;
        w.write_all(&self.box_length.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&(self.fields.len() as u32).to_le_bytes())?;
        for (name, data) in &self.fields {
            let bytes = name.as_bytes();
            w.write_all(&(bytes.len() as u16).to_le_bytes())?;
            w.write_all(bytes)?;
            w.write_all(&[data.kind_byte()])?;
        }
        for (name, data) in &self.fields {
            let blocks: Vec<&[f64]> = match data {
                FieldData::Scalar(v) => vec![v.as_slice()],
                FieldData::Vector([x, y, z]) => vec![x, y, z],
            };
            for block in blocks {
                if block.len() != n3 {
                    return Err(Error::config(
                        "snapshot",
                        format!("field `{name}` has {} samples, expected {n3}", block.len()),
                    ));
                }
                let mut buf = Vec::with_capacity(block.len() * 8);
                for v in block {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Snapshot> {
        let mut counter = CountingReader { inner: r, offset: 0 };
        let mut magic = [0u8; 5];
        counter.read_exact_at(&mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::SnapshotMagic {
                found: magic.to_vec(),
            });
        }
        let n = counter.read_u32("grid size")?;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::SnapshotMalformed {
                offset: counter.offset,
                message: format!("grid size {n} is not a power of two >= 8"),
            });
        }
        let box_length = counter.read_f64("box length")?;
        let time = counter.read_f64("time")?;
        let count = counter.read_u32("field count")?;
        if count > 1024 {
            return Err(Error::SnapshotMalformed {
                offset: counter.offset,
                message: format!("implausible field count {count}"),
            });
        }
        let mut catalog = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name_len = counter.read_u16("name length")? as usize;
            let mut name = vec![0u8; name_len];
            counter.read_exact_at(&mut name, "field name")?;
            let name = String::from_utf8(name).map_err(|_| Error::SnapshotMalformed {
                offset: counter.offset,
                message: "field name is not UTF-8".into(),
            })?;
            let mut kind = [0u8; 1];
            counter.read_exact_at(&mut kind, "field kind")?;
            if kind[0] > 1 {
                return Err(Error::SnapshotMalformed {
                    offset: counter.offset,
                    message: format!("unknown field kind {}", kind[0]),
                });
            }
            catalog.push((name, kind[0]));
        }
        let n3 = (n as usize).pow(3);
        let mut fields = Vec::with_capacity(catalog.len());
        for (name, kind) in catalog {
            let data = if kind == 0 {
                FieldData::Scalar(counter.read_block(n3, &name)?)
            } else {
                FieldData::Vector([
                    counter.read_block(n3, &name)?,
                    counter.read_block(n3, &name)?,
                    counter.read_block(n3, &name)?,
                ])
            };
            fields.push((name, data));
        }
        Ok(Snapshot {
            n,
            box_length,
            time,
            fields,
        })
    }

    pub fn read_path(path: &Path) -> Result<Snapshot> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Snapshot::read_from(&mut f)
    }
}

struct CountingReader<'a, R: Read> {
    inner: &'a mut R,
    offset: u64,
}

impl<R: Read> CountingReader<'_, R> {
    fn read_exact_at(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Err(Error::SnapshotTruncated {
                    offset: self.offset,
                    message: format!("while reading {what}"),
                })
            }
            Err(e) => Err(e.into()),
        }
    }

    fn read_u16(&mut self, what: &str) -> Result<u16> {
        let mut b = [0u8; 2];
        self.read_exact_at(&mut b, what)?;
        Ok(u16::from_le_bytes(b))
    }

    fn read_u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.read_exact_at(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_f64(&mut self, what: &str) -> Result<f64> {
        let mut b = [0u8; 8];
        self.read_exact_at(&mut b, what)?;
        Ok(f64::from_le_bytes(b))
    }

    fn read_block(&mut self, len: usize, name: &str) -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; len * 8];
        self.read_exact_at(&mut bytes, &format!("payload of `{name}`"))?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
