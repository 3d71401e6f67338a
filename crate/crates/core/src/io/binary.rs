//! Little-endian binary files for sample paths and their noise records.
//!
//! Header: magic (4 bytes), version `u16`, `d`, `nt`, `nx` as `u32`, seed
//! `u64`, `k_max` `u32`, then the `nt` times and `nx` sites as `f64`. A path
//! file follows with its values in (component, time, site) order. A noise
//! file shares the header of its path and follows with the standard normals
//! in (component, step, mode) order, `nt - 1` steps of `k_max + 1` modes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use crate::drift::NoiseRecord;
use crate::error::{Error, Result};
use crate::field::sampler::SamplePath;
use crate::field::spec::GridSpec;

pub const PATH_MAGIC: [u8; 4] = *b"HPTH";
pub const NOISE_MAGIC: [u8; 4] = *b"HNSE";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub d: usize,
    pub grid: GridSpec,
    pub seed: u64,
    pub k_max: usize,
}

fn narrow(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit in 32 bits")))
}

fn write_header<W: Write>(w: &mut W, magic: [u8; 4], h: &Header) -> Result<()> {
    w.write_all(&magic)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(narrow(h.d, "d")?)?;
    w.write_u32::<LittleEndian>(narrow(h.grid.nt(), "nt")?)?;
    w.write_u32::<LittleEndian>(narrow(h.grid.nx(), "nx")?)?;
    w.write_u64::<LittleEndian>(h.seed)?;
    w.write_u32::<LittleEndian>(narrow(h.k_max, "k_max")?)?;
    for &t in h.grid.times() {
        w.write_f64::<LittleEndian>(t)?;
    }
    for &x in h.grid.sites() {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

/// Cursor over a whole file, so that size errors can report byte counts.
struct Bytes<'a> {
    all: &'a [u8],
    at: usize,
}

impl<'a> Bytes<'a> {
    fn take(&mut self, n: usize, expected: u64) -> Result<&'a [u8]> {
        if self.at + n > self.all.len() {
            return Err(Error::Length {
                expected,
                found: self.all.len() as u64,
            });
        }
        let s = &self.all[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
}

fn f64s(b: &mut Bytes, n: usize, expected: u64) -> Result<Vec<f64>> {
    let raw = b.take(8 * n, expected)?;
    let mut out = vec![0.0; n];
    LittleEndian::read_f64_into(raw, &mut out);
    Ok(out)
}

const FIXED: u64 = 4 + 2 + 4 * 3 + 8 + 4;

/// Rebuilds the grid, recognising the uniform constructor so that a
/// round trip preserves the sampler's step rule.
fn rebuild_grid(times: Vec<f64>, sites: Vec<f64>) -> Result<GridSpec> {
    let (nt, nx) = (times.len(), sites.len());
    if nt >= 2 && nx >= 2 {
        if let Ok(g) = GridSpec::uniform(times[0], times[nt - 1], nt, nx) {
            let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
            if same(g.times(), &times) && same(g.sites(), &sites) {
                return Ok(g);
            }
        }
    }
    GridSpec::custom(times, sites).map_err(|e| Error::Format(format!("invalid grid: {e}")))
}

/// Parses a header and returns it with the expected total file size for
/// `body(header)` trailing `f64` values.
fn read_header(b: &mut Bytes, magic: [u8; 4], body: impl Fn(&Header) -> u64) -> Result<(Header, u64)> {
    let m = b.take(4, FIXED)?;
    if m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(m),
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = LittleEndian::read_u16(b.take(2, FIXED)?);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: VERSION,
        });
    }
    let d = LittleEndian::read_u32(b.take(4, FIXED)?) as usize;
    let nt = LittleEndian::read_u32(b.take(4, FIXED)?) as usize;
    let nx = LittleEndian::read_u32(b.take(4, FIXED)?) as usize;
    let seed = LittleEndian::read_u64(b.take(8, FIXED)?);
    let k_max = LittleEndian::read_u32(b.take(4, FIXED)?) as usize;
    if d == 0 || nt == 0 || nx == 0 {
        return Err(Error::Format(format!("empty shape d = {d}, nt = {nt}, nx = {nx}")));
    }
    let head = FIXED + 8 * (nt + nx) as u64;
    let times = f64s(b, nt, head)?;
    let sites = f64s(b, nx, head)?;
    let h = Header {
        d,
        grid: rebuild_grid(times, sites)?,
        seed,
        k_max,
    };
    let total = head + 8 * body(&h);
    Ok((h, total))
}

fn read_all<R: Read>(mut r: R) -> Result<Vec<u8>> {
    let mut v = Vec::new();
    r.read_to_end(&mut v)?;
    Ok(v)
}

fn check_size(b: &Bytes, total: u64) -> Result<()> {
    if b.all.len() as u64 != total {
        return Err(Error::Length {
            expected: total,
            found: b.all.len() as u64,
        });
    }
    Ok(())
}

pub fn write_path<W: Write>(mut w: W, path: &SamplePath) -> Result<()> {
    let h = Header {
        d: path.d,
        grid: path.grid.clone(),
        seed: path.seed,
        k_max: path.k_max,
    };
    write_header(&mut w, PATH_MAGIC, &h)?;
    for &v in &path.values {
        w.write_f64::<LittleEndian>(v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path<R: Read>(r: R) -> Result<SamplePath> {
    let all = read_all(r)?;
    let mut b = Bytes { all: &all, at: 0 };
    let (h, total) = read_header(&mut b, PATH_MAGIC, |h| (h.d * h.grid.nt() * h.grid.nx()) as u64)?;
    check_size(&b, total)?;
    let values = f64s(&mut b, h.d * h.grid.nt() * h.grid.nx(), total)?;
    SamplePath::new(h.d, h.grid, h.seed, h.k_max, values)
}

/// Noise of `path`, which supplies the header.
pub fn write_noise<W: Write>(mut w: W, path: &SamplePath, noise: &NoiseRecord) -> Result<()> {
    if noise.d != path.d || noise.steps + 1 != path.nt() || noise.modes != path.k_max + 1 {
        return Err(Error::Mismatch(format!(
            "noise of shape {} x {} x {} does not belong to this path",
            noise.d, noise.steps, noise.modes
        )));
    }
    let h = Header {
        d: path.d,
        grid: path.grid.clone(),
        seed: path.seed,
        k_max: path.k_max,
    };
    write_header(&mut w, NOISE_MAGIC, &h)?;
    for &v in &noise.values {
        w.write_f64::<LittleEndian>(v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_noise<R: Read>(r: R) -> Result<(Header, NoiseRecord)> {
    let all = read_all(r)?;
    let mut b = Bytes { all: &all, at: 0 };
    let shape = |h: &Header| (h.d, h.grid.nt() - 1, h.k_max + 1);
    let (h, total) = read_header(&mut b, NOISE_MAGIC, |h| {
        let (d, s, m) = shape(h);
        (d * s * m) as u64
    })?;
    check_size(&b, total)?;
    let (d, steps, modes) = shape(&h);
    let values = f64s(&mut b, d * steps * modes, total)?;
    let rec = NoiseRecord::new(d, steps, modes, values)?;
    Ok((h, rec))
}

pub fn save_path(file: &Path, path: &SamplePath) -> Result<()> {
    write_path(BufWriter::new(File::create(file)?), path)
}

pub fn load_path(file: &Path) -> Result<SamplePath> {
    read_path(BufReader::new(File::open(file)?))
}

/// Writes `<file>` and its sibling `<file>.noise`.
pub fn save_path_with_noise(file: &Path, path: &SamplePath, noise: &NoiseRecord) -> Result<()> {
    save_path(file, path)?;
    write_noise(BufWriter::new(File::create(noise_file(file))?), path, noise)
}

pub fn load_noise(file: &Path) -> Result<(Header, NoiseRecord)> {
    read_noise(BufReader::new(File::open(file)?))
}

pub fn noise_file(path_file: &Path) -> std::path::PathBuf {
    let mut s = path_file.as_os_str().to_owned();
    s.push(".noise");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sampler::sample_path;
    use crate::field::spec::FieldSpec;

    fn sample() -> SamplePath {
        let spec = FieldSpec::identity(2, 1.0, 0.1).unwrap();
        let grid = GridSpec::uniform(0.1, 1.0, 5, 7).unwrap();
        sample_path(&spec, &grid, 3, 16).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let p = sample();
        let mut buf = Vec::new();
        write_path(&mut buf, &p).unwrap();
        let q = read_path(&buf[..]).unwrap();
        assert_eq!(p, q);
        assert!(p.values.iter().zip(&q.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = sample();
        let mut buf = Vec::new();
        write_path(&mut buf, &p).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_path(&bad[..]), Err(Error::Format(_))));
        let mut bumped = buf.clone();
        bumped[4] = 2;
        assert!(matches!(read_path(&bumped[..]), Err(Error::UnsupportedVersion { found: 2, .. })));
        assert!(matches!(read_path(&buf[..buf.len() - 3]), Err(Error::Length { .. })));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_path(&long[..]), Err(Error::Length { .. })));
    }
}
