//! Binary dump and load of assembled operator matrices.
//!
//! Layout (little-endian): magic `MXUQOPS\0`, format version (u32), wavenumber (f64),
//! mesh level (u32), matrix count (u32), rows and columns (u64 each), the 32-byte
//! quadrature key, then each matrix row-major as `(re, im)` f64 pairs, followed by the
//! SHA-256 digest of everything before it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::Mat;
use sha2::{Digest, Sha256};

use crate::c64;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

const MAGIC: &[u8; 8] = b"MXUQOPS\0";
pub const FORMAT_VERSION: u32 = 1;

/// Identifies an assembled operator set.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheKey {
    pub kappa: f64,
    pub level: u32,
    pub quadrature: [u8; 32],
}

impl CacheKey {
    pub fn new(kappa: f64, level: u32, config: &QuadratureConfig) -> Self {
        let json = serde_json::to_vec(config).expect("quadrature config serializes");
        let mut h = Sha256::new();
        h.update(b"efie+dlp/rt0/v1");
        h.update(&json);
        Self { kappa, level, quadrature: h.finalize().into() }
    }

    /// File name inside a cache directory.
    pub fn file_name(&self) -> String {
        let hex: String = self.quadrature[..6].iter().map(|b| format!("{b:02x}")).collect();
        format!("ops-k{}-l{}-{hex}.bin", self.kappa, self.level)
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(self.file_name())
    }
}

struct HashingWriter<W: Write> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Writes square or rectangular matrices of identical shape under `key`.
pub fn save(path: &Path, key: &CacheKey, mats: &[&Mat<c64>]) -> Result<()> {
    let (rows, cols) = mats.first().map_or((0, 0), |m| (m.nrows(), m.ncols()));
    if mats.iter().any(|m| m.nrows() != rows || m.ncols() != cols) {
        return Err(Error::Cache("matrices must share one shape".into()));
    }
    let tmp = path.with_extension("partial");
    {
        let mut w = HashingWriter { inner: BufWriter::new(File::create(&tmp)?), hash: Sha256::new() };
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&key.kappa.to_le_bytes())?;
        w.write_all(&key.level.to_le_bytes())?;
        w.write_all(&(mats.len() as u32).to_le_bytes())?;
        w.write_all(&(rows as u64).to_le_bytes())?;
        w.write_all(&(cols as u64).to_le_bytes())?;
        w.write_all(&key.quadrature)?;
        let mut row = Vec::with_capacity(cols * 16);
        for m in mats {
            for i in 0..rows {
                row.clear();
                for j in 0..cols {
                    let z = m[(i, j)];
                    row.extend_from_slice(&z.re.to_le_bytes());
                    row.extend_from_slice(&z.im.to_le_bytes());
                }
                w.write_all(&row)?;
            }
        }
        let digest = w.hash.clone().finalize();
        w.inner.write_all(&digest)?;
        w.inner.flush()?;
    }
    std::fs::rename(tmp, path)?;
    Ok(())
}

struct HashingReader<R: Read> {
    inner: R,
    hash: Sha256,
}

impl<R: Read> HashingReader<R> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| Error::Cache(format!("truncated file: {e}")))?;
        self.hash.update(b);
        Ok(b)
    }
}

/// Reads matrices written by [`save`], verifying the checksum and that the header matches `key`.
pub fn load(path: &Path, key: &CacheKey) -> Result<Vec<Mat<c64>>> {
    let mut r = HashingReader { inner: BufReader::new(File::open(path)?), hash: Sha256::new() };
    if &r.take::<8>()? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take()?);
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("unsupported format version {version}")));
    }
    let kappa = f64::from_le_bytes(r.take()?);
    let level = u32::from_le_bytes(r.take()?);
    let count = u32::from_le_bytes(r.take()?) as usize;
    let rows = u64::from_le_bytes(r.take()?) as usize;
    let cols = u64::from_le_bytes(r.take()?) as usize;
    let quad: [u8; 32] = r.take()?;
    let found = CacheKey { kappa, level, quadrature: quad };
    if &found != key {
        return Err(Error::Cache(format!("header {found:?} does not match requested {key:?}")));
    }
    let mut mats = Vec::with_capacity(count);
    let mut buf = vec![0u8; cols * 16];
    for _ in 0..count {
        let mut m = Mat::<c64>::zeros(rows, cols);
        for i in 0..rows {
            r.inner.read_exact(&mut buf).map_err(|e| Error::Cache(format!("truncated file: {e}")))?;
            r.hash.update(&buf);
            for j in 0..cols {
                let re = f64::from_le_bytes(buf[16 * j..16 * j + 8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[16 * j + 8..16 * j + 16].try_into().unwrap());
                m[(i, j)] = c64::new(re, im);
            }
        }
        mats.push(m);
    }
    let expected = r.hash.finalize();
    let mut stored = [0u8; 32];
    r.inner.read_exact(&mut stored).map_err(|e| Error::Cache(format!("missing checksum: {e}")))?;
    if stored[..] != expected[..] {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    Ok(mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat<c64> {
        Mat::from_fn(3, 5, |i, j| c64::new(i as f64 - 0.25 * j as f64, (i * j) as f64 * 1e-300))
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey::new(2.0, 1, &QuadratureConfig::default());
        let path = key.path_in(dir.path());
        let (a, b) = (sample(), sample().transpose().to_owned());
        save(&path, &key, &[&a, &a]).unwrap();
        assert_eq!(load(&path, &key).unwrap(), vec![a.clone(), a.clone()]);
        assert!(save(&path, &key, &[&a, &b]).is_err());
    }

    #[test]
    fn key_depends_on_quadrature() {
        let q = QuadratureConfig::default();
        let a = CacheKey::new(2.0, 3, &q);
        assert_ne!(a.file_name(), CacheKey::new(2.0, 3, &q.doubled()).file_name());
        assert_ne!(a.file_name(), CacheKey::new(4.0, 3, &q).file_name());
        assert_ne!(a.file_name(), CacheKey::new(2.0, 4, &q).file_name());
        assert_eq!(a.file_name(), CacheKey::new(2.0, 3, &q).file_name());
    }

    #[test]
    fn damaged_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey::new(2.0, 1, &QuadratureConfig::default());
        let path = key.path_in(dir.path());
        save(&path, &key, &[&sample()]).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] ^= 0xff;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load(&path, &key), Err(Error::Cache(m)) if m.contains("magic")));

        std::fs::write(&path, &good[..good.len() - 40]).unwrap();
        assert!(matches!(load(&path, &key), Err(Error::Cache(_))));

        let mut bad = good.clone();
        let k = good.len() - 50;
        bad[k] ^= 0x10;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(load(&path, &key), Err(Error::Cache(m)) if m == "checksum mismatch"));

        std::fs::write(&path, &good).unwrap();
        let other = CacheKey::new(3.0, 1, &QuadratureConfig::default());
        assert!(matches!(load(&path, &other), Err(Error::Cache(_))));
    }
}
