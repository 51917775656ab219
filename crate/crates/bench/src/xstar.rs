//! Reference-optimum cache.
//!
//! Suboptimality traces need `f(x*)`; solving for `x*` is the slowest part
//! of setting up an experiment, so the result is persisted keyed by
//! `(dataset hash, λ, tol)`. The solve itself is deterministic, so a cache
//! hit and a recompute agree bit-for-bit.
//!
//! File layout (little-endian): magic `ASAGAXST`, version `u32` (1),
//! `d: u64`, `lambda: f64` bits, `tol: f64` bits, then `d` coordinate
//! `f64` bit patterns. The key fields are validated on read.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use asaga_core::objective::{reference_optimum, ReferenceError};
use asaga_core::Objective;
use thiserror::Error;

pub const XSTAR_MAGIC: [u8; 8] = *b"ASAGAXST";
pub const XSTAR_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum XstarError {
    #[error("reference cache {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("reference cache {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error(transparent)]
    Solve(#[from] ReferenceError),
}

/// Outcome of a cache lookup-or-solve.
pub struct Reference {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub from_cache: bool,
}

fn cache_file(dir: &Path, data_hash: &str, lambda: f64, tol: f64) -> PathBuf {
    dir.join(format!(
        "xstar-{data_hash}-{:016x}-{:016x}.bin",
        lambda.to_bits(),
        tol.to_bits()
    ))
}

/// Load `x*` from the cache, or solve and persist it. With `cache_dir =
/// None` the solve always runs and nothing is written.
pub fn load_or_solve(
    obj: &Objective<'_>,
    data_hash: &str,
    tol: f64,
    max_epochs: u64,
    cache_dir: Option<&Path>,
) -> Result<Reference, XstarError> {
    if let Some(dir) = cache_dir {
        let path = cache_file(dir, data_hash, obj.lambda(), tol);
        if path.exists() {
            let x_star = read_xstar(&path, obj.dim(), obj.lambda(), tol)?;
            let f_star = obj.loss(&x_star);
            return Ok(Reference { x_star, f_star, from_cache: true });
        }
    }
    let x_star = reference_optimum(obj, tol, max_epochs)?;
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir)
            .map_err(|e| XstarError::Io { path: dir.display().to_string(), source: e })?;
        let path = cache_file(dir, data_hash, obj.lambda(), tol);
        write_xstar(&path, &x_star, obj.lambda(), tol)?;
    }
    let f_star = obj.loss(&x_star);
    Ok(Reference { x_star, f_star, from_cache: false })
}

fn write_xstar(path: &Path, x: &[f64], lambda: f64, tol: f64) -> Result<(), XstarError> {
    let io_err = |e| XstarError::Io { path: path.display().to_string(), source: e };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let io_err = |e| XstarError::Io { path: path.display().to_string(), source: e };
    out.write_all(&XSTAR_MAGIC).map_err(io_err)?;
    out.write_all(&XSTAR_VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&(x.len() as u64).to_le_bytes()).map_err(io_err)?;
    out.write_all(&lambda.to_bits().to_le_bytes()).map_err(io_err)?;
    out.write_all(&tol.to_bits().to_le_bytes()).map_err(io_err)?;
    for &v in x {
        out.write_all(&v.to_bits().to_le_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn read_xstar(path: &Path, d: usize, lambda: f64, tol: f64) -> Result<Vec<f64>, XstarError> {
    let io_err = |e| XstarError::Io { path: path.display().to_string(), source: e };
    let corrupt = |m: String| XstarError::Corrupt { path: path.display().to_string(), message: m };
    let mut file = BufReader::new(File::open(path).map_err(io_err)?);
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    file.read_exact(&mut b8).map_err(io_err)?;
    if b8 != XSTAR_MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    file.read_exact(&mut b4).map_err(io_err)?;
    if u32::from_le_bytes(b4) != XSTAR_VERSION {
        return Err(corrupt(format!("unsupported version {}", u32::from_le_bytes(b4))));
    }
    file.read_exact(&mut b8).map_err(io_err)?;
    let stored_d = u64::from_le_bytes(b8) as usize;
    file.read_exact(&mut b8).map_err(io_err)?;
    let stored_lambda = f64::from_bits(u64::from_le_bytes(b8));
    file.read_exact(&mut b8).map_err(io_err)?;
    let stored_tol = f64::from_bits(u64::from_le_bytes(b8));
    if stored_d != d || stored_lambda.to_bits() != lambda.to_bits() || stored_tol.to_bits() != tol.to_bits() {
        return Err(corrupt(format!(
            "key mismatch: file has (d={stored_d}, λ={stored_lambda}, tol={stored_tol})"
        )));
    }
    let mut x = Vec::with_capacity(d);
    for _ in 0..d {
        file.read_exact(&mut b8).map_err(io_err)?;
        x.push(f64::from_bits(u64::from_le_bytes(b8)));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use asaga_core::data::SparseDataset;
    use asaga_core::sparsity_profile;

    #[test]
    fn solve_then_hit_cache_bitwise() {
        let data = SparseDataset::from_rows(
            2,
            &[
                (1.0, vec![(0, 1.0), (1, -0.5)]),
                (-1.0, vec![(0, 0.25)]),
                (1.0, vec![(1, 1.0)]),
            ],
        )
        .unwrap();
        let profile = sparsity_profile(&data);
        let obj = Objective::new(&data, &profile, 0.2).unwrap();
        let hash = crate::io::dataset_hash(&data);
        let dir = tempfile::tempdir().unwrap();

        let first = load_or_solve(&obj, &hash, 1e-12, 20_000, Some(dir.path())).unwrap();
        assert!(!first.from_cache);
        let second = load_or_solve(&obj, &hash, 1e-12, 20_000, Some(dir.path())).unwrap();
        assert!(second.from_cache);
        assert_eq!(first.x_star, second.x_star);
        assert_eq!(first.f_star, second.f_star);
    }

    #[test]
    fn key_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = cache_file(dir.path(), "abc", 0.5, 1e-12);
        write_xstar(&path, &[1.0, 2.0], 0.5, 1e-12).unwrap();
        assert!(read_xstar(&path, 2, 0.5, 1e-12).is_ok());
        assert!(read_xstar(&path, 3, 0.5, 1e-12).is_err());
        assert!(read_xstar(&path, 2, 0.25, 1e-12).is_err());
    }
}
