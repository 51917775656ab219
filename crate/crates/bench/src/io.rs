//! Dataset loading and the binary CSR cache.
//!
//! `load_dataset` sniffs the file: binary caches start with the magic
//! `ASAGACSR`, anything else is parsed as libsvm text. The cache exists to
//! skip re-parsing large text files; `asaga cache` converts.
//!
//! Cache layout (all little-endian):
//!
//! ```text
//! magic     8 × u8   "ASAGACSR"
//! version   u32      currently 1
//! n         u64      samples
//! d         u64      features
//! nnz       u64      stored entries
//! indptr    (n+1) × u64
//! indices   nnz × u32
//! values    nnz × f64 (IEEE-754 bits)
//! labels    n × i8   (+1 / −1)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use asaga_core::data::{parse_libsvm, SparseDataset};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CSR_MAGIC: [u8; 8] = *b"ASAGACSR";
pub const CSR_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: asaga_core::data::ParseError,
    },
    #[error("{path}: {message}")]
    Cache { path: String, message: String },
}

fn io_err(path: &Path, source: io::Error) -> LoadError {
    LoadError::Io { path: path.display().to_string(), source }
}

fn cache_err(path: &Path, message: impl Into<String>) -> LoadError {
    LoadError::Cache { path: path.display().to_string(), message: message.into() }
}

/// Load a dataset from either a libsvm text file or a binary cache,
/// distinguishing them by the magic bytes.
pub fn load_dataset(path: &Path) -> Result<SparseDataset, LoadError> {
    let mut file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut head = [0u8; 8];
    let got = read_up_to(&mut file, &mut head).map_err(|e| io_err(path, e))?;
    if got == 8 && head == CSR_MAGIC {
        return read_csr_cache_body(&mut file, path);
    }
    let mut text = String::new();
    // Re-attach the sniffed prefix before parsing as text.
    let prefix = std::str::from_utf8(&head[..got])
        .map_err(|_| cache_err(path, "file is neither a CSR cache nor UTF-8 text"))?;
    text.push_str(prefix);
    file.read_to_string(&mut text).map_err(|e| io_err(path, e))?;
    parse_libsvm(&text, None).map_err(|source| LoadError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn read_up_to<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

/// Write the binary cache for a dataset.
pub fn write_csr_cache(path: &Path, data: &SparseDataset) -> Result<(), LoadError> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let (d, indptr, indices, values, labels) = data.csr_parts();
    let write = |out: &mut BufWriter<File>, bytes: &[u8]| -> Result<(), LoadError> {
        out.write_all(bytes).map_err(|e| io_err(path, e))
    };
    write(&mut out, &CSR_MAGIC)?;
    write(&mut out, &CSR_VERSION.to_le_bytes())?;
    write(&mut out, &(data.n() as u64).to_le_bytes())?;
    write(&mut out, &(d as u64).to_le_bytes())?;
    write(&mut out, &(data.nnz() as u64).to_le_bytes())?;
    for &p in indptr {
        write(&mut out, &(p as u64).to_le_bytes())?;
    }
    for &i in indices {
        write(&mut out, &i.to_le_bytes())?;
    }
    for &v in values {
        write(&mut out, &v.to_bits().to_le_bytes())?;
    }
    for &l in labels {
        write(&mut out, &[if l > 0.0 { 1u8 } else { 0xFFu8 }])?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

fn read_csr_cache_body<R: Read>(
    reader: &mut R,
    path: &Path,
) -> Result<SparseDataset, LoadError> {
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    let mut read_u32 = |r: &mut R| -> Result<u32, LoadError> {
        r.read_exact(&mut u32buf).map_err(|e| io_err(path, e))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(reader)?;
    if version != CSR_VERSION {
        return Err(cache_err(path, format!("unsupported cache version {version}")));
    }
    let mut read_u64 = |r: &mut R| -> Result<u64, LoadError> {
        r.read_exact(&mut u64buf).map_err(|e| io_err(path, e))?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let n = read_u64(reader)? as usize;
    let d = read_u64(reader)? as usize;
    let nnz = read_u64(reader)? as usize;

    let mut indptr = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        indptr.push(read_u64(reader)? as usize);
    }
    let mut indices = Vec::with_capacity(nnz);
    let mut b4 = [0u8; 4];
    for _ in 0..nnz {
        reader.read_exact(&mut b4).map_err(|e| io_err(path, e))?;
        indices.push(u32::from_le_bytes(b4));
    }
    let mut values = Vec::with_capacity(nnz);
    let mut b8 = [0u8; 8];
    for _ in 0..nnz {
        reader.read_exact(&mut b8).map_err(|e| io_err(path, e))?;
        values.push(f64::from_bits(u64::from_le_bytes(b8)));
    }
    let mut labels = Vec::with_capacity(n);
    let mut b1 = [0u8; 1];
    for _ in 0..n {
        reader.read_exact(&mut b1).map_err(|e| io_err(path, e))?;
        labels.push(if b1[0] == 1 { 1.0 } else { -1.0 });
    }
    SparseDataset::from_csr(d, indptr, indices, values, labels)
        .map_err(|e| cache_err(path, format!("corrupt cache: {e}")))
}

/// Content hash of the canonical CSR representation, as 16 hex characters.
/// Identical for a dataset loaded from text or from its binary cache.
pub fn dataset_hash(data: &SparseDataset) -> String {
    let mut hasher = Sha256::new();
    let (d, indptr, indices, values, labels) = data.csr_parts();
    hasher.update((data.n() as u64).to_le_bytes());
    hasher.update((d as u64).to_le_bytes());
    for &p in indptr {
        hasher.update((p as u64).to_le_bytes());
    }
    for &i in indices {
        hasher.update(i.to_le_bytes());
    }
    for &v in values {
        hasher.update(v.to_bits().to_le_bytes());
    }
    for &l in labels {
        hasher.update([if l > 0.0 { 1u8 } else { 0xFF }]);
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
