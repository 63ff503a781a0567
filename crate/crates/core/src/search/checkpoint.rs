//! Binary checkpoint files for candidate sets.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `SBND`                           |
//! | 4      | 2    | format version (1)                     |
//! | 6      | 1    | element count `n`                      |
//! | 7      | 1    | phase: 0 forward, 1 backward           |
//! | 8      | 2    | comparison budget `C`                  |
//! | 10     | 2    | step `c`                               |
//! | 12     | 8    | number of codes                        |
//! | 20     | 2n·count | canonical codes, ascending         |
//! | end-8  | 8    | FNV-1a 64 of the code payload          |

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{CandidateSet, Phase};
use crate::poset::CanonicalCode;

pub const MAGIC: &[u8; 4] = b"SBND";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt checkpoint at byte {offset}: {reason}")]
    Corrupt {
        path: PathBuf,
        offset: usize,
        reason: String,
    },
    #[error("{path}: checkpoint is for {found}, expected {expected}")]
    Mismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Writes `set` to `path` atomically (temporary file, then rename).
pub fn checkpoint(set: &CandidateSet, path: &Path) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io {
        path: path.to_owned(),
        source,
    };
    let tmp = path.with_extension("partial");
    let file = File::create(&tmp).map_err(io)?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.push(set.n as u8);
    header.push(set.phase as u8);
    header.extend_from_slice(&(set.budget as u16).to_le_bytes());
    header.extend_from_slice(&(set.step as u16).to_le_bytes());
    header.extend_from_slice(&(set.len() as u64).to_le_bytes());
    w.write_all(&header).map_err(io)?;

    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for code in set.codes() {
        let bytes = code.as_bytes();
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        w.write_all(bytes).map_err(io)?;
    }
    w.write_all(&h.to_le_bytes()).map_err(io)?;
    let file = w.into_inner().map_err(|e| io(e.into_error()))?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

/// Reads a checkpoint back, validating magic, length, code validity, order
/// and checksum.
pub fn resume(path: &Path) -> Result<CandidateSet, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_owned(),
        source,
    })?;
    let corrupt = |offset: usize, reason: &str| CheckpointError::Corrupt {
        path: path.to_owned(),
        offset,
        reason: reason.to_owned(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(corrupt(bytes.len(), "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt(0, "bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(corrupt(4, &format!("unsupported version {version}")));
    }
    let n = bytes[6] as usize;
    if !(1..=crate::MAX_ELEMENTS).contains(&n) {
        return Err(corrupt(6, &format!("element count {n} out of range")));
    }
    let phase = match bytes[7] {
        0 => Phase::Forward,
        1 => Phase::Backward,
        other => return Err(corrupt(7, &format!("unknown phase {other}"))),
    };
    let budget = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let step = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let width = 2 * n;
    let payload_end = count
        .checked_mul(width)
        .and_then(|len| len.checked_add(HEADER_LEN))
        .ok_or_else(|| corrupt(12, "code count overflows"))?;
    if bytes.len() < payload_end + 8 {
        return Err(corrupt(bytes.len(), "truncated payload"));
    }
    if bytes.len() > payload_end + 8 {
        return Err(corrupt(payload_end + 8, "trailing bytes"));
    }
    let payload = &bytes[HEADER_LEN..payload_end];
    let stored = u64::from_le_bytes(bytes[payload_end..payload_end + 8].try_into().unwrap());
    if fnv1a64(payload) != stored {
        return Err(corrupt(payload_end, "checksum mismatch"));
    }
    let mut codes = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(width).enumerate() {
        let offset = HEADER_LEN + i * width;
        let code = CanonicalCode::from_bytes(n, chunk)
            .ok_or_else(|| corrupt(offset, "invalid poset code"))?;
        if codes
            .last()
            .is_some_and(|prev: &CanonicalCode| *prev >= code)
        {
            return Err(corrupt(offset, "codes not strictly ascending"));
        }
        codes.push(code);
    }
    Ok(CandidateSet::from_codes(n, budget, step, phase, codes))
}

/// Like [`resume`], but rejects a file whose header disagrees with the run.
pub fn resume_expecting(
    path: &Path,
    n: usize,
    budget: usize,
    phase: Phase,
    step: usize,
) -> Result<CandidateSet, CheckpointError> {
    let set = resume(path)?;
    let found = (set.n, set.budget, set.phase, set.step);
    let expected = (n, budget, phase, step);
    if found != expected {
        return Err(CheckpointError::Mismatch {
            path: path.to_owned(),
            found: format!("n={} C={} {:?} step {}", found.0, found.1, found.2, found.3),
            expected: format!(
                "n={} C={} {:?} step {}",
                expected.0, expected.1, expected.2, expected.3
            ),
        });
    }
    Ok(set)
}

pub(crate) fn file_name(phase: Phase, step: usize) -> String {
    match phase {
        Phase::Forward => format!("forward-{step:03}.sbnd"),
        Phase::Backward => format!("backward-{step:03}.sbnd"),
    }
}
