//! State interchange formats and atomic file writes.
//!
//! CSV: header `a1,..,ad,re,im`, then one row per stored mode in lexicographic
//! order. The lattice is recovered from the rows: `K` is the largest
//! coordinate magnitude, and the lattice is full iff a negative coordinate
//! appears.
//!
//! Binary (little endian): `u32 d`, `u32 K`, `u8 kind` (0 full, 1 half),
//! `u64 count`, then `count` pairs of `f64` (re, im).

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{LatticeKind, Mode, ModeLattice};
use crate::state::SpectralState;

pub fn state_to_csv(state: &SpectralState) -> String {
    let lat = state.lattice();
    let mut out = String::new();
    for i in 1..=lat.dim() {
        out.push_str(&format!("a{i},"));
    }
    out.push_str("re,im\n");
    for (m, c) in lat.modes().zip(state.coefficients()) {
        for a in m.coords() {
            out.push_str(&format!("{a},"));
        }
        out.push_str(&format!("{:e},{:e}\n", c.re, c.im));
    }
    out
}

pub fn state_from_csv(text: &str) -> Result<SpectralState> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty state file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[cols.len() - 2] != "re" || cols[cols.len() - 1] != "im" {
        return Err(Error::Parse(format!("bad state header `{header}`")));
    }
    let dim = cols.len() - 2;
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 2 {
            return Err(Error::Parse(format!("row {}: expected {} fields", ln + 2, dim + 2)));
        }
        let coords = fields[..dim]
            .iter()
            .map(|f| f.parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", ln + 2)))?;
        let re: f64 = fields[dim]
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: {e}", ln + 2)))?;
        let im: f64 = fields[dim + 1]
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: {e}", ln + 2)))?;
        rows.push((Mode::new(&coords), Complex64::new(re, im)));
    }
    let cutoff = rows
        .iter()
        .flat_map(|(m, _)| m.coords().iter().map(|c| c.unsigned_abs() as usize))
        .max()
        .ok_or_else(|| Error::Parse("state file has no rows".into()))?;
    let full = rows.iter().any(|(m, _)| !m.is_nonnegative());
    let kind = if full { LatticeKind::Full } else { LatticeKind::Half };
    let lattice = ModeLattice::new(dim, kind, cutoff.max(1))?;
    if rows.len() != lattice.len() {
        return Err(Error::Parse(format!(
            "expected {} rows for a dense lattice, got {}",
            lattice.len(),
            rows.len()
        )));
    }
    let mut state = SpectralState::zeros(lattice);
    for (m, c) in rows {
        state.set(&m, c)?;
    }
    Ok(state)
}

pub fn state_to_bytes(state: &SpectralState) -> Vec<u8> {
    let lat = state.lattice();
    let mut out = Vec::with_capacity(17 + 16 * lat.len());
    out.extend_from_slice(&(lat.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(lat.cutoff() as u32).to_le_bytes());
    out.push(match lat.kind() {
        LatticeKind::Full => 0,
        LatticeKind::Half => 1,
    });
    out.extend_from_slice(&(lat.len() as u64).to_le_bytes());
    for c in state.coefficients() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn state_from_bytes(bytes: &[u8]) -> Result<SpectralState> {
    let take = |range: std::ops::Range<usize>| {
        bytes
            .get(range)
            .ok_or_else(|| Error::Parse("truncated binary state".into()))
    };
    let dim = u32::from_le_bytes(take(0..4)?.try_into().unwrap()) as usize;
    let cutoff = u32::from_le_bytes(take(4..8)?.try_into().unwrap()) as usize;
    let kind = match take(8..9)?[0] {
        0 => LatticeKind::Full,
        1 => LatticeKind::Half,
        b => return Err(Error::Parse(format!("unknown lattice kind byte {b}"))),
    };
    let count = u64::from_le_bytes(take(9..17)?.try_into().unwrap()) as usize;
    let lattice = ModeLattice::new(dim, kind, cutoff)?;
    if count != lattice.len() {
        return Err(Error::Parse(format!(
            "count {count} does not match lattice size {}",
            lattice.len()
        )));
    }
    if bytes.len() != 17 + 16 * count {
        return Err(Error::Parse("binary state length mismatch".into()));
    }
    let coeffs = bytes[17..]
        .chunks_exact(16)
        .map(|ch| {
            Complex64::new(
                f64::from_le_bytes(ch[..8].try_into().unwrap()),
                f64::from_le_bytes(ch[8..].try_into().unwrap()),
            )
        })
        .collect();
    SpectralState::from_coefficients(lattice, coeffs)
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
