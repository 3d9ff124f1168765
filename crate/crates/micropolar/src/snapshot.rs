//! Binary snapshot format for spectral states.
//!
//! Layout (little-endian):
//! `magic "MPSF" | version u32 | n u32 | box_length f64 | field_count u32 |
//! reality u8 | t f64 | fields…` where each field is `modes` interleaved
//! `(re, im)` f64 pairs in flat row-major mode order. A [`crate::model::State`]
//! stores six fields: `u¹ u² u³ ω¹ ω² ω³`.
//!
//! Writes go through a temporary file renamed into place, so readers never
//! observe a partial snapshot.

use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::model::State;
use crate::{Error, Result, C64};
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

const MAGIC: &[u8; 4] = b"MPSF";
const VERSION: u32 = 1;

/// Write a state snapshot atomically.
pub fn write_state(path: &Path, state: &State) -> Result<()> {
    let grid = state.u.grid();
    let tmp = tmp_path(path);
    {
        let mut w = BufWriter::new(std::fs::File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(grid.n as u32).to_le_bytes())?;
        w.write_all(&grid.box_length.to_le_bytes())?;
        w.write_all(&6u32.to_le_bytes())?;
        w.write_all(&[1u8])?;
        w.write_all(&state.t.to_le_bytes())?;
        for f in state.u.c.iter().chain(state.omega.c.iter()) {
            for v in &f.modes {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a state snapshot.
pub fn read_state(path: &Path) -> Result<State> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config(format!(
            "{} is not a snapshot file (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Config(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let box_length = read_f64(&mut r)?;
    let field_count = read_u32(&mut r)?;
    if field_count != 6 {
        return Err(Error::Config(format!(
            "expected 6 fields in a state snapshot, found {field_count}"
        )));
    }
    let mut reality = [0u8; 1];
    r.read_exact(&mut reality)?;
    let t = read_f64(&mut r)?;
    let grid = GridSpec::new(n, box_length)?;
    let mut fields = Vec::with_capacity(6);
    for _ in 0..6 {
        let mut modes = vec![C64::new(0.0, 0.0); grid.modes()];
        let mut buf = vec![0u8; grid.modes() * 16];
        r.read_exact(&mut buf)?;
        for (i, m) in modes.iter_mut().enumerate() {
            let re = f64::from_le_bytes(buf[16 * i..16 * i + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[16 * i + 8..16 * i + 16].try_into().unwrap());
            *m = C64::new(re, im);
        }
        fields.push(ScalarField::from_modes(grid, modes, reality[0] != 0)?);
    }
    let mut it = fields.into_iter();
    let u = VectorField::new([
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    ])?;
    let omega = VectorField::new([
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    ])?;
    Ok(State { u, omega, t })
}

/// Write text content atomically (CSV/JSON reports).
pub fn write_text_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = tmp_path(path);
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn tmp_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

fn read_u32<R: std::io::Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: std::io::Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
