//! Raw snapshot files: one little-endian `f64` file per scalar component plus
//! a JSON sidecar describing it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const LAYOUT: &str = "row-major-f64-le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub dims: [usize; 3],
    pub lengths: [f64; 3],
    pub field_name: String,
    pub component: String,
    pub time: f64,
    pub layout: String,
}

pub fn encode(f: &ScalarField) -> Vec<u8> {
    f.values().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode(grid: GridSpec, bytes: &[u8]) -> Result<ScalarField> {
    if bytes.len() != 8 * grid.len() {
        return Err(Error::InvalidConfig(format!(
            "snapshot has {} bytes, grid needs {}",
            bytes.len(),
            8 * grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(ScalarField::from_values(grid, values))
}

/// Writes `<stem>.f64` and `<stem>.json` under `dir`; returns both paths.
pub fn write_component(
    dir: &Path,
    stem: &str,
    field_name: &str,
    component: &str,
    time: f64,
    f: &ScalarField,
) -> Result<[PathBuf; 2]> {
    let g = f.grid();
    let meta = SnapshotMeta {
        dims: g.dims(),
        lengths: g.lengths(),
        field_name: field_name.to_string(),
        component: component.to_string(),
        time,
        layout: LAYOUT.to_string(),
    };
    let data_path = dir.join(format!("{stem}.f64"));
    let meta_path = dir.join(format!("{stem}.json"));
    write_atomic(&data_path, &encode(f))?;
    write_atomic(&meta_path, serde_json::to_string_pretty(&meta)?.as_bytes())?;
    Ok([data_path, meta_path])
}

/// Reads a component back from its sidecar path.
pub fn read_component(meta_path: &Path) -> Result<(SnapshotMeta, ScalarField)> {
    let text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let meta: SnapshotMeta = serde_json::from_str(&text)?;
    if meta.layout != LAYOUT {
        return Err(Error::InvalidConfig(format!("unknown layout {}", meta.layout)));
    }
    let grid = GridSpec::new(meta.dims, meta.lengths)?;
    let data_path = meta_path.with_extension("f64");
    let bytes = std::fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let f = decode(grid, &bytes)?;
    Ok((meta, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;

    #[test]
    fn write_then_read() {
        let g = make_grid([8, 4, 1], [1.0, 2.0, 3.0]).unwrap();
        let f = ScalarField::from_fn(g, |x, y, _| x - 2.0 * y);
        let dir = tempfile::tempdir().unwrap();
        let [data, meta] = write_component(dir.path(), "v_x_000003", "v", "x", 0.5, &f).unwrap();
        assert_eq!(std::fs::metadata(&data).unwrap().len(), 8 * 32);
        let (m, back) = read_component(&meta).unwrap();
        assert_eq!(back, f);
        assert_eq!(m.layout, "row-major-f64-le");
        assert_eq!(m.component, "x");

        // first value is f(0,0,0) = 0, second is f(0, dy, 0) = -1 (z is inactive, y next)
        let bytes = std::fs::read(&data).unwrap();
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), -1.0);
    }

    #[test]
    fn decode_rejects_wrong_length() {
        let g = make_grid([8, 4, 1], [1.0; 3]).unwrap();
        assert!(decode(g, &[0u8; 24]).is_err());
    }
}
