//! Matrix Market export of symmetric operators (debugging aid).

use patchspec::linalg::SymMat;
use std::io::Write;
use std::path::Path;

/// Writes the lower triangle in coordinate format with 1-based indices.
pub fn write_symmetric(path: &Path, mat: &SymMat) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let n = mat.dim();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            let v = mat.get(i, j);
            if v != 0.0 {
                entries.push((i + 1, j + 1, v));
            }
        }
    }
    let mut out = Vec::new();
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{n} {n} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{i} {j} {}", crate::csvio::format_real(v))?;
    }
    std::fs::write(path, out)
}
