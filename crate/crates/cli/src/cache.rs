//! Content-addressed on-disk cache of moment tables.

use std::path::{Path, PathBuf};

use blup_core::{DistributionSpec, MomentTable, Provenance};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CACHE_DIR_ENV: &str = "BLUP_CACHE_DIR";

/// Cache key: family label, sample size, tolerance bits, starting node count
/// and, for tabulated families, a digest of the table file.
pub fn cache_key(spec: &DistributionSpec, n: usize, extra: Option<&[u8]>) -> String {
    let mut h = Sha256::new();
    h.update(spec.family.label().as_bytes());
    h.update(b"\0");
    h.update((n as u64).to_le_bytes());
    h.update(spec.quad_tol.to_bits().to_le_bytes());
    h.update((spec.quad_points as u64).to_le_bytes());
    if let Some(bytes) = extra {
        h.update(b"\0");
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("moments-{key}.json"))
}

fn matches(table: &MomentTable, spec: &DistributionSpec, n: usize) -> bool {
    table.n == n
        && table.family == spec.family.label()
        && (table.provenance == Provenance::ClosedForm || table.quad_tol == Some(spec.quad_tol))
}

/// Loads from the cache when a valid entry exists; otherwise computes the
/// table and stores it. Unreadable or mismatched entries are recomputed.
pub fn load_or_compute(
    dir: Option<&Path>,
    spec: &DistributionSpec,
    n: usize,
    extra: Option<&[u8]>,
) -> CliResult<(MomentTable, bool)> {
    let Some(dir) = dir else {
        return Ok((MomentTable::for_spec(spec, n)?, false));
    };
    let path = cache_path(dir, &cache_key(spec, n, extra));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(table) = MomentTable::from_json(&text) {
            if matches(&table, spec, n) {
                return Ok((table, true));
            }
        }
    }
    let table = MomentTable::for_spec(spec, n)?;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating cache directory {}", dir.display()), e))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, table.to_json())
        .and_then(|_| std::fs::rename(&tmp, &path))
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok((table, false))
}
