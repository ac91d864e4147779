use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vbpg_core::diagnostics::ScanRow;
use vbpg_core::Trace;

use crate::error::{CliError, CliResult};

/// Header of the per-iteration trace table.
pub const TRACE_COLUMNS: [&str; 6] = ["k", "F", "step_norm", "gap", "envelope", "residual_bound"];

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|()| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::output(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::output(path, e.into()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Trace table; the gap and envelope cells are empty when not computed.
pub fn trace_csv(trace: &Trace) -> Vec<u8> {
    csv_bytes(
        &TRACE_COLUMNS,
        trace.records.iter().map(|r| {
            vec![
                r.k.to_string(),
                r.f_value.to_string(),
                r.step_norm.to_string(),
                opt(r.gap),
                opt(r.envelope),
                r.residual_bound.to_string(),
            ]
        }),
    )
}

pub fn scan_csv(rows: &[ScanRow]) -> Vec<u8> {
    csv_bytes(&["n", "ratio"], rows.iter().map(|r| vec![r.n.to_string(), r.ratio.to_string()]))
}

/// Creates `dir` and checks that it accepts files.
pub fn prepare_dir(dir: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    let probe = dir.join(".vbpg-write-probe");
    fs::write(&probe, b"").map_err(|e| CliError::output(dir, e))?;
    let _ = fs::remove_file(probe);
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn scan_table_layout() {
        let rows = [ScanRow { n: 2, ratio: 0.5, measured: None }];
        assert_eq!(String::from_utf8(scan_csv(&rows)).unwrap(), "n,ratio\n2,0.5\n");
    }
}
