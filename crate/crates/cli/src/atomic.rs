//! Temp-then-rename file writes: a killed stage never leaves a partial
//! output visible under its final name.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Write `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |file| {
        file.write_all(bytes)?;
        Ok(())
    })
}

/// Stream into a temp file next to `path`; rename over `path` only if the
/// writer closure succeeds.
pub fn write_atomic_with(
    path: &Path,
    writer: impl FnOnce(&mut fs::File) -> Result<()>,
) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("output");
    let tmp = dir.join(format!(".tmp.{name}.{}", std::process::id()));

    let result = (|| {
        let mut file =
            fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        writer(&mut file)?;
        file.sync_all().ok();
        Ok(())
    })();

    match result {
        Ok(()) => {
            fs::rename(&tmp, path)
                .with_context(|| format!("renaming into {}", path.display()))?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Serialize records as JSONL atomically; returns the record count.
pub fn write_jsonl_atomic<T: serde::Serialize>(
    path: &Path,
    records: impl IntoIterator<Item = T>,
) -> Result<usize> {
    let mut count = 0;
    write_atomic_with(path, |file| {
        for record in records {
            let line = serde_json::to_string(&record)?;
            file.write_all(line.as_bytes())?;
            file.write_all(b"\n")?;
            count += 1;
        }
        Ok(())
    })?;
    Ok(count)
}
