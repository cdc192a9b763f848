//! Corpus manifest: one row per clip with label and data paths.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cascade::AffectLabel;
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "clip_id,participant_id,label,audio_path,frames_dir";

/// One clip in a corpus. Paths are stored relative to the manifest file and
/// resolved against its directory on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub participant_id: String,
    pub label: AffectLabel,
    pub audio_path: PathBuf,
    pub frames_dir: PathBuf,
}

/// Render manifest rows as CSV with paths exactly as given.
pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in entries {
        for field in [&e.clip_id, &e.participant_id] {
            if field.contains(',') {
                return Err(Error::Config(format!("manifest field contains a comma: {field}")));
            }
        }
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.clip_id,
            e.participant_id,
            e.label,
            e.audio_path.display(),
            e.frames_dir.display(),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a manifest, resolving relative paths against the manifest directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == MANIFEST_HEADER => {}
        _ => return Err(Error::format(path, format!("expected header {MANIFEST_HEADER}"))),
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::format(
                path,
                format!("line {}: expected 5 fields, got {}", lineno + 2, fields.len()),
            ));
        }
        let resolve = |p: &str| -> PathBuf {
            let pb = PathBuf::from(p);
            if pb.is_absolute() {
                pb
            } else {
                base.join(pb)
            }
        };
        entries.push(ManifestEntry {
            clip_id: fields[0].to_string(),
            participant_id: fields[1].to_string(),
            label: AffectLabel::parse(fields[2])?,
            audio_path: resolve(fields[3]),
            frames_dir: resolve(fields[4]),
        });
    }
    if entries.is_empty() {
        return Err(Error::format(path, "manifest has no clips"));
    }
    Ok(entries)
}
