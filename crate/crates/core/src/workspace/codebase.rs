use std::path::Path;

use globset::{Glob, GlobSetBuilder};
use walkdir::WalkDir;

use super::WorkspaceError;
use crate::pipeline::CodeDocument;

/// Files under `root` matching any of `include_globs` (relative to `root`),
/// in lexicographic order of their relative paths. Paths use `/`.
pub fn load_codebase(root: &Path, include_globs: &[String]) -> Result<Vec<CodeDocument>, WorkspaceError> {
    if !root.is_dir() {
        return Err(WorkspaceError::ConfigInvalid(format!("project root {} is not a directory", root.display())));
    }
    let mut builder = GlobSetBuilder::new();
    for pattern in include_globs {
        let glob = Glob::new(pattern).map_err(|e| WorkspaceError::ConfigInvalid(format!("bad glob `{pattern}`: {e}")))?;
        builder.add(glob);
    }
    let set = builder
        .build()
        .map_err(|e| WorkspaceError::ConfigInvalid(e.to_string()))?;

    let mut matched = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            WorkspaceError::Io {
                path,
                source: e.into(),
            }
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if set.is_match(&rel) {
            matched.push((rel, entry.path().to_path_buf()));
        }
    }
    if matched.is_empty() {
        return Err(WorkspaceError::NoFilesMatched {
            root: root.to_path_buf(),
            patterns: include_globs.to_vec(),
        });
    }
    matched.sort();
    matched
        .into_iter()
        .map(|(rel, path)| {
            let bytes = std::fs::read(&path).map_err(WorkspaceError::io(&path))?;
            Ok(CodeDocument::from_path(rel, String::from_utf8_lossy(&bytes).into_owned()))
        })
        .collect()
}

/// Relative path without its extension, `/` replaced by `_`:
/// `views/variants/index.ctp` becomes `views_variants_index`.
pub fn file_key(relative_path: &str) -> String {
    let (dir, name) = match relative_path.rsplit_once('/') {
        Some((d, n)) => (Some(d), n),
        None => (None, relative_path),
    };
    let stem = match name.rsplit_once('.') {
        Some((s, _)) if !s.is_empty() => s,
        _ => name,
    };
    match dir {
        Some(d) => format!("{}_{stem}", d.replace('/', "_")),
        None => stem.to_string(),
    }
}
