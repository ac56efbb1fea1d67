use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use foresee_core::dataio::{self, ClassFilter};
use foresee_core::{DepthMap, Error as CoreError, ForegroundMask};

/// Process exit statuses. 2 is left to clap for usage errors.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const PARSE: u8 = 3;
    pub const SHAPE: u8 = 4;
    pub const MISSING_SAMPLE: u8 = 5;
    pub const INVALID_INPUT: u8 = 6;
}

/// Sample ids absent from one of the input trees.
#[derive(Debug)]
pub struct MissingSamples {
    pub what: String,
    pub ids: Vec<String>,
}

impl fmt::Display for MissingSamples {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing {} for sample(s): {}", self.what, self.ids.join(", "))
    }
}

impl std::error::Error for MissingSamples {}

pub fn exit_code(err: &anyhow::Error) -> ExitCode {
    for cause in err.chain() {
        if cause.downcast_ref::<MissingSamples>().is_some() {
            return ExitCode::from(exit::MISSING_SAMPLE);
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return ExitCode::from(core_code(e));
        }
    }
    ExitCode::from(exit::FAILURE)
}

fn core_code(e: &CoreError) -> u8 {
    use CoreError::*;
    match e {
        Parse { .. }
        | MissingKey { .. }
        | MalformedImage(_)
        | BitDepth(_)
        | BadMagic { .. }
        | UnsupportedVersion(_)
        | Truncated { .. }
        | TrailingBytes(_)
        | NonFinite { .. }
        | Config(_) => exit::PARSE,
        ShapeMismatch(_) => exit::SHAPE,
        Io(_) => exit::FAILURE,
        _ => exit::INVALID_INPUT,
    }
}

/// Resolves `path` against the dataset root when one is configured.
pub fn resolve(root: Option<&Path>, path: &Path) -> PathBuf {
    match root {
        Some(r) => r.join(path),
        None => path.to_path_buf(),
    }
}

/// Sorted stems of the files in `dir` with extension `ext`.
pub fn sample_ids(dir: &Path, ext: &str) -> Result<Vec<String>> {
    let mut ids = BTreeSet::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.insert(stem.to_string());
            }
        }
    }
    Ok(ids.into_iter().collect())
}

/// Ids from `split` when given, else every `ext` file in `dir`.
pub fn select_ids(split: Option<&Path>, dir: &Path, ext: &str) -> Result<Vec<String>> {
    match split {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading split file {}", p.display()))?;
            let mut ids = dataio::parse_index_list(&text);
            ids.sort();
            ids.dedup();
            Ok(ids)
        }
        None => sample_ids(dir, ext),
    }
}

/// Fails with [`MissingSamples`] if any id lacks `dir/<id>.<ext>`.
pub fn require_files(ids: &[String], dir: &Path, ext: &str, what: &str) -> Result<()> {
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| !dir.join(format!("{id}.{ext}")).is_file())
        .cloned()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(MissingSamples {
            what: format!("{what} in {}", dir.display()),
            ids: missing,
        }
        .into())
    }
}

pub fn class_filter(classes: &[String]) -> ClassFilter {
    if classes.is_empty() {
        ClassFilter::AllObjects
    } else {
        ClassFilter::Only(classes.to_vec())
    }
}

pub fn load_depth(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    dataio::read_depth_png(&bytes).with_context(|| format!("decoding depth map {}", path.display()))
}

/// Object mask of a label file rasterized at `height x width`.
pub fn load_mask(path: &Path, filter: &ClassFilter, height: usize, width: usize) -> Result<ForegroundMask> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let boxes = dataio::parse_labels(&text, filter).with_context(|| format!("parsing labels {}", path.display()))?;
    Ok(dataio::rasterize_mask(&boxes, height, width))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
