//! Feature files, clip manifests, keyframe sampling, crop application, a toy
//! grayscale feature extractor and the synthetic dataset generator.

mod crop;
mod features;
mod keyframes;
mod manifest;
mod synth;
mod toy;

pub use crop::{apply_crop, load_crop_records, select_target_box, CropRecord, Frame};
pub use features::{read_features, write_features, FeatureSequence, FEATURE_MAGIC};
pub use keyframes::{sample_keyframes, DEFAULT_KEYFRAMES};
pub use manifest::{ActionLabel, ClipRecord, Manifest};
pub use synth::{generate_synthetic, synthesize, SynthClip, SynthSpec};
pub use toy::toy_extract;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers see either the old file or the complete new one.
pub fn atomic_write<W>(path: &Path, write: W) -> Result<()>
where
    W: FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
