use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{ByClass, DrumClass, Instrument};
use crate::audio::{load_wav, save_wav, AudioBuffer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    pub name: String,
    pub audio: AudioBuffer,
}

/// Source material: mono drum one-shots per class and mono instrument loops.
///
/// On disk this is a directory with `kick/ snare/ hihat/ bass/ piano/ guitar/
/// vocal/` subdirectories of WAV files, read in file-name order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleLibrary {
    pub oneshots: ByClass<Vec<LibraryEntry>>,
    pub loops: BTreeMap<Instrument, Vec<LibraryEntry>>,
}

impl SampleLibrary {
    pub fn loops(&self, instrument: Instrument) -> &[LibraryEntry] {
        self.loops.get(&instrument).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Fails unless every drum class and instrument has at least one entry.
    pub fn check_complete(&self) -> Result<()> {
        for (class, entries) in self.oneshots.iter() {
            if entries.is_empty() {
                return Err(Error::arg(format!("library has no {class} one-shots")));
            }
        }
        for inst in Instrument::ALL {
            if self.loops(inst).is_empty() {
                return Err(Error::arg(format!("library has no {inst} loops")));
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::arg(format!("library directory {} not found", dir.display())));
        }
        let oneshots = ByClass::try_from_fn(|c: DrumClass| load_dir(&dir.join(c.name())))?;
        let mut loops = BTreeMap::new();
        for inst in Instrument::ALL {
            loops.insert(inst, load_dir(&dir.join(inst.name()))?);
        }
        Ok(SampleLibrary { oneshots, loops })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (class, entries) in self.oneshots.iter() {
            save_dir(&dir.join(class.name()), entries)?;
        }
        for (inst, entries) in &self.loops {
            save_dir(&dir.join(inst.name()), entries)?;
        }
        Ok(())
    }
}

fn load_dir(dir: &Path) -> Result<Vec<LibraryEntry>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let audio = load_wav(&p)?.to_mono();
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            Ok(LibraryEntry { name, audio })
        })
        .collect()
}

fn save_dir(dir: &Path, entries: &[LibraryEntry]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for e in entries {
        save_wav(&e.audio, dir.join(&e.name))?;
    }
    Ok(())
}
