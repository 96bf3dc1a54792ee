//! Class-folder datasets: one subdirectory per class, images inside.
//!
//! An optional TOML manifest overrides the class list, the train/eval
//! split and the preprocessing:
//!
//! ```toml
//! root = "textures"          # relative to the manifest file
//!
//! [preprocess]
//! size = 128
//! mean = 127.0
//! std = 40.0
//!
//! [[class]]
//! name = "bark"
//! train = 40
//! eval = 10
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use texlat::image::{load_image, normalize, resize};
use texlat::Image;

use crate::error::{io_error, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocess {
    pub size: usize,
    pub mean: f64,
    pub std: f64,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess {
            size: 128,
            mean: texlat::procedural::NORMALIZE_MEAN,
            std: texlat::procedural::NORMALIZE_STD,
        }
    }
}

impl Preprocess {
    /// Square check, resize to `size` and normalize.
    pub fn apply(&self, img: &Image) -> texlat::Result<Image> {
        if !img.is_square() {
            return Err(texlat::Error::InvalidImage(format!(
                "{}x{} is not square",
                img.width(),
                img.height()
            )));
        }
        let sized = if img.width() == self.size {
            img.clone()
        } else {
            resize(img, self.size, self.size)?
        };
        normalize(&sized, self.mean, self.std)
    }

    pub fn load(&self, path: &Path) -> texlat::Result<Image> {
        self.apply(&load_image(path)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub name: String,
    pub train: Option<usize>,
    pub eval: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub root: Option<PathBuf>,
    #[serde(default)]
    pub preprocess: Preprocess,
    #[serde(rename = "class", default)]
    pub classes: Vec<ClassEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Eval,
    All,
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub class: String,
    pub id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub preprocess: Preprocess,
    classes: Vec<ClassEntry>,
}

impl Dataset {
    /// Opens a dataset from a directory, a manifest, or both (the directory
    /// then overrides the manifest's root).
    pub fn open(dir: Option<&Path>, manifest: Option<&Path>, size: Option<usize>) -> CliResult<Dataset> {
        let mut ds = match manifest {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                let m: Manifest = toml::from_str(&text)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                let root = match (&m.root, dir) {
                    (_, Some(d)) => d.to_path_buf(),
                    (Some(r), None) => base.join(r),
                    (None, None) => base.to_path_buf(),
                };
                let classes = if m.classes.is_empty() { discover(&root)? } else { m.classes };
                Dataset {
                    root,
                    preprocess: m.preprocess,
                    classes,
                }
            }
            None => {
                let root = dir.ok_or_else(|| CliError::Usage("give --data or --manifest".into()))?;
                Dataset {
                    root: root.to_path_buf(),
                    preprocess: Preprocess::default(),
                    classes: discover(root)?,
                }
            }
        };
        if let Some(s) = size {
            ds.preprocess.size = s;
        }
        if ds.classes.is_empty() {
            return Err(CliError::Data(format!("{}: no class directories", ds.root.display())));
        }
        Ok(ds)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    /// Image entries of `split`, classes in listed order, files sorted by name.
    pub fn entries(&self, split: Split) -> CliResult<Vec<Entry>> {
        let mut out = Vec::new();
        for class in &self.classes {
            let dir = self.root.join(&class.name);
            let files = image_files(&dir)?;
            if files.is_empty() {
                return Err(CliError::Data(format!("class {:?} has no images in {}", class.name, dir.display())));
            }
            let n = files.len();
            let (train, eval) = match (class.train, class.eval) {
                (None, None) => (0..n, 0..n),
                (Some(t), e) => (0..t, t..t + e.unwrap_or(n.saturating_sub(t))),
                (None, Some(e)) => (0..n.saturating_sub(e), n.saturating_sub(e)..n),
            };
            if train.end > n || eval.end > n {
                return Err(CliError::Data(format!(
                    "class {:?}: split needs {} images, found {n}",
                    class.name,
                    train.end.max(eval.end)
                )));
            }
            let range = match split {
                Split::Train => train,
                Split::Eval => eval,
                Split::All => 0..n,
            };
            for path in &files[range] {
                let name = path.file_name().unwrap_or_default().to_string_lossy();
                out.push(Entry {
                    class: class.name.clone(),
                    id: format!("{}/{name}", class.name),
                    path: path.clone(),
                });
            }
        }
        Ok(out)
    }
}

fn discover(root: &Path) -> CliResult<Vec<ClassEntry>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| io_error(root, e))? {
        let entry = entry.map_err(|e| io_error(root, e))?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names
        .into_iter()
        .map(|name| ClassEntry {
            name,
            train: None,
            eval: None,
        })
        .collect())
}

fn image_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase());
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "png")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use texlat::image::save_pgm;

    fn make(root: &Path, class: &str, n: usize) {
        let dir = root.join(class);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..n {
            let img = texlat::procedural::sample(i % 4, 16, i as u64).unwrap();
            save_pgm(&normalize(&img, 127.0, 40.0).unwrap(), dir.join(format!("{i:02}.pgm"))).unwrap();
        }
    }

    #[test]
    fn folder_layout() {
        let tmp = tempfile::tempdir().unwrap();
        make(tmp.path(), "b", 2);
        make(tmp.path(), "a", 3);
        let ds = Dataset::open(Some(tmp.path()), None, Some(16)).unwrap();
        assert_eq!(ds.class_names(), ["a", "b"]);
        let e = ds.entries(Split::Train).unwrap();
        assert_eq!(e.len(), 5);
        assert_eq!(e[0].id, "a/00.pgm");
    }

    #[test]
    fn manifest_split() {
        let tmp = tempfile::tempdir().unwrap();
        make(&tmp.path().join("imgs"), "a", 5);
        let path = tmp.path().join("set.toml");
        fs::write(&path, "root = \"imgs\"\n[preprocess]\nsize = 16\n[[class]]\nname = \"a\"\ntrain = 3\neval = 2\n").unwrap();
        let ds = Dataset::open(None, Some(&path), None).unwrap();
        assert_eq!(ds.preprocess.size, 16);
        let train = ds.entries(Split::Train).unwrap();
        let eval = ds.entries(Split::Eval).unwrap();
        assert_eq!(train.len(), 3);
        assert_eq!(eval.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["a/03.pgm", "a/04.pgm"]);

        fs::write(&path, "root = \"imgs\"\n[[class]]\nname = \"a\"\ntrain = 4\neval = 2\n").unwrap();
        let ds = Dataset::open(None, Some(&path), None).unwrap();
        assert!(matches!(ds.entries(Split::Eval), Err(CliError::Data(_))));
    }

    #[test]
    fn empty_class_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        make(tmp.path(), "full", 1);
        fs::create_dir_all(tmp.path().join("hollow")).unwrap();
        let ds = Dataset::open(Some(tmp.path()), None, None).unwrap();
        let err = ds.entries(Split::All).unwrap_err().to_string();
        assert!(err.contains("hollow"), "{err}");
    }
}
