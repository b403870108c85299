use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::par;

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "split ratios must be non-negative: train={}, val={}, test={}",
                self.train, self.val, self.test
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split ratios must sum to 1: train={} + val={} + test={} = {sum}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }

    /// Per-class counts `(train, val, test)`: floor, floor, remainder.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let n_train = ((self.train * n as f64).floor() as usize).min(n);
        let n_val = ((self.val * n as f64).floor() as usize).min(n - n_train);
        (n_train, n_val, n - n_train - n_val)
    }
}

/// File assignment of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub name: String,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl ClassSplit {
    pub fn part(&self, split: &str) -> &[String] {
        match split {
            "train" => &self.train,
            "val" => &self.val,
            "test" => &self.test,
            _ => &[],
        }
    }
}

/// Deterministic assignment of every file of a class-per-directory dataset
/// to train, validation and test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub source: PathBuf,
    pub classes: Vec<ClassSplit>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

/// Per split, per class file counts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitSummary {
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
}

impl SplitSummary {
    pub fn get(&self, split: &str, class: &str) -> usize {
        self.counts
            .get(split)
            .and_then(|m| m.get(class))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().flat_map(|m| m.values()).sum()
    }

    /// Fixed-width table, one row per class, one column per split.
    pub fn table(&self) -> String {
        let splits: Vec<&String> = self.counts.keys().collect();
        let mut classes: Vec<&String> = self.counts.values().flat_map(|m| m.keys()).collect();
        classes.sort();
        classes.dedup();
        let width = classes.iter().map(|c| c.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}", "class");
        for s in &splits {
            out.push_str(&format!(" {:>8}", s));
        }
        out.push('\n');
        for c in classes {
            out.push_str(&format!("{:<width$}", c));
            for s in &splits {
                out.push_str(&format!(" {:>8}", self.get(s, c)));
            }
            out.push('\n');
        }
        out
    }
}

/// Class directories of `data_dir` with their sorted file names. Top-level
/// files are ignored; a directory nested inside a class is an error.
pub(crate) fn scan_classes(data_dir: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let entries = fs::read_dir(data_dir).map_err(|e| Error::io(data_dir, e))?;
    let mut classes = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(data_dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = utf8_name(&path)?;
        let mut files = Vec::new();
        for f in fs::read_dir(&path).map_err(|e| Error::io(&path, e))? {
            let f = f.map_err(|e| Error::io(&path, e))?;
            let fp = f.path();
            if fp.is_dir() {
                return Err(Error::invalid(format!(
                    "nested directory {} inside class '{name}': a flat class layout is required",
                    fp.display()
                )));
            }
            files.push(utf8_name(&fp)?);
        }
        if files.is_empty() {
            return Err(Error::invalid(format!("class directory '{name}' is empty")));
        }
        files.sort();
        classes.push((name, files));
    }
    if classes.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no class subdirectories",
            data_dir.display()
        )));
    }
    classes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(classes)
}

fn utf8_name(path: &Path) -> Result<String> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::invalid(format!("{} is not valid UTF-8", path.display())))
}

/// Per class: sort file names, shuffle them with a seeded Fisher–Yates pass,
/// then take `floor(train·n)` files for train, `floor(val·n)` for val and
/// the rest for test. Classes are processed in name order, all drawing
/// from one stream seeded with `seed`.
pub fn plan_split(data_dir: &Path, ratios: SplitRatios, seed: u64) -> Result<SplitPlan> {
    ratios.validate()?;
    let classes = scan_classes(data_dir)?;
    let mut rng = Rng::new(seed);
    let classes = classes
        .into_iter()
        .map(|(name, mut files)| {
            rng.shuffle(&mut files);
            let (n_train, n_val, _) = ratios.counts(files.len());
            let test = files.split_off(n_train + n_val);
            let val = files.split_off(n_train);
            ClassSplit {
                name,
                train: files,
                val,
                test,
            }
        })
        .collect();
    Ok(SplitPlan {
        source: data_dir.to_path_buf(),
        classes,
        seed,
        ratios,
    })
}

/// Errors unless `dir` is absent or an empty directory.
pub(crate) fn ensure_empty_destination(dir: &Path) -> Result<()> {
    if !dir.exists() {
        return Ok(());
    }
    let mut entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    if entries.next().is_some() {
        return Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                "destination is not empty",
            ),
        ));
    }
    Ok(())
}

pub(crate) fn copy_all(jobs: &[(PathBuf, PathBuf)]) -> Result<()> {
    par::try_for_each(jobs, |(from, to)| {
        fs::copy(from, to)
            .map(|_| ())
            .map_err(|e| Error::io(from, e))
    })
}

/// Copies the planned files into `dest/{train,val,test}/<class>/`. All six
/// kinds of directories are created even when a split is empty.
pub fn execute_split(plan: &SplitPlan, dest: &Path) -> Result<SplitSummary> {
    ensure_empty_destination(dest)?;
    let mut summary = SplitSummary::default();
    let mut jobs = Vec::new();
    for split in SPLIT_NAMES {
        for class in &plan.classes {
            let dir = dest.join(split).join(&class.name);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let files = class.part(split);
            summary
                .counts
                .entry(split.to_string())
                .or_default()
                .insert(class.name.clone(), files.len());
            for f in files {
                jobs.push((plan.source.join(&class.name).join(f), dir.join(f)));
            }
        }
    }
    copy_all(&jobs)?;
    Ok(summary)
}
