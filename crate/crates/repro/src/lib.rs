//! Helpers for the reproduction checks: locating reference datasets and
//! collecting per-criterion pass/fail lines.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use linkpred_core::datasets::{Dataset, Manifest};

/// Overrides the directory holding the edge lists named in the manifest.
pub const DATA_DIR_ENV: &str = "LINKPRED_DATA_DIR";

pub fn workspace_data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// The shipped manifest, with paths resolved against `$LINKPRED_DATA_DIR`
/// when it is set.
pub fn manifest() -> Manifest {
    let path = workspace_data_dir().join("manifest.toml");
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let base = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(workspace_data_dir);
    Manifest::parse(&text, base).expect("shipped manifest parses")
}

/// Loads a dataset by name, or explains why it is unavailable.
pub fn dataset(manifest: &Manifest, name: &str) -> Result<Dataset, String> {
    let d = manifest
        .get(name)
        .ok_or_else(|| format!("`{name}` is not listed in the manifest"))?;
    match manifest.load_dataset(d) {
        Ok(Some(ds)) => Ok(ds),
        Ok(None) => Err(format!(
            "{name} edge list not found at {} (set {DATA_DIR_ENV} or add the file)",
            manifest.resolve(d).display()
        )),
        Err(e) => Err(format!("{name}: {e}")),
    }
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[derive(Debug, Default)]
pub struct Suite {
    parts: Vec<(u8, bool)>,
}

impl Suite {
    pub fn check(&mut self, criterion: u8, label: &str, pass: bool, detail: impl AsRef<str>) -> bool {
        let status = if pass { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {criterion}: {label}: {}", detail.as_ref());
        self.parts.push((criterion, pass));
        pass
    }

    pub fn unavailable(&mut self, criterion: u8, label: &str, reason: &str) {
        println!("[FAIL] criterion {criterion}: {label}: unavailable: {reason}");
        self.parts.push((criterion, false));
    }

    /// Prints one line per criterion and returns whether all passed.
    pub fn summary(&self) -> bool {
        let mut criteria: Vec<u8> = self.parts.iter().map(|p| p.0).collect();
        criteria.dedup();
        println!();
        let mut all = true;
        for c in criteria {
            let parts: Vec<bool> = self.parts.iter().filter(|p| p.0 == c).map(|p| p.1).collect();
            let passed = parts.iter().filter(|&&p| p).count();
            let ok = passed == parts.len();
            all &= ok;
            println!(
                "ACCEPTANCE criterion {c}: {} ({passed}/{} checks passed)",
                if ok { "PASS" } else { "FAIL" },
                parts.len()
            );
        }
        all
    }
}
