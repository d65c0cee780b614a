use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL: &str = "snls";
pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the output directory (outputs) or as given (inputs).
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: String, data: &[u8]) -> Self {
        Self { path, sha256: sha256_hex(data), bytes: data.len() as u64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 0.25`.
    pub rule: String,
    pub pass: bool,
}

impl Predicate {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, rule: format!("<= {limit}"), pass: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, rule: format!(">= {limit}"), pass: value >= limit }
    }

    pub fn holds(name: &str, pass: bool) -> Self {
        Self { name: name.into(), value: f64::from(u8::from(pass)), rule: "true".into(), pass }
    }
}

/// Record of one run: enough to repeat it and to check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full configuration after overrides, in config-file syntax.
    pub config: String,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_clock_seconds: f64,
    pub steps: u64,
    pub predicates: Vec<Predicate>,
}

impl ExperimentManifest {
    pub fn passed(&self) -> bool {
        self.predicates.iter().all(|p| p.pass)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Single writer for every file a run produces. Each artifact is stamped with
/// the manifest name and recorded with its digest.
pub struct Artifacts {
    dir: PathBuf,
    manifest_name: String,
    outputs: Vec<FileDigest>,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), manifest_name: format!("{command}{MANIFEST_SUFFIX}"), outputs: Vec::new() })
    }

    fn put(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        if self.outputs.iter().any(|o| o.path == name) {
            return Err(CliError::Runtime(format!("artifact `{name}` written twice")));
        }
        let path = self.dir.join(name);
        fs::write(&path, data).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        self.outputs.push(FileDigest::of(name.to_string(), data));
        Ok(())
    }

    /// Binary payloads carry no stamp; their manifest lists them by digest.
    pub fn binary(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        self.put(name, data)
    }

    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# manifest: {}\n{body}", self.manifest_name);
        self.put(name, text.as_bytes())
    }

    /// JSON report `{kind, manifest, data}`.
    pub fn report<T: Serialize>(&mut self, name: &str, kind: &str, data: &T) -> Result<(), CliError> {
        let value = serde_json::json!({ "kind": kind, "manifest": self.manifest_name, "data": data });
        let text = serde_json::to_string_pretty(&value).expect("report serialises") + "\n";
        self.put(name, text.as_bytes())
    }

    pub fn json(&mut self, name: &str, mut value: serde_json::Value) -> Result<(), CliError> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("manifest".into(), self.manifest_name.clone().into());
        }
        let text = serde_json::to_string_pretty(&value).expect("json serialises") + "\n";
        self.put(name, text.as_bytes())
    }

    pub fn svg(&mut self, name: &str, svg: &str) -> Result<(), CliError> {
        let stamp = format!("<!-- manifest: {} -->\n", self.manifest_name);
        let text = match svg.find('\n') {
            Some(i) => format!("{}{stamp}{}", &svg[..=i], &svg[i + 1..]),
            None => format!("{svg}\n{stamp}"),
        };
        self.put(name, text.as_bytes())
    }

    pub fn finish(self, mut manifest: ExperimentManifest) -> Result<ExperimentManifest, CliError> {
        manifest.outputs = self.outputs;
        let path = self.dir.join(&self.manifest_name);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

/// Manifest named by an artifact, resolved next to it. Missing manifests are
/// dangling references.
pub fn resolve_manifest(artifact: &Path, name: &str) -> Result<PathBuf, CliError> {
    if name.is_empty() || name.contains('/') || name.contains('\\') || !name.ends_with(MANIFEST_SUFFIX) {
        return Err(CliError::Input(format!("{}: invalid manifest reference `{name}`", artifact.display())));
    }
    let path = artifact.parent().unwrap_or(Path::new(".")).join(name);
    if !path.is_file() {
        return Err(CliError::Input(format!("{}: dangling manifest reference `{name}`", artifact.display())));
    }
    Ok(path)
}
