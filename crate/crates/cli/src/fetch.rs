use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// The manifest shipped with the tool.
pub const DEFAULT_MANIFEST: &str = include_str!("../mnist-manifest.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    /// Uncompressed file name in the destination directory.
    pub name: String,
    /// Gzip archive name relative to the base URL.
    pub archive: String,
    /// SHA-256 of the uncompressed file, lowercase hex.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub base_url: String,
    pub files: Vec<ManifestFile>,
}

impl Manifest {
    pub fn builtin() -> Manifest {
        serde_json::from_str(DEFAULT_MANIFEST).expect("bundled manifest parses")
    }

    pub fn load(path: &Path) -> CliResult<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        crate::config::parse_json(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileStatus {
    AlreadyValid,
    Downloaded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    pub name: String,
    pub status: FileStatus,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn quarantine_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".bad");
    path.with_file_name(name)
}

/// Archive bytes from `base` (an http(s) URL, a `file://` URL or a plain
/// directory path).
fn retrieve(base: &str, archive: &str) -> CliResult<Vec<u8>> {
    if base.starts_with("http://") || base.starts_with("https://") {
        let url = format!("{}/{}", base.trim_end_matches('/'), archive);
        let mut response = ureq::get(&url)
            .call()
            .map_err(|e| CliError::runtime("download", format!("{url}: {e}")))?;
        let mut bytes = Vec::new();
        response
            .body_mut()
            .as_reader()
            .read_to_end(&mut bytes)
            .map_err(|e| CliError::runtime("download", format!("{url}: {e}")))?;
        Ok(bytes)
    } else {
        let dir = base.strip_prefix("file://").unwrap_or(base);
        let path = Path::new(dir).join(archive);
        std::fs::read(&path).map_err(|e| CliError::runtime("download", format!("{}: {e}", path.display())))
    }
}

/// Makes `dest` hold every manifest file with a matching checksum.
/// Files that already verify are left alone without touching the network.
/// A present file with a wrong checksum, or a download that fails to
/// decompress or verify, is renamed/written with a `.bad` suffix.
pub fn fetch_mnist(dest: &Path, manifest: &Manifest, source_url: Option<&str>) -> CliResult<Vec<FetchOutcome>> {
    std::fs::create_dir_all(dest).map_err(|e| CliError::runtime("fetch", format!("{}: {e}", dest.display())))?;
    let base = source_url.unwrap_or(&manifest.base_url);
    let mut outcomes = Vec::new();
    for file in &manifest.files {
        let path = dest.join(&file.name);
        if path.exists() {
            let bytes = std::fs::read(&path).map_err(|e| CliError::runtime("verify", format!("{}: {e}", path.display())))?;
            if sha256_hex(&bytes) == file.sha256 {
                outcomes.push(FetchOutcome {
                    name: file.name.clone(),
                    status: FileStatus::AlreadyValid,
                });
                continue;
            }
            std::fs::rename(&path, quarantine_path(&path)).map_err(|e| CliError::runtime("verify", e))?;
        }

        let archive = retrieve(base, &file.archive)?;
        let mut data = Vec::new();
        if let Err(e) = GzDecoder::new(archive.as_slice()).read_to_end(&mut data) {
            let bad = quarantine_path(&dest.join(&file.archive));
            let _ = std::fs::write(&bad, &archive);
            return Err(CliError::runtime(
                "decompress",
                format!("{}: {e}; archive kept as {}", file.archive, bad.display()),
            ));
        }
        let digest = sha256_hex(&data);
        if digest != file.sha256 {
            let bad = quarantine_path(&path);
            std::fs::write(&bad, &data).map_err(|e| CliError::runtime("verify", e))?;
            return Err(CliError::runtime(
                "verify",
                format!(
                    "{}: checksum {digest} does not match {}; quarantined as {}",
                    file.name,
                    file.sha256,
                    bad.display()
                ),
            ));
        }
        let partial = dest.join(format!("{}.partial", file.name));
        std::fs::write(&partial, &data)
            .and_then(|_| std::fs::rename(&partial, &path))
            .map_err(|e| CliError::runtime("fetch", format!("{}: {e}", path.display())))?;
        outcomes.push(FetchOutcome {
            name: file.name.clone(),
            status: FileStatus::Downloaded,
        });
    }
    Ok(outcomes)
}
