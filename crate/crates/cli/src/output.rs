use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block carried by every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub config: serde_json::Value,
}

impl Meta {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        let config = serde_json::to_value(config).expect("config serializes");
        let hash = Sha256::digest(config.to_string().as_bytes());
        let config_sha256 = hash.iter().map(|b| format!("{b:02x}")).collect();
        Meta { tool: "tbr", version: VERSION, command, config_sha256, config }
    }

    pub fn summary(&self) -> String {
        format!("{} {} {} config-sha256={}", self.tool, self.version, self.command, self.config_sha256)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("meta serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// `#` comment lines ahead of the header row.
    Csv,
    Markdown,
    Svg,
    /// Leading `#` comments are valid TOML.
    Toml,
    /// The caller embeds the meta itself.
    Raw,
}

/// Output directory whose files are written whole or not at all.
pub struct Outputs {
    pub dir: PathBuf,
    pub meta: Meta,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path, meta: Meta) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, kind: Kind, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        let header = match kind {
            Kind::Csv | Kind::Toml => format!("# {}\n# config {}\n", self.meta.summary(), self.meta.config),
            Kind::Markdown | Kind::Svg => format!("<!-- {} -->\n<!-- config {} -->\n", self.meta.summary(), self.meta.config),
            Kind::Raw => String::new(),
        };
        buf.extend_from_slice(header.as_bytes());
        let path = self.dir.join(name);
        body(&mut buf).map_err(|e| CliError::io(&path, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        tmp.write_all(&buf).map_err(|e| CliError::io(&path, e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(&path, e))?;
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        self.written.push(path);
        Ok(())
    }

    /// `{"meta": .., "data": ..}`, pretty-printed.
    pub fn write_json(&mut self, name: &str, data: &impl Serialize) -> Result<(), CliError> {
        let doc = serde_json::json!({ "meta": &self.meta, "data": data });
        self.write(name, Kind::Raw, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc)?;
            w.write_all(b"\n")
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Reads the `data` member of a document written by [`Outputs::write_json`].
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::usage("schema", e).in_file(path))?;
    let data = doc.get_mut("data").map(serde_json::Value::take).unwrap_or(doc);
    serde_json::from_value(data).map_err(|e| CliError::usage("schema", e).in_file(path))
}
