use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

/// Where a command's primary artifact goes.
#[derive(Debug, Clone)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        out.map_or(Sink::Stdout, Sink::File)
    }

    /// Companion file next to the primary one, e.g. `tail.csv` → `tail.fit.json`.
    pub fn sibling(&self, suffix: &str) -> Sink {
        match self {
            Sink::Stdout => Sink::Stdout,
            Sink::File(p) => {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Sink::File(p.with_file_name(format!("{stem}.{suffix}")))
            }
        }
    }

    pub fn write(&self, bytes: &[u8]) -> Result<()> {
        match self {
            Sink::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
            Sink::File(path) => write_atomic(path, bytes),
        }
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// `{"config": ..., <fields of result>}`. Non-object results go under
/// `"result"`; a result field named `config` becomes `result_config`.
pub fn json_document<C: Serialize, R: Serialize>(config: &C, result: &R) -> Result<Vec<u8>> {
    let mut doc = Map::new();
    doc.insert("config".into(), serde_json::to_value(config)?);
    match serde_json::to_value(result)? {
        Value::Object(mut fields) => {
            if let Some(inner) = fields.remove("config") {
                doc.insert("result_config".into(), inner);
            }
            doc.extend(fields);
        }
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// CSV with a leading `# config=` line.
pub struct Csv {
    buf: String,
}

pub const CONFIG_PREFIX: &str = "# config=";

impl Csv {
    pub fn new<C: Serialize>(config: &C, header: &[&str]) -> Result<Self> {
        let mut buf = String::new();
        buf.push_str(CONFIG_PREFIX);
        buf.push_str(&serde_json::to_string(config)?);
        buf.push('\n');
        buf.push_str(&header.join(","));
        buf.push('\n');
        Ok(Self { buf })
    }

    pub fn row(&mut self, fields: &[Cell]) {
        let cells: Vec<String> = fields.iter().map(Cell::render).collect();
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            // shortest representation that reads back to the same bits
            Cell::F(x) => format!("{x:?}"),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0768837] {
            let s = Cell::F(x).render();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn sibling_replaces_extension() {
        let s = Sink::File(PathBuf::from("/tmp/x/tail.csv")).sibling("fit.json");
        match s {
            Sink::File(p) => assert_eq!(p, PathBuf::from("/tmp/x/tail.fit.json")),
            Sink::Stdout => panic!(),
        }
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
    }
}
