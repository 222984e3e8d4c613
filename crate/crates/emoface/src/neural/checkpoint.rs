//! Versioned text checkpoints.
//!
//! Layout:
//! ```text
//! emoface-checkpoint v1
//! meta <key> <value>                  (sorted by key)
//! tensor <name> <dim0> <dim1> ...
//! <all values, space separated>      (exact round-trip decimal form)
//! ...
//! sha256 <hex digest of every preceding byte>
//! ```
//! Values use Rust's shortest round-trip float formatting, so a write/read
//! cycle reproduces bit-identical f64 data. The trailing digest turns any
//! corruption into a checksum error instead of silently wrong weights.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "emoface-checkpoint v1";

#[derive(Clone, Debug, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    pub fn new() -> Checkpoint {
        Checkpoint::default()
    }

    pub fn add_tensor(&mut self, name: &str, shape: Vec<usize>, values: Vec<f64>) -> Result<()> {
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
            return Err(Error::usage(format!("invalid tensor name {name:?}")));
        }
        if self.tensors.iter().any(|(n, _, _)| n == name) {
            return Err(Error::usage(format!("tensor {name} added twice")));
        }
        let expect: usize = shape.iter().product();
        if values.len() != expect {
            return Err(Error::structural(format!(
                "tensor {name}: shape {shape:?} needs {expect} values, got {}",
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric(format!("tensor {name} contains non-finite values")));
        }
        self.tensors.push((name.to_string(), shape, values));
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.tensors
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, s, v)| (s.as_slice(), v.as_slice()))
    }

    pub fn tensors(&self) -> &[(String, Vec<usize>, Vec<f64>)] {
        &self.tensors
    }

    pub fn require_tensor(&self, name: &str, shape: &[usize]) -> Result<&[f64]> {
        let (s, v) = self
            .tensor(name)
            .ok_or_else(|| Error::data(format!("checkpoint is missing tensor {name}")))?;
        if s != shape {
            return Err(Error::data(format!(
                "checkpoint tensor {name} has shape {s:?}, expected {shape:?}"
            )));
        }
        Ok(v)
    }

    fn body(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        for (name, shape, values) in &self.tensors {
            write!(out, "tensor {name}").unwrap();
            for d in shape {
                write!(out, " {d}").unwrap();
            }
            out.push('\n');
            let mut first = true;
            for v in values {
                if !first {
                    out.push(' ');
                }
                write!(out, "{v}").unwrap();
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn serialize(&self) -> String {
        let body = self.body();
        let digest = Sha256::digest(body.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("{body}sha256 {hex}\n")
    }

    pub fn deserialize(text: &str) -> Result<Checkpoint> {
        let hash_at = text
            .rfind("sha256 ")
            .ok_or_else(|| Error::checksum("checkpoint has no trailing digest"))?;
        let body = &text[..hash_at];
        let hash_line = text[hash_at..].trim_end();
        let stored = hash_line
            .strip_prefix("sha256 ")
            .ok_or_else(|| Error::checksum("malformed digest line"))?;
        let digest = Sha256::digest(body.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        if hex != stored {
            return Err(Error::checksum(format!(
                "checkpoint digest mismatch: stored {stored}, computed {hex}"
            )));
        }

        let mut lines = body.lines();
        if lines.next() != Some(MAGIC) {
            return Err(Error::data(format!("not a checkpoint: missing '{MAGIC}' header")));
        }
        let mut ckpt = Checkpoint::new();
        while let Some(line) = lines.next() {
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest
                    .split_once(' ')
                    .ok_or_else(|| Error::data(format!("malformed meta line: {line}")))?;
                ckpt.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let mut parts = rest.split_whitespace();
                let name = parts
                    .next()
                    .ok_or_else(|| Error::data("tensor line without a name"))?
                    .to_string();
                let shape: Vec<usize> = parts
                    .map(|t| {
                        t.parse()
                            .map_err(|_| Error::data(format!("bad dimension {t} in tensor {name}")))
                    })
                    .collect::<Result<_>>()?;
                let data_line = lines
                    .next()
                    .ok_or_else(|| Error::data(format!("tensor {name} is missing its data line")))?;
                let values: Vec<f64> = data_line
                    .split_ascii_whitespace()
                    .map(|t| {
                        t.parse()
                            .map_err(|_| Error::data(format!("bad value {t} in tensor {name}")))
                    })
                    .collect::<Result<_>>()?;
                ckpt.add_tensor(&name, shape, values)?;
            } else if !line.trim().is_empty() {
                return Err(Error::data(format!("unrecognized checkpoint line: {line}")));
            }
        }
        Ok(ckpt)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Checkpoint::deserialize(&text)
    }
}
