//! Flat `key=value` run manifests written next to every command's outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn escape(v: &str) -> String {
    v.replace('\\', "\\\\").replace('\n', "\\n")
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Ordered key/value record of a command invocation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], cwd: &Path) -> Self {
        let mut m = Self::default();
        m.set("tool", concat!("scn ", env!("CARGO_PKG_VERSION")));
        m.set("command", command);
        m.set("cwd", cwd.display().to_string());
        for (i, a) in argv.iter().enumerate() {
            m.set(&format!("argv.{i}"), a);
        }
        m
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn argv(&self) -> Vec<String> {
        (0..)
            .map_while(|i| self.get(&format!("argv.{i}")).map(str::to_string))
            .collect()
    }

    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        let i = self.count_prefix("input.") / 2;
        self.set(&format!("input.{i}.path"), path.display().to_string());
        self.set(&format!("input.{i}.sha256"), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> std::io::Result<()> {
        let i = self.count_prefix("output.") / 2;
        self.set(&format!("output.{i}.path"), path.display().to_string());
        self.set(&format!("output.{i}.sha256"), sha256_file(path)?);
        Ok(())
    }

    /// (path, sha256) of every recorded output.
    pub fn outputs(&self) -> Vec<(PathBuf, String)> {
        (0..)
            .map_while(|i| {
                let p = self.get(&format!("output.{i}.path"))?;
                let h = self.get(&format!("output.{i}.sha256"))?;
                Some((PathBuf::from(p), h.to_string()))
            })
            .collect()
    }

    fn count_prefix(&self, prefix: &str) -> usize {
        self.entries
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={}", escape(v));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut m = Self::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("manifest line {} has no '='", n + 1))?;
            m.entries.push((k.to_string(), unescape(v)));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.render())
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }
}
