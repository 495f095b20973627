//! Plain-text parameter snapshots.
//!
//! ```text
//! vqsac-checkpoint 1
//! meta actor_arch (6,7)(8,(1,1))
//! actor.pre.0.weight 7x6 0.12 -0.3 …
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so save then load is exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hybrid::{ParamGroup, Parametric};
use crate::scalar::Real;

pub const MAGIC: &str = "vqsac-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint<T> {
    pub meta: Vec<(String, String)>,
    pub groups: Vec<ParamGroup<T>>,
}

fn check_token(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Checkpoint(format!("{what} `{s}` must be a non-empty word")));
    }
    Ok(())
}

impl<T: Real> Checkpoint<T> {
    pub fn new() -> Self {
        Self {
            meta: Vec::new(),
            groups: Vec::new(),
        }
    }

    /// Sets or replaces a metadata entry. Values may contain spaces but not newlines.
    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        check_token("meta key", key)?;
        let value = value.into();
        if value.contains('\n') || value.trim() != value || value.is_empty() {
            return Err(Error::Checkpoint(format!("meta `{key}` value must be one trimmed non-empty line")));
        }
        match self.meta.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.meta.push((key.to_string(), value)),
        }
        Ok(())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require_meta(&self, key: &str) -> Result<&str> {
        self.meta(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing meta `{key}`")))
    }

    /// Appends every group of `net` under `prefix.`.
    pub fn add_network<N: Parametric<T>>(&mut self, prefix: &str, net: &N) -> Result<()> {
        check_token("prefix", prefix)?;
        for mut g in net.param_groups() {
            g.name = format!("{prefix}.{}", g.name);
            self.groups.push(g);
        }
        Ok(())
    }

    /// Groups stored under `prefix.`, with the prefix removed.
    pub fn network_groups(&self, prefix: &str) -> Vec<ParamGroup<T>> {
        let p = format!("{prefix}.");
        self.groups
            .iter()
            .filter_map(|g| {
                g.name.strip_prefix(&p).map(|rest| ParamGroup {
                    name: rest.to_string(),
                    shape: g.shape.clone(),
                    values: g.values.clone(),
                })
            })
            .collect()
    }

    pub fn load_network<N: Parametric<T>>(&self, prefix: &str, net: &mut N) -> Result<()> {
        let groups = self.network_groups(prefix);
        if groups.is_empty() {
            return Err(Error::Checkpoint(format!("no groups under `{prefix}`")));
        }
        net.load_groups(&groups)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} {VERSION}\n");
        for (k, v) in &self.meta {
            let _ = writeln!(s, "meta {k} {v}");
        }
        for g in &self.groups {
            let shape: Vec<String> = g.shape.iter().map(usize::to_string).collect();
            let _ = write!(s, "{} {}", g.name, shape.join("x"));
            for v in &g.values {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Checkpoint(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, header)) if header.trim() == format!("{MAGIC} {VERSION}") => {}
            Some((_, header)) => return Err(err(1, format!("expected `{MAGIC} {VERSION}`, found `{header}`"))),
            None => return Err(err(1, "empty checkpoint".into())),
        }
        let mut ck = Self::new();
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest
                    .trim()
                    .split_once(' ')
                    .ok_or_else(|| err(no, "meta line needs a key and a value".into()))?;
                ck.set_meta(k, v.trim()).map_err(|e| err(no, e.to_string()))?;
                continue;
            }
            let mut tok = line.split_whitespace();
            let name = tok.next().unwrap_or_default().to_string();
            let shape_tok = tok.next().ok_or_else(|| err(no, format!("group `{name}` lacks a shape")))?;
            let shape = shape_tok
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| err(no, format!("bad shape `{shape_tok}`")))?;
            let values = tok
                .map(|v| T::from_str_radix(v, 10).map_err(|_| err(no, format!("bad number `{v}`"))))
                .collect::<Result<Vec<T>>>()?;
            let expected: usize = shape.iter().product();
            if values.len() != expected {
                return Err(err(no, format!("`{name}` has {} values, shape {shape_tok} needs {expected}", values.len())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(err(no, format!("`{name}` holds a non-finite value")));
            }
            ck.groups.push(ParamGroup { name, shape, values });
        }
        Ok(ck)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
