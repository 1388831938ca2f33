//! Strict `key = value` text files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys
//! are `[A-Za-z0-9_-]+` and may appear once. Numeric lists are separated by
//! commas or whitespace, and `v*count` repeats `v`.
//!
//! Gaussian spec files use the keys `dim`, `mean_a`, `mean_b` and `std`:
//!
//! ```text
//! dim = 2
//! mean_a = -1, -10
//! mean_b = 1, 10
//! std = 0.6, 10
//! ```

use crate::error::{Error, Result};
use crate::gaussian::GaussianTaskSpec;

/// Upper bound on the length of any parsed list.
pub const MAX_LIST_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KvConfig {
    entries: Vec<Entry>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config {
                    line,
                    message: format!("invalid key `{key}`"),
                });
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}` (first on line {})", prev.line),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Fails on the first key outside `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(Error::Config {
                line: e.line,
                message: format!("unknown key `{}`", e.key),
            }),
            None => Ok(()),
        }
    }

    fn required(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| Error::Config {
            line: 0,
            message: format!("missing key `{key}`"),
        })
    }
}

impl Entry {
    pub fn parse_usize(&self) -> Result<usize> {
        self.value.parse().map_err(|_| Error::Config {
            line: self.line,
            message: format!("`{}` is not a non-negative integer", self.value),
        })
    }

    pub fn parse_f64(&self) -> Result<f64> {
        parse_number(&self.value, self.line)
    }

    pub fn parse_list(&self) -> Result<Vec<f64>> {
        parse_list(&self.value, self.line)
    }
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Config {
            line,
            message: format!("`{s}` is not a finite number"),
        }),
    }
}

/// Numbers separated by commas or whitespace, with `v*count` repeats.
pub fn parse_list(value: &str, line: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        let (v, count) = match item.split_once('*') {
            Some((v, c)) => {
                let count: usize = c.parse().map_err(|_| Error::Config {
                    line,
                    message: format!("bad repeat count in `{item}`"),
                })?;
                (parse_number(v, line)?, count)
            }
            None => (parse_number(item, line)?, 1),
        };
        if count > MAX_LIST_LEN - out.len().min(MAX_LIST_LEN) {
            return Err(Error::Config {
                line,
                message: format!("list longer than {MAX_LIST_LEN} values"),
            });
        }
        out.extend(std::iter::repeat_n(v, count));
    }
    if out.is_empty() {
        return Err(Error::Config {
            line,
            message: "empty list".into(),
        });
    }
    Ok(out)
}

pub const SPEC_KEYS: &[&str] = &["dim", "mean_a", "mean_b", "std"];

/// Parses a Gaussian spec file.
pub fn parse_gaussian_spec(text: &str) -> Result<GaussianTaskSpec> {
    let kv = KvConfig::parse(text)?;
    kv.reject_unknown(SPEC_KEYS)?;
    let dim_entry = kv.required("dim")?;
    let dim = dim_entry.parse_usize()?;
    if dim == 0 {
        return Err(Error::Config {
            line: dim_entry.line,
            message: "dim must be at least 1".into(),
        });
    }
    let mut lists = Vec::with_capacity(3);
    for key in ["mean_a", "mean_b", "std"] {
        let e = kv.required(key)?;
        let v = e.parse_list()?;
        if v.len() != dim {
            return Err(Error::Config {
                line: e.line,
                message: format!("`{key}` has {} values, dim is {dim}", v.len()),
            });
        }
        lists.push(v);
    }
    let std = lists.pop().expect("three lists");
    let mean_b = lists.pop().expect("three lists");
    let mean_a = lists.pop().expect("three lists");
    GaussianTaskSpec::new(mean_a, mean_b, std).map_err(|e| Error::Config {
        line: kv.required("std").map(|e| e.line).unwrap_or(0),
        message: e.to_string(),
    })
}

/// Renders a spec in the format [`parse_gaussian_spec`] reads.
pub fn format_gaussian_spec(spec: &GaussianTaskSpec) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    format!(
        "dim = {}\nmean_a = {}\nmean_b = {}\nstd = {}\n",
        spec.dim(),
        join(spec.mean_a()),
        join(spec.mean_b()),
        join(spec.std())
    )
}
