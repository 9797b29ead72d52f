//! Self-describing container: a text manifest followed by little-endian
//! f64 column blocks, each protected by a CRC-32.
//!
//! ```text
//! bwb-container <kind> <version>
//! key = value
//! block <name> <byte_len> <crc32 hex>
//! end
//! <raw block bytes, in manifest order>
//! ```

use crate::error::{Error, Result};

const MAGIC: &str = "bwb-container";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Container {
    pub kind: String,
    pub version: u32,
    pub meta: Vec<(String, String)>,
    pub blocks: Vec<(String, Vec<f64>)>,
}

impl Container {
    pub fn new(kind: &str, version: u32) -> Self {
        Self {
            kind: kind.to_string(),
            version,
            ..Default::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        debug_assert!(!value.contains('\n') && !key.contains(' '));
        self.meta.push((key.to_string(), value));
    }

    pub fn set_f64s(&mut self, key: &str, values: &[f64]) {
        let joined = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        self.set(key, joined);
    }

    pub fn push_block(&mut self, name: &str, data: Vec<f64>) {
        self.blocks.push((name.to_string(), data));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::format(format!("{} manifest is missing `{key}`", self.kind)))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::format(format!("`{key}` is not a number: `{v}`")))
            })
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::format(format!("{} manifest is missing `{key}`", self.kind)))
    }

    pub fn require_f64s(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.require(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::format(format!("`{key}` holds a non-number `{t}`")))
            })
            .collect()
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| Error::format(format!("`{key}` is not a count: `{v}`")))
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_slice())
    }

    pub fn require_block(&self, name: &str) -> Result<&[f64]> {
        self.block(name)
            .ok_or_else(|| Error::format(format!("{} is missing block `{name}`", self.kind)))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = format!("{MAGIC} {} {}\n", self.kind, self.version);
        for (k, v) in &self.meta {
            head.push_str(&format!("{k} = {v}\n"));
        }
        let raw: Vec<Vec<u8>> = self
            .blocks
            .iter()
            .map(|(_, d)| d.iter().flat_map(|v| v.to_le_bytes()).collect())
            .collect();
        for ((name, _), bytes) in self.blocks.iter().zip(&raw) {
            head.push_str(&format!(
                "block {name} {} {:08x}\n",
                bytes.len(),
                crc32fast::hash(bytes)
            ));
        }
        head.push_str("end\n");
        let mut out = head.into_bytes();
        for bytes in raw {
            out.extend_from_slice(&bytes);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], kind: &str, version: u32) -> Result<Self> {
        let mut pos = 0usize;
        let mut line_no = 0usize;
        let mut next_line = |pos: &mut usize| -> Result<(usize, String)> {
            let rest = &bytes[*pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Length("manifest ends before `end` line".into()))?;
            let line = std::str::from_utf8(&rest[..end]).map_err(|_| Error::Parse {
                line: line_no + 1,
                msg: "manifest is not valid UTF-8".into(),
            })?;
            *pos += end + 1;
            line_no += 1;
            Ok((line_no, line.to_string()))
        };

        let (ln, first) = next_line(&mut pos)?;
        let parts: Vec<&str> = first.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != MAGIC {
            return Err(Error::Parse {
                line: ln,
                msg: format!("not a {MAGIC} file"),
            });
        }
        if parts[1] != kind {
            return Err(Error::format(format!(
                "expected a `{kind}` container, found `{}`",
                parts[1]
            )));
        }
        let found: u32 = parts[2].parse().map_err(|_| Error::Parse {
            line: ln,
            msg: format!("bad version `{}`", parts[2]),
        })?;
        if found != version {
            return Err(Error::Version {
                found,
                expected: version,
            });
        }

        let mut c = Container::new(kind, version);
        let mut layout: Vec<(String, usize, u32)> = Vec::new();
        loop {
            let (ln, line) = next_line(&mut pos)?;
            if line == "end" {
                break;
            }
            if let Some(rest) = line.strip_prefix("block ") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let parsed = (f.len() == 3)
                    .then(|| Some((f[1].parse::<usize>().ok()?, u32::from_str_radix(f[2], 16).ok()?)))
                    .flatten();
                let (len, crc) = parsed.ok_or_else(|| Error::Parse {
                    line: ln,
                    msg: format!("malformed block line `{line}`"),
                })?;
                if len % 8 != 0 {
                    return Err(Error::format(format!("block `{}` length {len} is not a multiple of 8", f[0])));
                }
                layout.push((f[0].to_string(), len, crc));
            } else if let Some((k, v)) = line.split_once(" = ") {
                c.meta.push((k.to_string(), v.to_string()));
            } else {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            }
        }

        for (name, len, crc) in layout {
            let available = bytes.len() - pos;
            if available < len {
                return Err(Error::Length(format!(
                    "block `{name}` needs {len} bytes but only {available} remain"
                )));
            }
            let raw = &bytes[pos..pos + len];
            if crc32fast::hash(raw) != crc {
                return Err(Error::Checksum(name));
            }
            let data = raw
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect();
            c.blocks.push((name, data));
            pos += len;
        }
        if pos != bytes.len() {
            return Err(Error::Length(format!(
                "{} trailing bytes after the last block",
                bytes.len() - pos
            )));
        }
        Ok(c)
    }
}
