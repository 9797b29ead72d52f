//! Key-value geometry configuration files.
//!
//! ```text
//! # comment
//! c2_over_c1 = 0.70
//! ...
//! s3 = 32
//! c1 = 1.0                      # optional
//! cst_upper = 0.15 0.15 0.15 0.15 0.15   # optional
//! cst_lower = 0.10 0.10 0.10 0.10 0.10   # optional
//! class_n1 = 0.5                # optional
//! class_n2 = 1.0                # optional
//! ```

use std::collections::BTreeMap;

use super::cst::{CstSection, CST_COEFFS};
use super::planform::{PlanformParams, PARAM_NAMES};
use crate::error::{Error, Result};

pub fn parse_geometry_config(text: &str) -> Result<(PlanformParams, CstSection)> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        entries.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }

    let scalar = |key: &str| -> Result<Option<f64>> {
        match entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                line: *line,
                msg: format!("`{key}` is not a number: `{v}`"),
            }),
        }
    };
    let coeffs = |key: &str| -> Result<Option<[f64; CST_COEFFS]>> {
        let Some((line, v)) = entries.get(key) else {
            return Ok(None);
        };
        let vals: Vec<f64> = v
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: *line,
                msg: format!("`{key}` must be numbers"),
            })?;
        let arr: [f64; CST_COEFFS] = vals.try_into().map_err(|v: Vec<f64>| Error::Parse {
            line: *line,
            msg: format!("`{key}` needs {CST_COEFFS} coefficients, got {}", v.len()),
        })?;
        Ok(Some(arr))
    };

    let mut v = [0.0; 9];
    for (slot, name) in v.iter_mut().zip(PARAM_NAMES) {
        *slot = scalar(name)?
            .ok_or_else(|| Error::format(format!("geometry config is missing `{name}`")))?;
    }
    let mut params = PlanformParams::from_array(v);
    if let Some(c1) = scalar("c1")? {
        params.c1 = c1;
    }

    let mut section = CstSection::default();
    if let Some(u) = coeffs("cst_upper")? {
        section.upper_coeffs = u;
    }
    if let Some(l) = coeffs("cst_lower")? {
        section.lower_coeffs = l;
    }
    if let Some(n1) = scalar("class_n1")? {
        section.class_n1 = n1;
    }
    if let Some(n2) = scalar("class_n2")? {
        section.class_n2 = n2;
    }
    Ok((params, section))
}

pub fn write_geometry_config(params: &PlanformParams, section: &CstSection) -> String {
    let mut out = String::new();
    for (name, v) in PARAM_NAMES.iter().zip(params.to_array()) {
        out.push_str(&format!("{name} = {v}\n"));
    }
    out.push_str(&format!("c1 = {}\n", params.c1));
    let join = |c: &[f64]| c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    out.push_str(&format!("cst_upper = {}\n", join(&section.upper_coeffs)));
    out.push_str(&format!("cst_lower = {}\n", join(&section.lower_coeffs)));
    out.push_str(&format!("class_n1 = {}\n", section.class_n1));
    out.push_str(&format!("class_n2 = {}\n", section.class_n2));
    out
}
