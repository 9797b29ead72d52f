//! Dataset manifest: one CSV row per case.
//!
//! Columns: `case_id, geometry_id`, the nine planform parameters, the four
//! flight values, `cl, cd, cmy` (empty when not integrated) and `holdout`.
//! A leading `# config_hash=<hex>` comment records the producing run.

use std::path::Path;

use crate::aero::{FlightCondition, FLIGHT_NAMES};
use crate::error::{Error, Result};
use crate::geometry::{PlanformParams, PARAM_NAMES};

use super::fields::CaseRecord;
use super::split::SplitEntry;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub case_id: String,
    pub geometry_id: String,
    pub params: PlanformParams,
    pub flight: Option<FlightCondition>,
    /// Integrated `(cl, cd, cmy)`.
    pub integrated: Option<[f64; 3]>,
    pub holdout: bool,
}

impl ManifestEntry {
    pub fn from_record(r: &CaseRecord) -> Self {
        Self {
            case_id: r.case_id.clone(),
            geometry_id: r.geometry_id.clone(),
            params: r.params,
            flight: r.flight,
            integrated: r.integrated.map(|i| [i.cl, i.cd, i.cmy]),
            holdout: r.holdout,
        }
    }

    pub fn split_entry(&self) -> SplitEntry {
        SplitEntry {
            case_id: self.case_id.clone(),
            geometry_id: self.geometry_id.clone(),
            holdout: self.holdout,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub config_hash: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

fn header() -> Vec<&'static str> {
    let mut h = vec!["case_id", "geometry_id"];
    h.extend(PARAM_NAMES);
    h.extend(FLIGHT_NAMES);
    h.extend(["cl", "cd", "cmy", "holdout"]);
    h
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

pub fn format_manifest(m: &Manifest) -> Result<String> {
    let mut out = Vec::new();
    if let Some(h) = &m.config_hash {
        out.extend_from_slice(format!("# config_hash={h}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header()).map_err(csv_err)?;
    for e in &m.entries {
        let mut row = vec![e.case_id.clone(), e.geometry_id.clone()];
        row.extend(e.params.to_array().iter().map(f64::to_string));
        match &e.flight {
            Some(f) => row.extend(f.to_array().iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        match &e.integrated {
            Some(v) => row.extend(v.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        row.push(u8::from(e.holdout).to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::format(e.to_string()))?;
    drop(w);
    String::from_utf8(out).map_err(|e| Error::format(e.to_string()))
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let config_hash = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# config_hash="))
        .map(|h| h.trim().to_string());
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let head = r.headers().map_err(csv_err)?.clone();
    let want = header();
    let col = |name: &str| -> Result<usize> {
        head.iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(format!("manifest is missing column `{name}`")))
    };
    let cols: Vec<usize> = want.iter().map(|n| col(n)).collect::<Result<_>>()?;

    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| rec.get(cols[k]).unwrap_or("");
        let num = |k: usize| -> Result<Option<f64>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| Error::Parse {
                line,
                msg: format!("column `{}`: `{s}` is not a number", want[k]),
            })
        };
        let req = |k: usize| -> Result<f64> {
            num(k)?.ok_or_else(|| Error::Parse {
                line,
                msg: format!("column `{}` is empty", want[k]),
            })
        };
        let mut p = [0.0; 9];
        for (j, v) in p.iter_mut().enumerate() {
            *v = req(2 + j)?;
        }
        let fl: Vec<Option<f64>> = (11..15).map(num).collect::<Result<_>>()?;
        let flight = if fl.iter().all(Option::is_some) {
            Some(FlightCondition::from_array([
                fl[0].unwrap(),
                fl[1].unwrap(),
                fl[2].unwrap(),
                fl[3].unwrap(),
            ]))
        } else {
            None
        };
        let ig: Vec<Option<f64>> = (15..18).map(num).collect::<Result<_>>()?;
        let integrated = match (ig[0], ig[1], ig[2]) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        let holdout = match field(18) {
            "" | "0" | "false" => false,
            "1" | "true" => true,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("holdout must be 0 or 1, got `{other}`"),
                })
            }
        };
        entries.push(ManifestEntry {
            case_id: field(0).to_string(),
            geometry_id: field(1).to_string(),
            params: PlanformParams::from_array(p),
            flight,
            integrated,
            holdout,
        });
    }
    Ok(Manifest {
        config_hash,
        entries,
    })
}

pub fn write_manifest(path: impl AsRef<Path>, m: &Manifest) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_manifest(m)?).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(i: usize, flight: bool) -> ManifestEntry {
        ManifestEntry {
            case_id: format!("g{i}_c0"),
            geometry_id: format!("g{i}"),
            params: PlanformParams::midpoint(),
            flight: flight.then_some(FlightCondition {
                altitude: 12.5,
                mach: 0.31,
                reynolds_length: 2.0 / 3.0,
                alpha: -4.25,
            }),
            integrated: flight.then_some([0.1, 1e-3 / 7.0, -0.02]),
            holdout: i % 2 == 1,
        }
    }

    #[test]
    fn round_trip() {
        let m = Manifest {
            config_hash: Some("abc123".into()),
            entries: vec![entry(0, true), entry(1, false)],
        };
        let text = format_manifest(&m).unwrap();
        assert!(text.starts_with("# config_hash=abc123\n"));
        assert_eq!(parse_manifest(&text).unwrap(), m);
    }

    #[test]
    fn bad_number_reports_line() {
        let m = Manifest {
            config_hash: None,
            entries: vec![entry(0, true)],
        };
        let text = format_manifest(&m).unwrap().replace("-4.25", "minus");
        assert!(matches!(parse_manifest(&text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_column() {
        assert!(matches!(parse_manifest("case_id,geometry_id\n"), Err(Error::Format(_))));
    }
}
