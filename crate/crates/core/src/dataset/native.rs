//! Native case container (`*.bwbc`).

use std::path::Path;

use super::container::Container;
use super::fields::{CaseRecord, FieldQuad};
use crate::aero::{FlightCondition, IntegratedCoefficients, FLIGHT_NAMES};
use crate::error::{Error, Result};
use crate::geometry::{CstSection, PlanformParams, SurfaceCloud, Vec3, CST_COEFFS, PARAM_NAMES};

pub const CASE_KIND: &str = "case";
pub const CASE_VERSION: u32 = 1;
pub const CASE_EXTENSION: &str = "bwbc";

fn flatten3(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| p.iter().copied()).collect()
}

fn unflatten3(name: &str, v: &[f64], n: usize) -> Result<Vec<Vec3>> {
    if v.len() != 3 * n {
        return Err(Error::Length(format!(
            "block `{name}` holds {} values, expected {}",
            v.len(),
            3 * n
        )));
    }
    Ok(v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

pub fn encode_case(record: &CaseRecord) -> Container {
    let mut c = Container::new(CASE_KIND, CASE_VERSION);
    c.set("case_id", &record.case_id);
    c.set("geometry_id", &record.geometry_id);
    for (name, v) in PARAM_NAMES.iter().zip(record.params.to_array()) {
        c.set(&format!("params.{name}"), v);
    }
    c.set("params.c1", record.params.c1);
    c.set_f64s("cst.upper", &record.section.upper_coeffs);
    c.set_f64s("cst.lower", &record.section.lower_coeffs);
    c.set("cst.n1", record.section.class_n1);
    c.set("cst.n2", record.section.class_n2);
    if let Some(f) = &record.flight {
        for (name, v) in FLIGHT_NAMES.iter().zip(f.to_array()) {
            c.set(&format!("flight.{name}"), v);
        }
    }
    c.set("a_ref", record.a_ref);
    c.set("c_ref", record.c_ref);
    if let Some(i) = &record.integrated {
        c.set("integrated.cl", i.cl);
        c.set("integrated.cd", i.cd);
        c.set("integrated.cmy", i.cmy);
    }
    c.set("holdout", u8::from(record.holdout));
    if let Some(h) = &record.config_hash {
        c.set("config_hash", h);
    }
    c.set("n_points", record.cloud.len());
    c.set("fields", if record.fields.is_some() { "present" } else { "absent" });

    c.push_block("points", flatten3(&record.cloud.points));
    c.push_block("normals", flatten3(&record.cloud.normals));
    c.push_block("areas", record.cloud.areas.clone());
    if !record.cloud.faces.is_empty() {
        c.push_block(
            "face_sizes",
            record.cloud.faces.iter().map(|f| f.len() as f64).collect(),
        );
        c.push_block(
            "face_indices",
            record.cloud.faces.iter().flatten().map(|&i| i as f64).collect(),
        );
    }
    if let Some(f) = &record.fields {
        for (name, arr) in f.channels() {
            c.push_block(name, arr.to_vec());
        }
    }
    c
}

pub fn decode_case(c: &Container) -> Result<CaseRecord> {
    let mut pv = [0.0; 9];
    for (slot, name) in pv.iter_mut().zip(PARAM_NAMES) {
        *slot = c.require_f64(&format!("params.{name}"))?;
    }
    let mut params = PlanformParams::from_array(pv);
    params.c1 = c.require_f64("params.c1")?;

    let coeffs = |key: &str| -> Result<[f64; CST_COEFFS]> {
        c.require_f64s(key)?
            .try_into()
            .map_err(|_| Error::format(format!("`{key}` needs {CST_COEFFS} values")))
    };
    let section = CstSection {
        upper_coeffs: coeffs("cst.upper")?,
        lower_coeffs: coeffs("cst.lower")?,
        class_n1: c.require_f64("cst.n1")?,
        class_n2: c.require_f64("cst.n2")?,
    };

    let flight = if c.get("flight.altitude").is_some() {
        let mut fv = [0.0; 4];
        for (slot, name) in fv.iter_mut().zip(FLIGHT_NAMES) {
            *slot = c.require_f64(&format!("flight.{name}"))?;
        }
        Some(FlightCondition::from_array(fv))
    } else {
        None
    };

    let a_ref = c.get_f64("a_ref")?.unwrap_or(1.0);
    let c_ref = c.get_f64("c_ref")?.unwrap_or(1.0);
    let integrated = match c.get_f64("integrated.cl")? {
        Some(cl) => Some(IntegratedCoefficients {
            cl,
            cd: c.require_f64("integrated.cd")?,
            cmy: c.require_f64("integrated.cmy")?,
            a_ref,
            c_ref,
        }),
        None => None,
    };

    let n = c.require_usize("n_points")?;
    let points = unflatten3("points", c.require_block("points")?, n)?;
    let normals = unflatten3("normals", c.require_block("normals")?, n)?;
    let areas = c.require_block("areas")?.to_vec();
    if areas.len() != n {
        return Err(Error::Length(format!("block `areas` holds {} values, expected {n}", areas.len())));
    }
    let faces = match (c.block("face_sizes"), c.block("face_indices")) {
        (Some(sizes), Some(indices)) => {
            let mut faces = Vec::with_capacity(sizes.len());
            let mut at = 0usize;
            for &s in sizes {
                let s = s as usize;
                let idx = indices
                    .get(at..at + s)
                    .ok_or_else(|| Error::Length("face_indices shorter than face_sizes implies".into()))?;
                faces.push(idx.iter().map(|&i| i as u32).collect());
                at += s;
            }
            faces
        }
        _ => Vec::new(),
    };

    let fields = match c.require("fields")? {
        "present" => {
            let get = |name: &str| -> Result<Vec<f64>> {
                let v = c.require_block(name)?;
                if v.len() != n {
                    return Err(Error::Length(format!(
                        "block `{name}` holds {} values, expected {n}",
                        v.len()
                    )));
                }
                Ok(v.to_vec())
            };
            Some(FieldQuad {
                cp: get("cp")?,
                cfx: get("cfx")?,
                cfy: get("cfy")?,
                cfz: get("cfz")?,
            })
        }
        "absent" => None,
        other => return Err(Error::format(format!("unknown fields marker `{other}`"))),
    };

    let geometry_id = c.require("geometry_id")?.to_string();
    Ok(CaseRecord {
        case_id: c.require("case_id")?.to_string(),
        geometry_id: geometry_id.clone(),
        params,
        section,
        flight,
        cloud: SurfaceCloud {
            geometry_id,
            points,
            normals,
            areas,
            faces,
        },
        fields,
        integrated,
        a_ref,
        c_ref,
        holdout: c.require("holdout")? == "1",
        config_hash: c.get("config_hash").map(str::to_string),
    })
}

pub fn write_native(record: &CaseRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_case(record).to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_native(path: impl AsRef<Path>) -> Result<CaseRecord> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_case(&Container::from_bytes(&bytes, CASE_KIND, CASE_VERSION)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_surface;

    fn record(with_fields: bool) -> CaseRecord {
        let p = PlanformParams::midpoint();
        let s = CstSection::default();
        let cloud = sample_surface(&p, &s, 6, 4, false).unwrap().with_id("g1");
        let mut r = CaseRecord::shell("g1", p, s, cloud);
        if with_fields {
            let n = r.cloud.len();
            r.case_id = "g1_c00".into();
            r.flight = Some(FlightCondition::from_array([12.5, 0.31, 2.0, -3.25]));
            r.fields = Some(FieldQuad {
                cp: (0..n).map(|i| (i as f64).sin()).collect(),
                cfx: (0..n).map(|i| 1e-3 * i as f64).collect(),
                cfy: vec![0.0; n],
                cfz: (0..n).map(|i| -1e-4 / (1.0 + i as f64)).collect(),
            });
            r.integrated = Some(IntegratedCoefficients {
                cl: 0.1,
                cd: 0.01,
                cmy: -0.02,
                a_ref: 1.0,
                c_ref: 1.0,
            });
            r.holdout = true;
        }
        r
    }

    #[test]
    fn shell_and_full_round_trip() {
        for full in [false, true] {
            let r = record(full);
            let back = decode_case(
                &Container::from_bytes(&encode_case(&r).to_bytes(), CASE_KIND, CASE_VERSION).unwrap(),
            )
            .unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn defaults_for_reference_values() {
        let mut c = encode_case(&record(false));
        c.meta.retain(|(k, _)| k != "a_ref" && k != "c_ref");
        let back = decode_case(&c).unwrap();
        assert_eq!((back.a_ref, back.c_ref), (1.0, 1.0));
    }
}
