use crate::aero::{FlightCondition, IntegratedCoefficients};
use crate::error::{Error, Result};
use crate::geometry::{CstSection, PlanformParams, SurfaceCloud};

/// Pointwise pressure and skin-friction coefficients aligned with a cloud.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldQuad {
    pub cp: Vec<f64>,
    pub cfx: Vec<f64>,
    pub cfy: Vec<f64>,
    pub cfz: Vec<f64>,
}

impl FieldQuad {
    pub fn zeros(n: usize) -> Self {
        Self {
            cp: vec![0.0; n],
            cfx: vec![0.0; n],
            cfy: vec![0.0; n],
            cfz: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.cp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cp.is_empty()
    }

    pub fn check_lengths(&self) -> Result<()> {
        let n = self.cp.len();
        if self.cfx.len() != n || self.cfy.len() != n || self.cfz.len() != n {
            return Err(Error::shape(format!(
                "field arrays differ in length: cp {n}, cfx {}, cfy {}, cfz {}",
                self.cfx.len(),
                self.cfy.len(),
                self.cfz.len()
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, arr) in self.channels() {
            if let Some(i) = arr.iter().position(|v| !v.is_finite()) {
                return Err(Error::domain(format!("{name}[{i}] is not finite")));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("cp", &self.cp),
            ("cfx", &self.cfx),
            ("cfy", &self.cfy),
            ("cfz", &self.cfz),
        ]
    }

    /// `a * self + b * other`, elementwise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect();
        Self {
            cp: mix(&self.cp, &other.cp),
            cfx: mix(&self.cfx, &other.cfx),
            cfy: mix(&self.cfy, &other.cfy),
            cfz: mix(&self.cfz, &other.cfz),
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = |x: &[f64]| perm.iter().map(|&i| x[i]).collect();
        Self {
            cp: p(&self.cp),
            cfx: p(&self.cfx),
            cfy: p(&self.cfy),
            cfz: p(&self.cfz),
        }
    }
}

/// One geometry at one flight condition. Geometry-only shells carry no
/// flight condition and no fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case_id: String,
    pub geometry_id: String,
    pub params: PlanformParams,
    pub section: CstSection,
    pub flight: Option<FlightCondition>,
    pub cloud: SurfaceCloud,
    pub fields: Option<FieldQuad>,
    pub integrated: Option<IntegratedCoefficients>,
    /// Reference area and chord used for integrated values.
    pub a_ref: f64,
    pub c_ref: f64,
    /// Tagged as a held-out test geometry.
    pub holdout: bool,
    /// Hash of the run configuration that produced the file.
    pub config_hash: Option<String>,
}

impl CaseRecord {
    pub fn shell(geometry_id: &str, params: PlanformParams, section: CstSection, cloud: SurfaceCloud) -> Self {
        Self {
            case_id: geometry_id.to_string(),
            geometry_id: geometry_id.to_string(),
            params,
            section,
            flight: None,
            cloud,
            fields: None,
            integrated: None,
            a_ref: 1.0,
            c_ref: 1.0,
            holdout: false,
            config_hash: None,
        }
    }

    pub fn require_fields(&self) -> Result<&FieldQuad> {
        self.fields
            .as_ref()
            .ok_or_else(|| Error::format(format!("case {} has no field data", self.case_id)))
    }

    pub fn require_flight(&self) -> Result<&FlightCondition> {
        self.flight
            .as_ref()
            .ok_or_else(|| Error::format(format!("case {} has no flight condition", self.case_id)))
    }
}
