use crate::error::{Error, Result};

/// Names of the nine planform design variables, in canonical order.
pub const PARAM_NAMES: [&str; 9] = [
    "c2_over_c1",
    "c3_over_c1",
    "c4_over_c1",
    "b1_over_c1",
    "b2_over_c1",
    "b3_over_c1",
    "s1",
    "s2",
    "s3",
];

/// Sampling bounds of the design variables (ratios, then sweeps in degrees).
pub const PARAM_BOUNDS: [(f64, f64); 9] = [
    (0.55, 0.85),
    (0.18, 0.28),
    (0.06, 0.09),
    (0.10, 0.20),
    (0.05, 0.20),
    (0.20, 0.70),
    (40.0, 60.0),
    (40.0, 60.0),
    (24.0, 40.0),
];

/// Nine normalized design parameters of a blended-wing-body planform.
///
/// Chords and semispan segments are ratios to the centerline chord `c1`;
/// sweeps are leading-edge angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanformParams {
    pub c2_over_c1: f64,
    pub c3_over_c1: f64,
    pub c4_over_c1: f64,
    pub b1_over_c1: f64,
    pub b2_over_c1: f64,
    pub b3_over_c1: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub c1: f64,
}

impl PlanformParams {
    /// Midpoint of every sampling range, with unit centerline chord.
    pub fn midpoint() -> Self {
        let mut v = [0.0; 9];
        for (x, (lo, hi)) in v.iter_mut().zip(PARAM_BOUNDS) {
            *x = 0.5 * (lo + hi);
        }
        Self::from_array(v)
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        Self {
            c2_over_c1: v[0],
            c3_over_c1: v[1],
            c4_over_c1: v[2],
            b1_over_c1: v[3],
            b2_over_c1: v[4],
            b3_over_c1: v[5],
            s1: v[6],
            s2: v[7],
            s3: v[8],
            c1: 1.0,
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.c2_over_c1,
            self.c3_over_c1,
            self.c4_over_c1,
            self.b1_over_c1,
            self.b2_over_c1,
            self.b3_over_c1,
            self.s1,
            self.s2,
            self.s3,
        ]
    }

    /// Structural checks that hold regardless of sampling bounds.
    pub fn check_physical(&self) -> Result<()> {
        let v = self.to_array();
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            if !v[i].is_finite() {
                return Err(Error::domain(format!("{name} is not finite")));
            }
            if i < 6 && v[i] <= 0.0 {
                return Err(Error::domain(format!("{name}={} must be positive", v[i])));
            }
            if i >= 6 && v[i].abs() >= 90.0 {
                return Err(Error::domain(format!(
                    "sweep {name}={} outside (-90, 90) degrees",
                    v[i]
                )));
            }
        }
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return Err(Error::domain(format!("c1={} must be positive", self.c1)));
        }
        Ok(())
    }

    /// Checks every parameter against [`PARAM_BOUNDS`] (inclusive), listing
    /// all offenders in the error message.
    pub fn validate(&self) -> Result<()> {
        self.check_physical()?;
        let offenders: Vec<String> = self
            .to_array()
            .iter()
            .zip(PARAM_NAMES.iter().zip(PARAM_BOUNDS))
            .filter(|(v, (_, (lo, hi)))| **v < *lo || **v > *hi)
            .map(|(v, (name, (lo, hi)))| format!("{name}={v} outside [{lo}, {hi}]"))
            .collect();
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(offenders.join("; ")))
        }
    }

    /// Maps each parameter to [0, 1] across its sampling range.
    pub fn normalized(&self) -> [f64; 9] {
        let mut out = self.to_array();
        for (x, (lo, hi)) in out.iter_mut().zip(PARAM_BOUNDS) {
            *x = (*x - lo) / (hi - lo);
        }
        out
    }

    /// Inverse of [`normalized`](Self::normalized); `c1` is set to 1.
    pub fn denormalize(unit: &[f64; 9]) -> Self {
        let mut v = *unit;
        for (x, (lo, hi)) in v.iter_mut().zip(PARAM_BOUNDS) {
            *x = lo + *x * (hi - lo);
        }
        Self::from_array(v)
    }

    /// Clamps each parameter into its sampling range.
    pub fn clamped(&self) -> Self {
        let mut v = self.to_array();
        for (x, (lo, hi)) in v.iter_mut().zip(PARAM_BOUNDS) {
            *x = x.clamp(lo, hi);
        }
        Self {
            c1: self.c1,
            ..Self::from_array(v)
        }
    }
}

/// One spanwise station of the planform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub y: f64,
    pub le_x: f64,
    pub chord: f64,
}

/// Four spanwise stations from the centerline to the tip.
#[derive(Debug, Clone, PartialEq)]
pub struct Planform {
    pub stations: [Station; 4],
}

impl Planform {
    pub fn semispan(&self) -> f64 {
        self.stations[3].y
    }

    /// Leading-edge x and chord at spanwise distance `y_abs` from the
    /// centerline, linearly interpolated between stations and held constant
    /// past the tip.
    pub fn section_at(&self, y_abs: f64) -> (f64, f64) {
        let s = &self.stations;
        if y_abs <= s[0].y {
            return (s[0].le_x, s[0].chord);
        }
        for w in s.windows(2) {
            if y_abs <= w[1].y {
                let t = (y_abs - w[0].y) / (w[1].y - w[0].y);
                return (
                    w[0].le_x + t * (w[1].le_x - w[0].le_x),
                    w[0].chord + t * (w[1].chord - w[0].chord),
                );
            }
        }
        (s[3].le_x, s[3].chord)
    }
}

/// Builds the station table: stations at y = 0, B1, B1+B2, B1+B2+B3 with
/// chords C1..C4 and leading edges swept by `tan(S_k)` over each segment.
pub fn build_planform(p: &PlanformParams, validate: bool) -> Result<Planform> {
    if validate {
        p.validate()?;
    } else {
        p.check_physical()?;
    }
    let c1 = p.c1;
    let spans = [p.b1_over_c1 * c1, p.b2_over_c1 * c1, p.b3_over_c1 * c1];
    let sweeps = [p.s1, p.s2, p.s3];
    let chords = [c1, p.c2_over_c1 * c1, p.c3_over_c1 * c1, p.c4_over_c1 * c1];

    let mut stations = [Station {
        y: 0.0,
        le_x: 0.0,
        chord: chords[0],
    }; 4];
    for k in 0..3 {
        let tan = sweeps[k].to_radians().tan();
        if !tan.is_finite() {
            return Err(Error::domain(format!("sweep s{} gives non-finite tangent", k + 1)));
        }
        stations[k + 1] = Station {
            y: stations[k].y + spans[k],
            le_x: stations[k].le_x + spans[k] * tan,
            chord: chords[k + 1],
        };
    }
    Ok(Planform { stations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sweep_keeps_leading_edge_at_origin() {
        let mut p = PlanformParams::midpoint();
        p.s1 = 0.0;
        p.s2 = 0.0;
        p.s3 = 0.0;
        p.b1_over_c1 = 0.1;
        let pf = build_planform(&p, false).unwrap();
        assert_eq!(pf.stations[1].le_x, 0.0);
        assert_eq!(pf.stations[3].le_x, 0.0);
    }

    #[test]
    fn forty_five_degree_sweep() {
        let mut p = PlanformParams::midpoint();
        p.s1 = 45.0;
        p.b1_over_c1 = 0.1;
        let pf = build_planform(&p, true).unwrap();
        assert!((pf.stations[1].le_x - 0.1).abs() < 1e-15);
    }

    #[test]
    fn midpoint_station_table() {
        let pf = build_planform(&PlanformParams::midpoint(), true).unwrap();
        let ys: Vec<f64> = pf.stations.iter().map(|s| s.y).collect();
        let expect_y = [0.0, 0.15, 0.275, 0.725];
        for (a, b) in ys.iter().zip(expect_y) {
            assert!((a - b).abs() < 1e-12);
        }
        // Independent evaluation of the cumulative tangent recurrence.
        let t50 = (50.0f64).to_radians().tan();
        let t32 = (32.0f64).to_radians().tan();
        let le = [0.0, 0.15 * t50, 0.15 * t50 + 0.125 * t50, 0.275 * t50 + 0.45 * t32];
        for (s, e) in pf.stations.iter().zip(le) {
            assert!((s.le_x - e).abs() < 1e-12);
        }
        let frozen = [0.0, 0.17876, 0.32772, 0.60895];
        for (s, e) in pf.stations.iter().zip(frozen) {
            assert!((s.le_x - e).abs() < 1e-4, "{} vs {}", s.le_x, e);
        }
        let chords: Vec<f64> = pf.stations.iter().map(|s| s.chord).collect();
        assert!(chords.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn right_angle_sweep_is_a_domain_error() {
        let mut p = PlanformParams::midpoint();
        p.s2 = 90.0;
        assert!(matches!(build_planform(&p, false), Err(Error::Domain(_))));
    }

    #[test]
    fn validation_names_every_offender() {
        let mut p = PlanformParams::midpoint();
        p.s1 = 70.0;
        p.c4_over_c1 = 0.01;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("s1=70"));
        assert!(msg.contains("c4_over_c1"));
    }

    #[test]
    fn normalization_round_trip() {
        let p = PlanformParams::from_array([0.61, 0.2, 0.07, 0.13, 0.19, 0.55, 41.0, 59.0, 30.0]);
        let back = PlanformParams::denormalize(&p.normalized());
        for (a, b) in back.to_array().iter().zip(p.to_array()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn section_interpolation_hits_stations() {
        let pf = build_planform(&PlanformParams::midpoint(), true).unwrap();
        for s in pf.stations {
            let (le, c) = pf.section_at(s.y);
            assert!((le - s.le_x).abs() < 1e-12 && (c - s.chord).abs() < 1e-12);
        }
        assert_eq!(pf.section_at(10.0), (pf.stations[3].le_x, pf.stations[3].chord));
    }
}
