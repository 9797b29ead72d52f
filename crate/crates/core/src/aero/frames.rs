use crate::error::{Error, Result};
use crate::geometry::{norm, Vec3};

/// Pressure plus friction in body axes: `C_i = -cp n_i + cf_i`.
pub fn body_frame_coefficients(cp: f64, cf: Vec3, normal: Vec3) -> Result<Vec3> {
    if !((norm(normal) - 1.0).abs() <= 1e-6) {
        return Err(Error::domain(format!("normal {normal:?} is not unit length")));
    }
    Ok([
        -cp * normal[0] + cf[0],
        -cp * normal[1] + cf[1],
        -cp * normal[2] + cf[2],
    ])
}

/// Rotates body-axis (cx, cz) into wind axes, returning `(cd, cl)`.
pub fn wind_frame(cx: f64, cz: f64, alpha_deg: f64) -> (f64, f64) {
    let (s, c) = alpha_deg.to_radians().sin_cos();
    (cx * c + cz * s, -cx * s + cz * c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressure_and_friction() {
        assert_eq!(body_frame_coefficients(1.0, [0.0; 3], [0.0, 0.0, 1.0]).unwrap(), [0.0, 0.0, -1.0]);
        assert_eq!(
            body_frame_coefficients(0.0, [0.01, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap(),
            [0.01, 0.0, 0.0]
        );
        let c = body_frame_coefficients(2.0, [0.003, 0.0, 0.001], [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(c[0], 0.003);
        assert!((c[2] + 1.999).abs() <= 1e-12 * 1.999);
    }

    #[test]
    fn non_unit_normal_rejected() {
        assert!(matches!(
            body_frame_coefficients(1.0, [0.0; 3], [0.0, 0.0, 1.01]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rotation_fixtures() {
        assert_eq!(wind_frame(0.01, 0.5, 0.0), (0.01, 0.5));
        let (cd, cl) = wind_frame(0.01, 0.5, 90.0);
        assert!((cd - 0.5).abs() < 1e-15 && (cl + 0.01).abs() < 1e-15);
        let (cd, cl) = wind_frame(0.01, 0.5, 10.0);
        // sin 10 deg and cos 10 deg to 17 digits.
        let (s, c) = (0.173_648_177_666_930_35, 0.984_807_753_012_208_1);
        assert!((cd - (0.01 * c + 0.5 * s)).abs() <= 1e-12 * cd.abs());
        assert!((cl - (-0.01 * s + 0.5 * c)).abs() <= 1e-12 * cl.abs());
        assert!((cd - 0.0966722).abs() < 1e-7);
        assert!((cl - 0.4906674).abs() < 1e-7);
    }
}
