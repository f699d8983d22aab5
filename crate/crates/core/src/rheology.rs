//! Viscous-plastic constitutive relations.

use crate::error::{Error, Result};

/// Symmetric strain-rate tensor (1/s).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StrainRate {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl StrainRate {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn divergence(&self) -> f64 {
        self.xx + self.yy
    }

    /// The tensor in a frame rotated by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            xx: c * c * self.xx + 2.0 * c * s * self.xy + s * s * self.yy,
            xy: (c * c - s * s) * self.xy + c * s * (self.yy - self.xx),
            yy: s * s * self.xx - 2.0 * c * s * self.xy + c * c * self.yy,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.xx, self.xy, self.yy]
    }
}

/// Velocity gradient `[[du/dx, du/dy], [dv/dx, dv/dy]]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VelocityGradient {
    pub dudx: f64,
    pub dudy: f64,
    pub dvdx: f64,
    pub dvdy: f64,
}

impl VelocityGradient {
    pub fn strain(&self) -> StrainRate {
        StrainRate {
            xx: self.dudx,
            xy: 0.5 * (self.dudy + self.dvdx),
            yy: self.dvdy,
        }
    }
}

/// Symmetric stress tensor (N/m).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stress {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Stress {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RheologyParams {
    /// Ratio of major to minor axes of the yield ellipse.
    pub e_vp: f64,
    /// Viscous-plastic transition threshold (1/s).
    pub delta_min: f64,
    /// Ice strength coefficient (N/m^2).
    pub p_star: f64,
    /// Concentration exponent of the ice strength.
    pub c_p: f64,
    pub replacement_pressure: bool,
}

impl Default for RheologyParams {
    fn default() -> Self {
        Self {
            e_vp: 2.0,
            delta_min: 2e-9,
            p_star: 27500.0,
            c_p: 20.0,
            replacement_pressure: false,
        }
    }
}

impl RheologyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_vp > 0.0 && self.delta_min > 0.0 && self.p_star > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rheology needs e_vp, delta_min, p_star > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Ice strength `P = P* H exp(-C (1 - A))`.
    pub fn ice_strength(&self, thickness: f64, concentration: f64) -> f64 {
        self.p_star * thickness * (-self.c_p * (1.0 - concentration)).exp()
    }

    /// Full viscous-plastic stress for a strain rate and ice strength.
    pub fn vp_stress(&self, s: StrainRate, strength: f64) -> Stress {
        let delta = delta_invariant(s, self.e_vp);
        let (zeta, eta) = viscosities(delta, strength, self);
        let p = if self.replacement_pressure {
            strength * delta / delta.max(self.delta_min)
        } else {
            strength
        };
        stress_from_strain(s, eta, zeta, p)
    }
}

/// `Delta = ((exx + eyy)^2 + ((exx - eyy)^2 + 4 exy^2) / e^2)^(1/2)`
pub fn delta_invariant(s: StrainRate, e_vp: f64) -> f64 {
    let div = s.xx + s.yy;
    let diff = s.xx - s.yy;
    (div * div + (diff * diff + 4.0 * s.xy * s.xy) / (e_vp * e_vp)).sqrt()
}

/// Bulk and shear viscosities `(zeta, eta)`; `zeta` is capped at `P / (2 Delta_min)`.
pub fn viscosities(delta: f64, strength: f64, params: &RheologyParams) -> (f64, f64) {
    let zeta = strength / (2.0 * delta.max(params.delta_min));
    (zeta, zeta / (params.e_vp * params.e_vp))
}

pub fn stress_from_strain(s: StrainRate, eta: f64, zeta: f64, pressure: f64) -> Stress {
    let trace = s.xx + s.yy;
    let iso = zeta * trace - 0.5 * pressure;
    Stress {
        xx: 2.0 * eta * (s.xx - 0.5 * trace) + iso,
        xy: 2.0 * eta * s.xy,
        yy: 2.0 * eta * (s.yy - 0.5 * trace) + iso,
    }
}

/// `((exx - eyy)^2 + 4 exy^2)^(1/2)`
pub fn shear_invariant(s: StrainRate) -> f64 {
    let diff = s.xx - s.yy;
    (diff * diff + 4.0 * s.xy * s.xy).sqrt()
}

/// Linear map from `(exx, exy, eyy)` to `(sxx, sxy, syy)` for `zeta = z eta`.
pub fn stress_matrix_s(eta: f64, z: f64) -> [[f64; 3]; 3] {
    [
        [eta * (1.0 + z), 0.0, eta * (z - 1.0)],
        [0.0, 2.0 * eta, 0.0],
        [eta * (z - 1.0), 0.0, eta * (1.0 + z)],
    ]
}

/// Linear viscous stress with constant viscosities, `P = 0`.
#[inline]
pub fn viscous_stress(s: StrainRate, eta: f64, z: f64) -> Stress {
    stress_from_strain(s, eta, z * eta, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_invariant(StrainRate::default(), 2.0), 0.0);
        for e in [0.5, 1.0, 2.0, 3.0] {
            assert!(close(delta_invariant(StrainRate::new(-1.5, 0.0, -1.5), e), 3.0, 1e-15));
        }
        assert!(close(delta_invariant(StrainRate::new(0.0, 0.7, 0.0), 2.0), 0.7, 1e-15));
    }

    #[test]
    fn viscosity_cap_and_ratio() {
        let p = RheologyParams::default();
        let (z, e) = viscosities(2.0 * p.delta_min, 1.0, &p);
        assert!(close(z, 1.0 / (4.0 * p.delta_min), 1e-6));
        assert!(close(e, z / 4.0, 1e-6));
        let (z0, _) = viscosities(0.0, 1.0, &p);
        assert!(close(z0, 1.0 / (2.0 * p.delta_min), 1e-3));
    }

    #[test]
    fn stress_examples() {
        let s = stress_from_strain(StrainRate::default(), 1.0, 1.0, 0.0);
        assert_eq!(s, Stress::default());
        let s = stress_from_strain(StrainRate::new(0.3, 0.0, 0.3), 1.7, 3.0 * 1.7, 0.0);
        assert!(close(s.xx, 2.0 * 3.0 * 1.7 * 0.3, 1e-14));
        assert!(close(s.yy, s.xx, 1e-14) && s.xy == 0.0);
        let s = stress_from_strain(StrainRate::new(1.0, 0.0, -1.0), 1.0, 1.0, 0.0);
        assert_eq!((s.xx, s.xy, s.yy), (2.0, 0.0, -2.0));
    }

    #[test]
    fn shear_examples() {
        assert_eq!(shear_invariant(StrainRate::default()), 0.0);
        assert_eq!(shear_invariant(StrainRate::new(1.0, 0.0, 1.0)), 0.0);
        assert!(close(shear_invariant(StrainRate::new(0.0, 0.5, 0.0)), 1.0, 1e-15));
    }

    #[test]
    fn s_matrix_examples() {
        assert_eq!(stress_matrix_s(1.0, 1.0), [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        assert_eq!(stress_matrix_s(0.0, 3.0), [[0.0; 3]; 3]);
        assert_eq!(stress_matrix_s(1.0, 4.0), [[5.0, 0.0, 3.0], [0.0, 2.0, 0.0], [3.0, 0.0, 5.0]]);
    }

    #[test]
    fn s_matrix_agrees_with_stress_law() {
        let eps = [StrainRate::new(0.3, -1.2, 0.8), StrainRate::new(-2.0, 0.1, 0.0)];
        for s in eps {
            for (eta, z) in [(1.0, 1.0), (0.4, 4.0), (2.5, 0.0)] {
                let m = stress_matrix_s(eta, z);
                let v = s.as_array();
                let via_matrix: Vec<f64> =
                    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
                let law = stress_from_strain(s, eta, z * eta, 0.0);
                assert!(close(law.xx, via_matrix[0], 1e-14));
                assert!(close(law.xy, via_matrix[1], 1e-14));
                assert!(close(law.yy, via_matrix[2], 1e-14));
                assert!(close(law.xy, 2.0 * eta * s.xy, 1e-14));
            }
        }
    }

    #[test]
    fn invariants_are_rotation_invariant() {
        let s = StrainRate::new(0.7, -0.25, -1.1);
        for deg in [30.0f64, 45.0, 90.0] {
            let r = s.rotated(deg.to_radians());
            assert!(close(delta_invariant(r, 2.0), delta_invariant(s, 2.0), 1e-12));
            assert!(close(shear_invariant(r), shear_invariant(s), 1e-12));
        }
    }

    #[test]
    fn replacement_pressure_vanishes_at_rest() {
        let mut p = RheologyParams::default();
        let at_rest = p.vp_stress(StrainRate::default(), 1000.0);
        assert!(close(at_rest.xx, -500.0, 1e-12));
        p.replacement_pressure = true;
        let at_rest = p.vp_stress(StrainRate::default(), 1000.0);
        assert_eq!(at_rest.xx, 0.0);
    }

    #[test]
    fn validate_rejects_nonpositive() {
        let p = RheologyParams { e_vp: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(RheologyParams::default().validate().is_ok());
    }
}
