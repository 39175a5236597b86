use crate::error::ModelError;

/// Isotropic elastic, perfectly plastic Mohr-Coulomb material.
///
/// Units are kPa for moduli and cohesion and kN/m^3 for the unit weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MohrCoulomb {
    pub young: f64,
    pub poisson: f64,
    /// Friction angle in degrees.
    pub friction_deg: f64,
    pub cohesion: f64,
    pub unit_weight: f64,
}

/// Strength parameters after dividing `c` and `tan(phi)` by a reduction factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedStrength {
    pub cohesion: f64,
    /// Friction angle in radians.
    pub friction: f64,
}

impl ReducedStrength {
    /// `2 c cos(phi)`, the strength constant of the yield function.
    pub fn yield_constant(&self) -> f64 {
        2.0 * self.cohesion * self.friction.cos()
    }

    /// Hydrostatic stress at the apex of the yield surface, `c cot(phi)`.
    pub fn apex_pressure(&self) -> f64 {
        self.cohesion / self.friction.tan()
    }
}

impl Default for MohrCoulomb {
    fn default() -> Self {
        Self {
            young: 40_000.0,
            poisson: 0.3,
            friction_deg: 20.0,
            cohesion: 15.0,
            unit_weight: 20.0,
        }
    }
}

impl MohrCoulomb {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParameter(m.to_string()));
        if !(self.young > 0.0) {
            return bad("Young's modulus must be positive");
        }
        if !(self.poisson > -1.0 && self.poisson < 0.5) {
            return bad("Poisson's ratio must lie in (-1, 0.5)");
        }
        if !(self.friction_deg > 0.0 && self.friction_deg < 90.0) {
            return bad("friction angle must lie in (0, 90) degrees");
        }
        if !(self.cohesion > 0.0) {
            return bad("cohesion must be positive");
        }
        if !(self.unit_weight >= 0.0) {
            return bad("unit weight must be nonnegative");
        }
        Ok(())
    }

    /// Lame's first parameter and the shear modulus.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young, self.poisson);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }

    pub fn reduced(&self, lambda: f64) -> ReducedStrength {
        let phi = self.friction_deg.to_radians();
        ReducedStrength {
            cohesion: self.cohesion / lambda,
            friction: (phi.tan() / lambda).atan(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_divides_strength() {
        let m = MohrCoulomb::default();
        let r = m.reduced(2.0);
        assert_eq!(r.cohesion, 7.5);
        assert!((r.friction.tan() - 20f64.to_radians().tan() / 2.0).abs() < 1e-15);
        assert_eq!(m.reduced(1.0).friction, 20f64.to_radians());
        // the apex does not move under reduction
        assert!((r.apex_pressure() - m.reduced(1.0).apex_pressure()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut m = MohrCoulomb::default();
        m.poisson = 0.5;
        assert!(m.validate().is_err());
        let mut m = MohrCoulomb::default();
        m.cohesion = 0.0;
        assert!(m.validate().is_err());
        assert!(MohrCoulomb::default().validate().is_ok());
    }
}
