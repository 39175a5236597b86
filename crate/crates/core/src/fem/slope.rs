//! Structured meshes of a homogeneous slope.
//!
//! The domain sits on a horizontal base at `y = 0`. The ground surface is at
//! `y = depth` left of the toe, rises linearly over the slope face and stays
//! at `y = depth + height` right of the crest. The base is fully supported,
//! the vertical sides are on rollers.

use super::material::MohrCoulomb;
use super::mesh::Mesh;
use super::model::FemModel;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeGeometry {
    pub height: f64,
    pub inclination_deg: f64,
    /// Horizontal extent in front of the toe and behind the crest.
    pub pad: f64,
    /// Foundation depth below the toe.
    pub depth: f64,
    /// Target element size.
    pub h_mesh: f64,
}

impl SlopeGeometry {
    /// Foundation depth of half the height.
    pub fn new(height: f64, inclination_deg: f64, pad: f64, h_mesh: f64) -> Self {
        Self {
            height,
            inclination_deg,
            pad,
            depth: 0.5 * height,
            h_mesh,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter(format!("{name} must be positive")))
            }
        };
        positive(self.height, "height")?;
        positive(self.pad, "pad")?;
        positive(self.depth, "depth")?;
        positive(self.h_mesh, "h_mesh")?;
        if !(self.inclination_deg > 0.0 && self.inclination_deg < 90.0) {
            return Err(ModelError::InvalidParameter("inclination must lie in (0, 90) degrees".into()));
        }
        Ok(())
    }

    pub fn run(&self) -> f64 {
        self.height / self.inclination_deg.to_radians().tan()
    }

    pub fn width(&self) -> f64 {
        2.0 * self.pad + self.run()
    }

    fn surface(&self, x: f64) -> f64 {
        let t = ((x - self.pad) / self.run()).clamp(0.0, 1.0);
        self.depth + t * self.height
    }

    /// Quadratic triangle mesh; every structured cell is split in two along
    /// alternating diagonals.
    pub fn mesh(&self) -> Result<Mesh, ModelError> {
        self.validate()?;
        let mut xs = vec![0.0];
        for (a, b) in [(0.0, self.pad), (self.pad, self.pad + self.run()), (self.pad + self.run(), self.width())] {
            let n = ((b - a) / self.h_mesh).ceil().max(1.0) as usize;
            xs.extend((1..=n).map(|i| a + (b - a) * i as f64 / n as f64));
        }
        let ny = ((self.depth + self.height) / self.h_mesh).ceil().max(1.0) as usize;
        let nx = xs.len();
        let id = |i: usize, j: usize| j * nx + i;
        let mut corners = Vec::with_capacity(nx * (ny + 1));
        for j in 0..=ny {
            for &x in &xs {
                corners.push([x, self.surface(x) * j as f64 / ny as f64]);
            }
        }
        let mut tris = Vec::with_capacity(2 * (nx - 1) * ny);
        for j in 0..ny {
            for i in 0..nx - 1 {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                } else {
                    tris.push([a, b, d]);
                    tris.push([b, c, d]);
                }
            }
        }
        let mut fixed = Vec::new();
        for i in 0..nx {
            fixed.push((id(i, 0), true, true));
        }
        for j in 1..=ny {
            fixed.push((id(0, j), true, false));
            fixed.push((id(nx - 1, j), true, false));
        }
        let (mesh, warnings) = Mesh::from_corners(corners, &tris, &fixed)?;
        debug_assert!(warnings.is_empty());
        Ok(mesh)
    }
}

/// Slope model with the default material.
pub fn build_slope_fixture(height: f64, inclination_deg: f64, pad: f64, h_mesh: f64, lambda0: f64) -> Result<FemModel, ModelError> {
    let mesh = SlopeGeometry::new(height, inclination_deg, pad, h_mesh).mesh()?;
    FemModel::new(mesh, MohrCoulomb::default(), lambda0)
}
