//! Scattering resonances of sound-hard obstacles in the plane.
//!
//! The exterior Helmholtz problem is truncated at a circle `|x| = R` with the
//! Dirichlet-to-Neumann map, discretized with linear triangles, and the
//! resulting holomorphic matrix family `B(k) = S1 - k^2 S2 - S3(k)` is
//! searched for eigenvalues with a contour-quadrature spectral indicator.

pub mod specfun;
pub mod mesh;
pub mod linalg;
pub mod assemble;
pub mod dtn;
pub mod nep;
pub mod sim;
pub mod oracle;
pub mod multilevel;

use num_complex::Complex64;

/// Axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]` in the k-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re: [f64; 2], im: [f64; 2]) -> Self {
        Self {
            re_min: re[0].min(re[1]),
            re_max: re[0].max(re[1]),
            im_min: im[0].min(im[1]),
            im_max: im[0].max(im[1]),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    /// Grown by `margin` on every side.
    pub fn inflate(&self, margin: f64) -> Self {
        Self {
            re_min: self.re_min - margin,
            re_max: self.re_max + margin,
            im_min: self.im_min - margin,
            im_max: self.im_max + margin,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }
}
