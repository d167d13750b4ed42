//! Spherical-harmonic machinery: special functions, complex SH, steering
//! vectors and sampling grids on the sphere.

mod angle;
pub mod grid;
mod harmonics;
pub mod special;

pub use angle::SphericalAngle;
pub use grid::{make_grid, make_quadrature_grid, SphereGrid};
pub use harmonics::{sh_channels, sh_index, sh_order_of, sph_harmonic, steering_vector, SteeringVector};
pub use special::{legendre_p, sph_bessel_j, sph_bessel_j_prime, sph_bessel_y, sph_hankel1_h, sph_hankel1_h_prime};
