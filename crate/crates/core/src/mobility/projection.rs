use serde::{Deserialize, Serialize};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Coordinate reference system of a dataset's `x`/`y` values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crs {
    /// Coordinates were supplied already projected, in meters.
    Projected,
    /// Spherical azimuthal-equidistant projection centred on a reference point.
    AzimuthalEquidistant(AzimuthalEquidistant),
}

impl Crs {
    pub fn projection(&self) -> Option<&AzimuthalEquidistant> {
        match self {
            Crs::Projected => None,
            Crs::AzimuthalEquidistant(p) => Some(p),
        }
    }
}

/// Local azimuthal-equidistant projection: distances from the centre are preserved
/// exactly and distortion stays small at city scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzimuthalEquidistant {
    pub lat0: f64,
    pub lon0: f64,
}

impl AzimuthalEquidistant {
    pub fn new(lat0: f64, lon0: f64) -> Self {
        Self { lat0, lon0 }
    }

    pub fn forward(&self, lat: f64, lon: f64) -> (f64, f64) {
        let (phi0, lam0) = (self.lat0.to_radians(), self.lon0.to_radians());
        let (phi, lam) = (lat.to_radians(), lon.to_radians());
        let dlam = lam - lam0;
        let cos_c = (phi0.sin() * phi.sin() + phi0.cos() * phi.cos() * dlam.cos()).clamp(-1.0, 1.0);
        let c = cos_c.acos();
        let k = if c.abs() < 1e-12 { 1.0 } else { c / c.sin() };
        let x = EARTH_RADIUS_M * k * phi.cos() * dlam.sin();
        let y = EARTH_RADIUS_M * k * (phi0.cos() * phi.sin() - phi0.sin() * phi.cos() * dlam.cos());
        (x, y)
    }

    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let (phi0, lam0) = (self.lat0.to_radians(), self.lon0.to_radians());
        let rho = x.hypot(y);
        if rho < 1e-9 {
            return (self.lat0, self.lon0);
        }
        let c = rho / EARTH_RADIUS_M;
        let phi = (c.cos() * phi0.sin() + y * c.sin() * phi0.cos() / rho)
            .clamp(-1.0, 1.0)
            .asin();
        let lam = lam0 + (x * c.sin()).atan2(rho * phi0.cos() * c.cos() - y * phi0.sin() * c.sin());
        (phi.to_degrees(), lam.to_degrees())
    }
}
