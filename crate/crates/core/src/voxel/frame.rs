use super::FrameError;
use crate::geometry::{place, Vec3};
use crate::structure::ResidueSite;

/// Ideal CA–CB bond length, Å.
pub const CB_BOND: f64 = 1.522;
/// Ideal N–CA–CB angle, degrees.
pub const CB_ANGLE: f64 = 110.4;
/// Ideal C–N–CA–CB dihedral, degrees (L-amino-acid chirality).
pub const CB_DIHEDRAL: f64 = -122.55;

/// Ideal-geometry CB from backbone N, CA, C.
pub fn virtual_cbeta(n: Vec3, ca: Vec3, c: Vec3) -> Result<Vec3, FrameError> {
    place(c, n, ca, CB_BOND, CB_ANGLE, CB_DIHEDRAL).ok_or(FrameError::Degenerate("collinear backbone"))
}

/// Residue-local orthonormal frame centred on CB: `x` along CA→N, `z`
/// normal to the N–CA–C plane on the CB side, `y = z × x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Vec3,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl LocalFrame {
    pub fn from_backbone(n: Vec3, ca: Vec3, c: Vec3, cb: Vec3) -> Result<Self, FrameError> {
        let x = (n - ca).unit(1e-12).ok_or(FrameError::Degenerate("N coincides with CA"))?;
        let normal = (n - ca)
            .cross(c - ca)
            .unit(1e-6)
            .ok_or(FrameError::Degenerate("collinear backbone"))?;
        let side = normal.dot(cb - ca);
        if side.abs() < 1e-9 {
            return Err(FrameError::Degenerate("CB lies in the backbone plane"));
        }
        let z = if side > 0.0 { normal } else { -normal };
        Ok(LocalFrame {
            origin: cb,
            x,
            y: z.cross(x),
            z,
        })
    }

    /// Frame for a site, using the observed CB or a virtual one when absent.
    pub fn for_site(site: &ResidueSite) -> Result<Self, FrameError> {
        let cb = match site.cbeta {
            Some(cb) => cb,
            None => virtual_cbeta(site.n, site.ca, site.c)?,
        };
        Self::from_backbone(site.n, site.ca, site.c, cb)
    }

    /// Coordinates of `p` in this frame.
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(self.x), d.dot(self.y), d.dot(self.z))
    }
}
