//! Shrake–Rupley solvent-accessible surface area.
//!
//! Each atom carries its own Fibonacci point set, oriented by a frame built
//! from two reference atoms chosen by input order: atom `i` uses atoms `i-1`
//! and `i-2` (atoms 0 and 1 use the nearest indices available). The frame
//! moves with the molecule, so areas are invariant under rigid motions, and
//! appending atoms never re-orients the points of existing atoms, so an
//! added atom can only bury points.

use std::collections::HashMap;

use crate::geometry::Vec3;

pub const DEFAULT_PROBE: f64 = 1.4;
pub const DEFAULT_POINTS: usize = 960;

/// Unit points spread by the golden angle, `z` running from pole to pole.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = k as f64 * golden;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Any unit vector perpendicular to `u`.
fn perpendicular(u: Vec3) -> Vec3 {
    let e = if u.x.abs() <= u.y.abs() && u.x.abs() <= u.z.abs() {
        Vec3::new(1.0, 0.0, 0.0)
    } else if u.y.abs() <= u.z.abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    u.cross(e).unit(0.0).expect("u is a unit vector")
}

/// Orthonormal (v, w, u) frame for atom `i`; `u` is the lattice pole.
fn atom_frame(centers: &[Vec3], i: usize) -> (Vec3, Vec3, Vec3) {
    let n = centers.len();
    let refs: [Option<usize>; 2] = match i {
        0 => [(n > 1).then_some(1), (n > 2).then_some(2)],
        1 => [Some(0), (n > 2).then_some(2)],
        _ => [Some(i - 1), Some(i - 2)],
    };
    let c = centers[i];
    let Some(u) = refs[0].and_then(|a| (centers[a] - c).unit(1e-9)) else {
        return (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0));
    };
    let v = refs[1]
        .and_then(|b| {
            let d = centers[b] - c;
            (d - u * d.dot(u)).unit(1e-6)
        })
        .unwrap_or_else(|| perpendicular(u));
    (v, u.cross(v), u)
}

/// Per-atom SASA in Å² for spheres at `centers` with `radii`.
pub fn shrake_rupley(centers: &[Vec3], radii: &[f64], probe: f64, n_points: usize) -> Vec<f64> {
    assert_eq!(centers.len(), radii.len());
    if centers.is_empty() {
        return Vec::new();
    }
    let lattice = fibonacci_sphere(n_points.max(1));
    let max_r = radii.iter().cloned().fold(0.0, f64::max);
    let cell = 2.0 * (max_r + probe);
    let key = |p: Vec3| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in centers.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }

    let mut out = Vec::with_capacity(centers.len());
    let mut neighbours: Vec<(f64, Vec3, f64)> = Vec::new();
    for (i, &ci) in centers.iter().enumerate() {
        let ri = radii[i] + probe;
        neighbours.clear();
        let (kx, ky, kz) = key(ci);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(list) = buckets.get(&(kx + dx, ky + dy, kz + dz)) else { continue };
                    for &j in list {
                        let d = centers[j].distance(ci);
                        if j != i && d < radii[i] + radii[j] + 2.0 * probe {
                            let rj = radii[j] + probe;
                            neighbours.push((d, centers[j], rj * rj));
                        }
                    }
                }
            }
        }
        // closest neighbours first: they bury the most points
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0));

        let (v, w, u) = atom_frame(centers, i);
        let mut exposed = 0usize;
        let mut last_hit = 0usize;
        for p in &lattice {
            let point = ci + (v * p.x + w * p.y + u * p.z) * ri;
            let buried = |&(_, c, r2): &(f64, Vec3, f64)| (point - c).norm2() < r2;
            if neighbours.get(last_hit).is_some_and(buried) {
                continue;
            }
            match neighbours.iter().position(buried) {
                Some(k) => last_hit = k,
                None => exposed += 1,
            }
        }
        let area = 4.0 * std::f64::consts::PI * ri * ri;
        out.push(area * exposed as f64 / lattice.len() as f64);
    }
    out
}
