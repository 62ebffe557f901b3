use super::{wrap_angle, AngleProfile, CalphaChain, GeometryError, Vec3, DEGENERACY_TOLERANCE};
use nalgebra::Matrix3;

/// Orthonormal right-handed triad `(n, b, t)` with `n = b × t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetFrame {
    pub n: Vec3,
    pub b: Vec3,
    pub t: Vec3,
}

impl FrenetFrame {
    /// The frame as a matrix whose rows are `n`, `b`, `t`.
    pub fn as_rows(&self) -> Matrix3<f64> {
        Matrix3::from_rows(&[self.n.transpose(), self.b.transpose(), self.t.transpose()])
    }

    pub fn from_rows(m: &Matrix3<f64>) -> Self {
        Self {
            n: m.row(0).transpose(),
            b: m.row(1).transpose(),
            t: m.row(2).transpose(),
        }
    }

    /// Reference frame used by [`reconstruct`]: `t = +z`, `n = +y`, `b = -x`,
    /// so that with `τ_0 = 0` the second tangent lies in the y–z plane.
    pub fn reference() -> Self {
        Self {
            n: Vec3::y(),
            b: -Vec3::x(),
            t: Vec3::z(),
        }
    }
}

fn tangents(chain: &CalphaChain) -> Result<Vec<Vec3>, GeometryError> {
    for (i, v) in chain.vertices.iter().enumerate() {
        if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
    }
    chain
        .vertices
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let d = w[1] - w[0];
            let len = d.norm();
            if len < DEGENERACY_TOLERANCE {
                Err(GeometryError::CoincidentVertices(i))
            } else {
                Ok(d / len)
            }
        })
        .collect()
}

fn binormal(prev: &Vec3, next: &Vec3, site: usize) -> Result<Vec3, GeometryError> {
    let c = prev.cross(next);
    let norm = c.norm();
    if norm < DEGENERACY_TOLERANCE {
        Err(GeometryError::DegenerateFrame(site))
    } else {
        Ok(c / norm)
    }
}

/// Discrete Frenet frames at the interior vertices of `chain`.
///
/// `frames[j]` belongs to site `j + 1` (vertex `j + 1`); its tangent points
/// along the outgoing bond and its binormal is normal to the plane of the two
/// bonds meeting at the vertex.
pub fn compute_frames(chain: &CalphaChain) -> Result<Vec<FrenetFrame>, GeometryError> {
    if chain.len() < 3 {
        return Err(GeometryError::TooFewVertices { needed: 3, got: chain.len() });
    }
    let t = tangents(chain)?;
    (1..t.len())
        .map(|k| {
            let b = binormal(&t[k - 1], &t[k], k)?;
            Ok(FrenetFrame { n: b.cross(&t[k]), b, t: t[k] })
        })
        .collect()
}

/// Bond and torsion angles of `chain` in the gauge where every bond angle is
/// non-negative.
///
/// Angles are evaluated with `atan2` of the sine and cosine parts, which is
/// the clamped `arccos` of the dot products with the sign of the torsion taken
/// from `(b_k × b_{k+1}) · t_k`. Antiparallel consecutive binormals give
/// `|τ| = π`, reported as `-π`.
pub fn compute_angles(chain: &CalphaChain) -> Result<AngleProfile, GeometryError> {
    let frames = compute_frames(chain)?;
    let t = tangents(chain)?;
    let kappa = t
        .windows(2)
        .map(|w| w[0].cross(&w[1]).norm().atan2(w[0].dot(&w[1])))
        .collect();
    let tau = frames
        .windows(2)
        .map(|f| {
            let sin = f[0].b.cross(&f[1].b).dot(&f[0].t);
            wrap_angle(sin.atan2(f[0].b.dot(&f[1].b)))
        })
        .collect();
    let profile = AngleProfile {
        kappa,
        tau,
        bond_lengths: chain.bond_lengths(),
        index_offset: chain.residue_numbers.as_ref().map_or(1, |r| i64::from(r[1])),
        bend_phase: None,
    };
    Ok(profile)
}

/// The discrete Frenet transfer matrix taking frame `k` (rows `n, b, t`) to
/// frame `k + 1`.
pub fn transfer_matrix(kappa: f64, tau: f64) -> Matrix3<f64> {
    let (sk, ck) = kappa.sin_cos();
    let (st, ct) = tau.sin_cos();
    Matrix3::new(
        ck * ct, ck * st, -sk, //
        -st, ct, 0.0, //
        sk * ct, sk * st, ck,
    )
}

/// Transfer with the bend generator rotated by `phase` about the new tangent.
fn phased_transfer(kappa: f64, tau: f64, phase: f64) -> Matrix3<f64> {
    if phase == 0.0 {
        return transfer_matrix(kappa, tau);
    }
    let (s, c) = phase.sin_cos();
    let rot = Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
    rot * transfer_matrix(kappa, tau - phase)
}

/// Rebuilds vertex positions from a profile into `out`, starting at the
/// origin in the [`FrenetFrame::reference`] frame.
pub fn reconstruct_into(profile: &AngleProfile, out: &mut Vec<Vec3>) -> Result<(), GeometryError> {
    profile.validate()?;
    out.clear();
    let n = profile.vertex_count();
    if n == 0 {
        return Ok(());
    }
    let mut frame = FrenetFrame::reference().as_rows();
    let mut r = Vec3::zeros();
    out.push(r);
    if let Some(&len) = profile.bond_lengths.first() {
        r += len * Vec3::z();
        out.push(r);
    }
    for (k, &kappa) in profile.kappa.iter().enumerate() {
        let tau = profile.tau_at(k).unwrap_or(0.0);
        let phase = profile.bend_phase.as_ref().map_or(0.0, |p| p[k]);
        frame = phased_transfer(kappa, tau, phase) * frame;
        let t = Vec3::new(frame[(2, 0)], frame[(2, 1)], frame[(2, 2)]);
        r += profile.bond_lengths[k + 1] * t;
        out.push(r);
    }
    Ok(())
}

/// Chain with `r_0` at the origin, `t_0 = +z` and `t_1` in the y–z plane.
pub fn reconstruct(profile: &AngleProfile) -> Result<CalphaChain, GeometryError> {
    let mut vertices = Vec::with_capacity(profile.vertex_count());
    reconstruct_into(profile, &mut vertices)?;
    Ok(CalphaChain::new(vertices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn zigzag() -> CalphaChain {
        CalphaChain::from_points(&[[0.0, 0.0, 0.0], [0.0, 0.0, 3.8], [0.0, 3.8, 3.8], [0.0, 3.8, 7.6]])
    }

    fn assert_orthonormal(f: &FrenetFrame) {
        for v in [f.n, f.b, f.t] {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(f.n.dot(&f.b).abs() < 1e-12);
        assert!(f.n.dot(&f.t).abs() < 1e-12);
        assert!(f.b.dot(&f.t).abs() < 1e-12);
        assert!((f.b.cross(&f.t) - f.n).norm() < 1e-12);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let c = CalphaChain::from_points(&[[0.0, 0.0, 0.0], [0.0, 0.0, 3.8], [0.0, 0.0, 7.6]]);
        assert_eq!(compute_frames(&c), Err(GeometryError::DegenerateFrame(1)));
        assert_eq!(compute_angles(&c), Err(GeometryError::DegenerateFrame(1)));
    }

    #[test]
    fn coincident_vertices_rejected() {
        let c = CalphaChain::from_points(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 7.6]]);
        assert_eq!(compute_frames(&c), Err(GeometryError::CoincidentVertices(0)));
    }

    #[test]
    fn too_short() {
        let c = CalphaChain::from_points(&[[0.0, 0.0, 0.0], [0.0, 0.0, 3.8]]);
        assert!(matches!(compute_frames(&c), Err(GeometryError::TooFewVertices { .. })));
    }

    #[test]
    fn planar_zigzag_binormals_along_x() {
        let frames = compute_frames(&zigzag()).unwrap();
        assert_eq!(frames.len(), 2);
        // t0 = z, t1 = y, t2 = z: b1 = z × y = -x, b2 = y × z = +x.
        assert!((frames[0].b + Vec3::x()).norm() < 1e-15);
        assert!((frames[1].b - Vec3::x()).norm() < 1e-15);
        frames.iter().for_each(assert_orthonormal);
    }

    #[test]
    fn planar_zigzag_angles() {
        let p = compute_angles(&zigzag()).unwrap();
        assert_eq!(p.kappa.len(), 2);
        assert_eq!(p.tau.len(), 1);
        for k in &p.kappa {
            assert!((k - FRAC_PI_2).abs() < 1e-15);
        }
        assert_eq!(p.tau[0], -PI);
    }

    #[test]
    fn transfer_matrix_special_values() {
        assert_eq!(transfer_matrix(0.0, 0.0), Matrix3::identity());
        let m = transfer_matrix(FRAC_PI_2, 0.0);
        let expected = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        assert!((m - expected).abs().max() < 1e-16);
    }

    #[test]
    fn straight_profile_reconstructs_along_z() {
        let p = AngleProfile::new(vec![0.0; 4], vec![0.0; 3], vec![3.8; 5]).unwrap();
        let c = reconstruct(&p).unwrap();
        assert_eq!(c.len(), 6);
        for (i, v) in c.vertices.iter().enumerate() {
            assert!((v - Vec3::new(0.0, 0.0, 3.8 * i as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn second_tangent_in_yz_plane() {
        let p = AngleProfile::new(vec![1.1, 0.7], vec![0.4], vec![3.8; 3]).unwrap();
        let c = reconstruct(&p).unwrap();
        assert!(c.vertices[2].x.abs() < 1e-15);
        assert!((c.vertices[1] - Vec3::new(0.0, 0.0, 3.8)).norm() < 1e-15);
    }

    #[test]
    fn helix_frames_are_orthonormal() {
        let n = 20;
        let p = AngleProfile::from_site_angles(vec![FRAC_PI_2; n], &vec![1.0; n], 3.8).unwrap();
        let c = reconstruct(&p).unwrap();
        let frames = compute_frames(&c).unwrap();
        frames.iter().for_each(assert_orthonormal);
        // A regular helix has the same angle between every second tangent.
        let dots: Vec<f64> = frames.windows(3).map(|w| w[0].t.dot(&w[2].t)).collect();
        for d in &dots {
            assert!((d - dots[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn helix_angles_recovered() {
        let n = 12;
        let p = AngleProfile::from_site_angles(vec![FRAC_PI_2; n], &vec![1.0; n], 3.8).unwrap();
        let back = compute_angles(&reconstruct(&p).unwrap()).unwrap();
        for k in &back.kappa {
            assert!((k - FRAC_PI_2).abs() < 1e-12);
        }
        for t in &back.tau {
            assert!((t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn regular_helix_has_constant_geometry() {
        let n = 30;
        let p = AngleProfile::from_site_angles(vec![FRAC_PI_2; n], &vec![1.0; n], 3.8).unwrap();
        let v = reconstruct(&p).unwrap().vertices;
        // constant i -> i+2 and i -> i+3 distances along a regular helix
        let d2 = (v[2] - v[0]).norm();
        let d3 = (v[3] - v[0]).norm();
        for i in 0..v.len() - 3 {
            assert!(((v[i + 2] - v[i]).norm() - d2).abs() < 1e-10);
            assert!(((v[i + 3] - v[i]).norm() - d3).abs() < 1e-10);
        }
    }
}
