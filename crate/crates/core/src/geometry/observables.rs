use super::{CalphaChain, GeometryError, Vec3};
use nalgebra::Matrix3;

/// Optimal rigid motion taking `mobile` onto `target`: `x ↦ rotation · (x - mobile_centroid) + target_centroid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superposition {
    pub rotation: Matrix3<f64>,
    pub mobile_centroid: Vec3,
    pub target_centroid: Vec3,
    pub rmsd: f64,
}

impl Superposition {
    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * (x - self.mobile_centroid) + self.target_centroid
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Kabsch least-squares superposition of `mobile` onto `target`.
pub fn kabsch(mobile: &[Vec3], target: &[Vec3]) -> Result<Superposition, GeometryError> {
    if mobile.len() != target.len() {
        return Err(GeometryError::LengthMismatch(mobile.len(), target.len()));
    }
    if mobile.is_empty() {
        return Ok(Superposition {
            rotation: Matrix3::identity(),
            mobile_centroid: Vec3::zeros(),
            target_centroid: Vec3::zeros(),
            rmsd: 0.0,
        });
    }
    let cm = centroid(mobile);
    let ct = centroid(target);
    let mut cov = Matrix3::zeros();
    for (p, q) in mobile.iter().zip(target) {
        cov += (p - cm) * (q - ct).transpose();
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let rotation = v * correction * u.transpose();
    let sum_sq: f64 = mobile
        .iter()
        .zip(target)
        .map(|(p, q)| (rotation * (p - cm) - (q - ct)).norm_squared())
        .sum();
    Ok(Superposition {
        rotation,
        mobile_centroid: cm,
        target_centroid: ct,
        rmsd: (sum_sq / mobile.len() as f64).sqrt(),
    })
}

/// Root-mean-square deviation after optimal rigid superposition, Å.
pub fn rmsd(a: &CalphaChain, b: &CalphaChain) -> Result<f64, GeometryError> {
    Ok(kabsch(&a.vertices, &b.vertices)?.rmsd)
}

/// `sqrt((1 / 2N²) Σ_ij |r_i - r_j|²)`, evaluated as the RMS distance from the
/// centroid (the two are identical). Zero for an empty chain.
pub fn radius_of_gyration(chain: &CalphaChain) -> f64 {
    radius_of_gyration_of(&chain.vertices)
}

pub(crate) fn radius_of_gyration_of(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let c = centroid(points);
    (points.iter().map(|p| (p - c).norm_squared()).sum::<f64>() / points.len() as f64).sqrt()
}
