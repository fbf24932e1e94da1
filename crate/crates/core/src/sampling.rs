//! Seeded generators for automorphisms of the model domains.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{self, cr, CMat};
use crate::projective::ProjectiveMap;

/// The boost `[[cosh t, sinh t], [sinh t, cosh t]]` in the `(z_0, z_1)` plane.
pub fn ball_boost(dim: usize, t: f64) -> ProjectiveMap {
    let mut m = CMat::identity(dim + 1, dim + 1);
    m[(0, 0)] = cr(t.cosh());
    m[(1, 1)] = cr(t.cosh());
    m[(0, 1)] = cr(t.sinh());
    m[(1, 0)] = cr(t.sinh());
    ProjectiveMap::new(m).expect("boost is invertible")
}

/// `diag(1, U)` with `U` Haar-random in `U(d)`.
pub fn random_ball_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    linalg::embed_block(dim + 1, 1, &linalg::random_unitary(dim, rng))
}

/// `K_1 a_t K_2` with `t` uniform in `[0, max_t]`, an element of `U(1, d)`.
pub fn random_ball_automorphism<R: Rng + ?Sized>(dim: usize, max_t: f64, rng: &mut R) -> ProjectiveMap {
    let t = rng.random::<f64>() * max_t;
    let k1 = random_ball_rotation(dim, rng);
    let k2 = random_ball_rotation(dim, rng);
    ProjectiveMap::new(k1 * ball_boost(dim, t).matrix() * k2).expect("product of invertibles")
}

/// A bi-proximal ball automorphism `g a_t g^{-1}` with `t` in `[min_t, max_t]`.
pub fn random_biproximal_ball_map<R: Rng + ?Sized>(dim: usize, min_t: f64, max_t: f64, rng: &mut R) -> ProjectiveMap {
    let t = min_t + rng.random::<f64>() * (max_t - min_t);
    let g = random_ball_automorphism(dim, 1.0, rng);
    // Elliptic part commuting with the boost.
    let mut k = CMat::identity(dim + 1, dim + 1);
    if dim > 1 {
        k.view_mut((2, 2), (dim - 1, dim - 1)).copy_from(&linalg::random_unitary(dim - 1, rng));
    }
    let core = ProjectiveMap::new(ball_boost(dim, t).matrix() * k).expect("invertible");
    core.conjugate_by(&g)
}

/// Disk automorphism acting on the planar chart `[z : 1]`: the ball(1)
/// automorphism with its two coordinates swapped.
pub fn disk_automorphism_planar(ball_map: &ProjectiveMap) -> ProjectiveMap {
    let m = ball_map.matrix();
    let swapped = CMat::from_row_slice(2, 2, &[m[(1, 1)], m[(1, 0)], m[(0, 1)], m[(0, 0)]]);
    ProjectiveMap::new(swapped).expect("invertible")
}

/// Random invertible matrix with condition number below `max_cond`.
pub fn random_well_conditioned<R: Rng + ?Sized>(n: usize, max_cond: f64, rng: &mut R) -> CMat {
    loop {
        let m = linalg::random_complex_matrix(n, n, rng) + CMat::identity(n, n) * cr(1.5);
        let sv = linalg::singular_values(&m);
        if sv[0] / sv[n - 1] < max_cond {
            return m;
        }
    }
}

/// Uniform point in the disk of radius `r`.
pub fn random_in_disk<R: Rng + ?Sized>(r: f64, rng: &mut R) -> Complex64 {
    let rad = r * rng.random::<f64>().sqrt();
    Complex64::from_polar(rad, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Uniform point in the ball of radius `r` in `C^d`.
pub fn random_in_ball<R: Rng + ?Sized>(dim: usize, r: f64, rng: &mut R) -> Vec<Complex64> {
    let v = linalg::random_complex_vector(dim, rng);
    let rad = r * rng.random::<f64>().powf(1.0 / (2 * dim) as f64);
    v.iter().map(|z| z * (rad / v.norm())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BallDomain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn automorphisms_preserve_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = BallDomain::new(3).unwrap().form_matrix();
        for _ in 0..10 {
            let phi = random_ball_automorphism(3, 2.0, &mut rng);
            let m = phi.matrix();
            let lhs = m.adjoint() * &j * m;
            let scale = lhs[(0, 0)];
            assert!((lhs - &j * scale).norm() < 1e-9 * scale.norm());
        }
    }
}
