//! Core library: Lie-group primitives for the split real families, graded
//! nilpotent (Carnot) arithmetic, the warped product metric on the
//! associated homogeneous space, horospherical net windows with their
//! translation-like lattice actions, and the coarse-geometry toolkit used
//! to study them at desk scale.

pub mod carnot;
pub mod coarse;
pub mod error;
pub mod interval;
pub mod lie;
pub mod net;
pub mod pathopt;
pub mod quotient;
pub mod symspace;

pub use error::{Error, Result};
pub use interval::DistanceEstimate;

#[cfg(test)]
pub(crate) mod testutil {
    use crate::lie::{exp_matrix, AlgebraElement, GroupElement, MatrixFamily};
    use nalgebra::DMatrix;

    /// Small deterministic xorshift generator for unit tests.
    pub struct Rng(u64);

    impl Rng {
        pub fn new(seed: u64) -> Self {
            Rng(seed.max(1))
        }

        pub fn next_u64(&mut self) -> u64 {
            let mut x = self.0;
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            self.0 = x;
            x
        }

        pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
            let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            lo + u * (hi - lo)
        }
    }

    pub fn random_traceless(tag: MatrixFamily, rng: &mut Rng) -> AlgebraElement {
        let n = tag.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.uniform(-2.0, 2.0);
            }
        }
        let tr = m.trace() / n as f64;
        for i in 0..n {
            m[(i, i)] -= tr;
        }
        AlgebraElement::new(tag, m).expect("constructed traceless")
    }

    /// Random determinant-one matrix: exp of a random traceless element,
    /// well-conditioned with overwhelming probability.
    pub fn random_group(tag: MatrixFamily, rng: &mut Rng) -> GroupElement {
        let x = random_traceless(tag, rng);
        exp_matrix(&x.scale(0.5))
    }
}
