//! The real scalar type underlying all matrix entries: `f32` or `f64`.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar the whole crate is generic over.
///
/// Everything numeric in this crate works with `Complex<T>` entries for any
/// `T: Scalar`. The crate root exports `f64` aliases; `f64` is what the JSON
/// interchange format and the CLI use.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal distribution N(0, 1).
    ///
    /// All implementations consume exactly two `f64` draws from `rng`, so
    /// seeded streams stay aligned across scalar types.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Convert an `f64` constant (tolerances, closed-form coefficients).
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Convert a dimension or sample count.
    fn from_dim(n: usize) -> Self {
        Self::from_usize(n).expect("dimension representable in scalar type")
    }
}

// Box-Muller in f64; the (0,1] shift keeps the logarithm finite.
fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        box_muller(rng).0
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        box_muller(rng).0 as f32
    }
}

/// One draw from the standard complex normal distribution (E|z|^2 = 1).
pub fn complex_standard_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let (re, im) = box_muller(rng);
    // Both quadrature components get variance 1/2.
    Complex::new(
        T::real(re * std::f64::consts::FRAC_1_SQRT_2),
        T::real(im * std::f64::consts::FRAC_1_SQRT_2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normal_moments_roughly_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let x = f64::standard_normal(&mut rng);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn complex_normal_unit_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mut sumsq = 0.0f64;
        for _ in 0..n {
            let z: Complex<f64> = complex_standard_normal(&mut rng);
            sumsq += z.norm_sqr();
        }
        let second = sumsq / n as f64;
        assert!((second - 1.0).abs() < 0.02, "E|z|^2 = {second}");
    }

    #[test]
    fn f32_stream_matches_f64_stream() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = f64::standard_normal(&mut a);
            let y = f32::standard_normal(&mut b);
            assert_eq!(x as f32, y);
        }
    }
}
