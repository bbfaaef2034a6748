//! Scalar abstraction over `f64` and `Complex64`.

use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Tag stored in tensor files and used to reject mixed-kind inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    Real,
    Complex,
}

impl ScalarKind {
    pub fn code(self) -> u8 {
        match self {
            ScalarKind::Real => 0,
            ScalarKind::Complex => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ScalarKind::Real),
            1 => Some(ScalarKind::Complex),
            _ => None,
        }
    }
}

pub trait Scalar:
    ComplexField<RealField = f64> + Copy + Default + Send + Sync + std::fmt::Debug + 'static
{
    const KIND: ScalarKind;
    /// Number of f64 words per scalar in serialized form.
    const WORDS: usize;

    /// Build from real and imaginary parts. The imaginary part is dropped for reals.
    fn from_parts(re: f64, im: f64) -> Self;

    /// Unit-variance Gaussian sample (circular for complex).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gaussian sample with independent N(0,1) real and imaginary parts.
    fn gaussian_parts<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn re(self) -> f64;
    fn im(self) -> f64;
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Real;
    const WORDS: usize = 1;

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn gaussian_parts<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn re(self) -> f64 {
        self
    }

    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex64 {
    const KIND: ScalarKind = ScalarKind::Complex;
    const WORDS: usize = 2;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn gaussian_parts<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    }

    fn re(self) -> f64 {
        self.re
    }

    fn im(self) -> f64 {
        self.im
    }
}
