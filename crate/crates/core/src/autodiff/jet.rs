//! Second-order jets in one spatial variable.
//!
//! A [`Jet2`] carries a value together with its first and second derivative
//! with respect to `x`. Arithmetic on jets applies the product and chain rules,
//! so evaluating any smooth expression on the identity jet `(x, 1, 0)` yields
//! `(f(x), f'(x), f''(x))` exactly up to rounding.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Scalar type a jet can be built over: plain `f64`, or a tape variable when
/// parameter gradients are needed.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn constant(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;

    fn scale(self, s: f64) -> Self {
        self * self.constant(s)
    }
}

impl Scalar for f64 {
    fn constant(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Hidden-layer nonlinearity. `Identity` exists for tests and for composing
/// affine maps; network hidden layers use one of the other three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sin,
    Cos,
    Tanh,
    Identity,
}

impl Activation {
    pub const HIDDEN: [Activation; 3] = [Activation::Sin, Activation::Cos, Activation::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sin => "sin",
            Activation::Cos => "cos",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    /// `[σ, σ', σ'', σ''']` at `z`.
    #[inline]
    pub fn derivatives(self, z: f64) -> [f64; 4] {
        match self {
            Activation::Sin => {
                let (s, c) = z.sin_cos();
                [s, c, -s, -c]
            }
            Activation::Cos => {
                let (s, c) = z.sin_cos();
                [c, -s, -c, s]
            }
            Activation::Tanh => {
                let t = z.tanh();
                let d1 = 1.0 - t * t;
                let d2 = -2.0 * t * d1;
                let d3 = d1 * (4.0 * t * t - 2.0 * d1);
                [t, d1, d2, d3]
            }
            Activation::Identity => [z, 1.0, 0.0, 0.0],
        }
    }

    /// `[σ, σ', σ'']` at `z`, built from scalar operations so it works for
    /// any [`Scalar`].
    fn scalar_derivatives<T: Scalar>(self, z: T) -> [T; 3] {
        match self {
            Activation::Sin => {
                let (s, c) = (z.sin(), z.cos());
                [s, c, -s]
            }
            Activation::Cos => {
                let (s, c) = (z.sin(), z.cos());
                [c, -s, -c]
            }
            Activation::Tanh => {
                let t = z.tanh();
                let one = z.constant(1.0);
                let d1 = one - t * t;
                let d2 = (t * d1).scale(-2.0);
                [t, d1, d2]
            }
            Activation::Identity => [z, z.constant(1.0), z.constant(0.0)],
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sin" => Ok(Activation::Sin),
            "cos" => Ok(Activation::Cos),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// Value with first and second derivative with respect to `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<T = f64> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T> Jet2<T> {
    pub const fn new(value: T, d1: T, d2: T) -> Self {
        Self { value, d1, d2 }
    }
}

impl Jet2<f64> {
    pub const ZERO: Jet2 = Jet2::new(0.0, 0.0, 0.0);

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// Seed for the independent variable.
    pub const fn identity(x: f64) -> Self {
        Self::new(x, 1.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.value, self.d1, self.d2]
    }
}

impl<T: Scalar> Jet2<T> {
    pub fn lift(c: T) -> Self {
        let zero = c.constant(0.0);
        Self::new(c, zero, zero)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.value.scale(s), self.d1.scale(s), self.d2.scale(s))
    }

    pub fn activate(self, activation: Activation) -> Self {
        let [s0, s1, s2] = activation.scalar_derivatives(self.value);
        Self::new(s0, s1 * self.d1, s2 * self.d1 * self.d1 + s1 * self.d2)
    }
}

impl<T: Scalar> Add for Jet2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.d1 + rhs.d1, self.d2 + rhs.d2)
    }
}

impl<T: Scalar> Sub for Jet2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.d1 - rhs.d1, self.d2 - rhs.d2)
    }
}

impl<T: Scalar> Neg for Jet2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.d1, -self.d2)
    }
}

impl<T: Scalar> Mul for Jet2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let cross = self.d1 * rhs.d1;
        Self::new(
            self.value * rhs.value,
            self.d1 * rhs.value + self.value * rhs.d1,
            self.d2 * rhs.value + cross + cross + self.value * rhs.d2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
}

pub fn jet_compose<T: Scalar>(a: Jet2<T>, b: Jet2<T>, op: JetOp) -> Jet2<T> {
    match op {
        JetOp::Add => a + b,
        JetOp::Sub => a - b,
        JetOp::Mul => a * b,
    }
}

pub fn jet_activation<T: Scalar>(a: Jet2<T>, activation: Activation) -> Jet2<T> {
    a.activate(activation)
}
