use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{AffineLayer, LayeredNet};
use crate::error::{Error, Result};
use crate::exactnum::{format_rational, Dyadic};
use crate::par;

/// A value type the forward pass can run over.
pub trait Scalar: Clone + Send + Sync {
    fn zero() -> Self;
    fn from_dyadic(d: &Dyadic) -> Self;
    /// `bias + Σ w·x` over the given sparse row.
    fn affine(row: &[(usize, Dyadic)], bias: &Dyadic, input: &[Self]) -> Self;
    fn is_negative(&self) -> bool;
    fn render(&self) -> String;
}

impl Scalar for Dyadic {
    fn zero() -> Self {
        Dyadic::zero()
    }

    fn from_dyadic(d: &Dyadic) -> Self {
        d.clone()
    }

    fn affine(row: &[(usize, Dyadic)], bias: &Dyadic, input: &[Self]) -> Self {
        // align every product to the smallest exponent and add once
        let mut terms: Vec<(&BigInt, &BigInt, i64)> = Vec::with_capacity(row.len() + 1);
        for (col, w) in row {
            let x = &input[*col];
            if !x.is_zero() {
                terms.push((w.signed_mantissa(), x.signed_mantissa(), w.exponent() + x.exponent()));
            }
        }
        if terms.is_empty() {
            return bias.clone();
        }
        let mut e_min = terms.iter().map(|t| t.2).min().unwrap();
        if !bias.is_zero() {
            e_min = e_min.min(bias.exponent());
        }
        let mut acc = BigInt::zero();
        for (a, b, e) in terms {
            acc += (a * b) << (e - e_min) as u64;
        }
        if !bias.is_zero() {
            acc += bias.signed_mantissa() << (bias.exponent() - e_min) as u64;
        }
        Dyadic::new(acc, e_min)
    }

    fn is_negative(&self) -> bool {
        Dyadic::is_negative(self)
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_dyadic(d: &Dyadic) -> Self {
        d.to_rational()
    }

    fn affine(row: &[(usize, Dyadic)], bias: &Dyadic, input: &[Self]) -> Self {
        let mut acc = bias.to_rational();
        for (col, w) in row {
            let x = &input[*col];
            if !x.is_zero() {
                acc += w.to_rational() * x;
            }
        }
        acc
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn render(&self) -> String {
        format_rational(self)
    }
}

/// IEEE double evaluation: every weight is rounded to `f64` and every
/// multiply-add rounds.
impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_dyadic(d: &Dyadic) -> Self {
        d.to_f64()
    }

    fn affine(row: &[(usize, Dyadic)], bias: &Dyadic, input: &[Self]) -> Self {
        let mut acc = bias.to_f64();
        for (col, w) in row {
            acc += w.to_f64() * input[*col];
        }
        acc
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }

    fn render(&self) -> String {
        format!("{self:e}")
    }
}

impl AffineLayer {
    fn pre_activation<T: Scalar>(&self, input: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| T::affine(row, b, input))
            .collect()
    }

    fn forward<T: Scalar>(&self, input: &[T], layer_idx: usize, check: bool) -> Result<Vec<T>> {
        let mut z = self.pre_activation(input);
        if check {
            for &u in &self.pass {
                if z[u].is_negative() {
                    return Err(Error::ContractViolation {
                        layer: layer_idx,
                        unit: u,
                        value: z[u].render(),
                    });
                }
            }
        }
        if self.relu {
            for v in z.iter_mut() {
                if v.is_negative() {
                    *v = T::zero();
                }
            }
        }
        Ok(z)
    }
}

impl LayeredNet {
    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got,
            });
        }
        Ok(())
    }

    /// Forward pass over any [`Scalar`]; no contract checks.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x.len())?;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h, i, false)?;
        }
        Ok(h)
    }

    /// Forward pass that also verifies every pass-through unit stays nonnegative.
    pub fn eval_checked<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x.len())?;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h, i, true)?;
        }
        Ok(h)
    }

    /// Post-activation outputs of every layer (index `i` is layer `i`'s output).
    pub fn eval_trace<T: Scalar>(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_dim(x.len())?;
        let mut out = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h, i, true)?;
            out.push(h.clone());
        }
        Ok(out)
    }

    pub fn eval_exact(&self, x: &[Dyadic]) -> Result<Vec<Dyadic>> {
        self.eval(x)
    }

    pub fn eval_rational(&self, x: &[BigRational]) -> Result<Vec<BigRational>> {
        self.eval(x)
    }

    pub fn eval_float(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x)
    }

    /// Evaluates many inputs concurrently (see [`crate::par`]).
    pub fn eval_batch<T: Scalar>(&self, xs: &[Vec<T>]) -> Vec<Result<Vec<T>>> {
        par::map(xs, |x| self.eval(x))
    }
}
