use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use super::{AffineLayer, LayeredNet};
use crate::error::Result;
use crate::exactnum::Dyadic;

/// An affine expression over the current layer's outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lin {
    terms: BTreeMap<usize, Dyadic>,
    bias: Dyadic,
}

impl Lin {
    pub fn var(i: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(i, Dyadic::one());
        Lin {
            terms,
            bias: Dyadic::zero(),
        }
    }

    pub fn constant(c: Dyadic) -> Self {
        Lin {
            terms: BTreeMap::new(),
            bias: c,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scaled(&self, k: &Dyadic) -> Lin {
        if k.is_zero() {
            return Lin::zero();
        }
        Lin {
            terms: self.terms.iter().map(|(&i, w)| (i, w * k)).collect(),
            bias: &self.bias * k,
        }
    }

    pub fn offset(&self, c: &Dyadic) -> Lin {
        Lin {
            terms: self.terms.clone(),
            bias: &self.bias + c,
        }
    }

    fn combine(&self, other: &Lin, sign: i64) -> Lin {
        let mut terms = self.terms.clone();
        for (&i, w) in &other.terms {
            let w = if sign < 0 { -w } else { w.clone() };
            let e = terms.entry(i).or_insert_with(Dyadic::zero);
            *e = &*e + &w;
        }
        terms.retain(|_, w| !w.is_zero());
        let bias = if sign < 0 {
            &self.bias - &other.bias
        } else {
            &self.bias + &other.bias
        };
        Lin { terms, bias }
    }

    fn row(&self) -> (Vec<(usize, Dyadic)>, Dyadic) {
        (
            self.terms.iter().map(|(&i, w)| (i, w.clone())).collect(),
            self.bias.clone(),
        )
    }
}

impl Add<&Lin> for &Lin {
    type Output = Lin;
    fn add(self, rhs: &Lin) -> Lin {
        self.combine(rhs, 1)
    }
}

impl Sub<&Lin> for &Lin {
    type Output = Lin;
    fn sub(self, rhs: &Lin) -> Lin {
        self.combine(rhs, -1)
    }
}

/// The units of one hidden layer under construction.
#[derive(Default)]
pub struct Plan {
    units: Vec<(Lin, bool)>,
}

impl Plan {
    pub fn new() -> Self {
        Self::default()
    }

    /// A genuine ReLU unit `σ(lin)`; returns its slot.
    pub fn relu(&mut self, lin: Lin) -> usize {
        self.units.push((lin, false));
        self.units.len() - 1
    }

    /// A pass-through unit: `lin` is asserted nonnegative, so `σ(lin) = lin`.
    pub fn pass(&mut self, lin: Lin) -> usize {
        self.units.push((lin, true));
        self.units.len() - 1
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// Appends ReLU layers one [`Plan`] at a time and closes with an affine layer.
pub struct NetBuilder {
    input_dim: usize,
    cur_dim: usize,
    layers: Vec<AffineLayer>,
}

impl NetBuilder {
    pub fn new(input_dim: usize) -> Self {
        NetBuilder {
            input_dim,
            cur_dim: input_dim,
            layers: Vec::new(),
        }
    }

    pub fn input(&self, i: usize) -> Lin {
        assert!(self.layers.is_empty() && i < self.input_dim);
        Lin::var(i)
    }

    /// Commits a ReLU layer; returns one expression per slot, referring to the new outputs.
    pub fn layer(&mut self, plan: Plan) -> Result<Vec<Lin>> {
        let n = plan.units.len();
        let mut rows = Vec::with_capacity(n);
        let mut bias = Vec::with_capacity(n);
        let mut pass = Vec::new();
        for (i, (lin, is_pass)) in plan.units.into_iter().enumerate() {
            let (r, b) = lin.row();
            rows.push(r);
            bias.push(b);
            if is_pass {
                pass.push(i);
            }
        }
        let layer = AffineLayer::new(self.cur_dim, rows, bias, true)?.with_pass(pass);
        self.layers.push(layer);
        self.cur_dim = n;
        Ok((0..n).map(Lin::var).collect())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn finish(mut self, outputs: &[Lin], provenance: &str) -> Result<LayeredNet> {
        let (rows, bias): (Vec<_>, Vec<_>) = outputs.iter().map(Lin::row).unzip();
        self.layers
            .push(AffineLayer::new(self.cur_dim, rows, bias, false)?);
        LayeredNet::new(self.input_dim, self.layers, provenance)
    }
}
