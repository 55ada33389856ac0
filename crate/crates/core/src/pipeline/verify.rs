use num_rational::BigRational;

use super::dataset::Dataset;
use crate::error::Result;
use crate::exactnum::Dyadic;
use crate::netir::LayeredNet;
use crate::par;

/// Checked exact forward pass; dyadic inputs take the fast path.
pub fn eval_point(net: &LayeredNet, x: &[BigRational]) -> Result<Vec<BigRational>> {
    let dy: Option<Vec<Dyadic>> = x.iter().map(Dyadic::from_rational).collect();
    match dy {
        Some(d) => Ok(net.eval_checked(&d)?.iter().map(Dyadic::to_rational).collect()),
        None => net.eval_checked(x),
    }
}

/// Every layer's output for one input, as exact rationals.
pub fn eval_point_trace(net: &LayeredNet, x: &[BigRational]) -> Result<Vec<Vec<BigRational>>> {
    let dy: Option<Vec<Dyadic>> = x.iter().map(Dyadic::from_rational).collect();
    match dy {
        Some(d) => Ok(net
            .eval_trace(&d)?
            .iter()
            .map(|l| l.iter().map(Dyadic::to_rational).collect())
            .collect()),
        None => net.eval_trace(x),
    }
}

pub fn eval_dataset(net: &LayeredNet, ds: &Dataset) -> Vec<Result<Vec<BigRational>>> {
    par::map(ds.points(), |x| eval_point(net, x))
}

/// IEEE double forward pass over the dataset (inputs rounded to the nearest double).
pub fn eval_dataset_float(net: &LayeredNet, ds: &Dataset) -> Vec<Result<Vec<f64>>> {
    par::map(ds.points(), |x| {
        let xf: Vec<f64> = x
            .iter()
            .map(|v| num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN))
            .collect();
        net.eval_float(&xf)
    })
}
