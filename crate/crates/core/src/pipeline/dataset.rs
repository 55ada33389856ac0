use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{format_rational, parse_rational, Dyadic};

/// Labeled points with exact separation metadata.
///
/// Labels are exact rationals. Classification datasets carry `classes = Some(C)`
/// and every label is an integer in `1..=C`; regression datasets carry `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<BigRational>>,
    labels: Vec<BigRational>,
    classes: Option<u64>,
    /// Minimum squared pairwise distance; `None` when there is no pair.
    delta_sq: Option<BigRational>,
    r_sq: BigRational,
}

fn sq_dist(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| {
        let t = x - y;
        acc + &t * &t
    })
}

impl Dataset {
    pub fn load_and_validate(
        points: Vec<Vec<BigRational>>,
        labels: Vec<BigRational>,
        classes: Option<u64>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("dataset has no points".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                got: labels.len(),
            });
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::Parameter("points have dimension 0".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: p.len(),
            });
        }
        if let Some(c) = classes {
            for (row, y) in labels.iter().enumerate() {
                let ok = y.is_integer() && *y >= BigRational::one() && *y <= BigRational::from_integer(c.into());
                if !ok {
                    return Err(Error::LabelRange {
                        row,
                        label: format_rational(y),
                        classes: c,
                    });
                }
            }
        }
        let n = points.len();
        let rows: Vec<Option<(usize, BigRational)>> = crate::par::map_range(n, |i| {
            let mut best: Option<(usize, BigRational)> = None;
            for j in (i + 1)..n {
                let s = sq_dist(&points[i], &points[j]);
                if best.as_ref().is_none_or(|(_, b)| s < *b) {
                    best = Some((j, s));
                }
            }
            best
        });
        let mut delta_sq: Option<BigRational> = None;
        for (i, r) in rows.into_iter().enumerate() {
            if let Some((j, s)) = r {
                if s.is_zero() {
                    return Err(Error::DuplicatePoint(i, j));
                }
                if delta_sq.as_ref().is_none_or(|b| s < *b) {
                    delta_sq = Some(s);
                }
            }
        }
        let zero = vec![BigRational::zero(); d];
        let r_sq = points
            .iter()
            .map(|p| sq_dist(p, &zero))
            .max()
            .expect("nonempty");
        Ok(Dataset {
            points,
            labels,
            classes,
            delta_sq,
            r_sq,
        })
    }

    /// Integer-label convenience constructor.
    pub fn from_classes(points: Vec<Vec<BigRational>>, labels: &[u64], classes: u64) -> Result<Self> {
        let labels = labels.iter().map(|&y| BigRational::from_integer(y.into())).collect();
        Self::load_and_validate(points, labels, Some(classes))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<BigRational>] {
        &self.points
    }

    pub fn labels(&self) -> &[BigRational] {
        &self.labels
    }

    pub fn classes(&self) -> Option<u64> {
        self.classes
    }

    pub fn delta_sq(&self) -> Option<&BigRational> {
        self.delta_sq.as_ref()
    }

    pub fn r_sq(&self) -> &BigRational {
        &self.r_sq
    }

    /// Labels as integers; fails on a regression dataset.
    pub fn class_labels(&self) -> Result<Vec<u64>> {
        if self.classes.is_none() {
            return Err(Error::Parameter("dataset has real-valued labels".into()));
        }
        Ok(self
            .labels
            .iter()
            .map(|y| y.to_integer().to_u64().expect("validated label"))
            .collect())
    }

    /// Same points and labels, reinterpreted with a class count.
    pub fn with_classes(&self, classes: Option<u64>) -> Result<Self> {
        Self::load_and_validate(self.points.clone(), self.labels.clone(), classes)
    }

    /// Points as dyadics when every coordinate is dyadic.
    pub fn dyadic_points(&self) -> Option<Vec<Vec<Dyadic>>> {
        self.points
            .iter()
            .map(|p| p.iter().map(Dyadic::from_rational).collect())
            .collect()
    }

    /// Largest label when every label is a positive integer.
    pub fn infer_classes(labels: &[BigRational]) -> Result<u64> {
        let mut c = 0u64;
        for (row, y) in labels.iter().enumerate() {
            let v = if y.is_integer() && y.is_positive() {
                y.to_integer().to_u64()
            } else {
                None
            };
            match v {
                Some(v) => c = c.max(v),
                None => {
                    return Err(Error::LabelRange {
                        row,
                        label: format_rational(y),
                        classes: c,
                    })
                }
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path, classes: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
            || text.trim_start().starts_with('{');
        let (points, labels) = if is_json {
            parse_json(&text)?
        } else {
            parse_csv(&text)?
        };
        Self::load_and_validate(points, labels, classes)
    }

    /// Loads a file and, for classification, infers `C` as the largest label.
    pub fn load_inferring(path: &Path, regression: bool) -> Result<Self> {
        let ds = Self::load(path, None)?;
        if regression {
            return Ok(ds);
        }
        let c = Self::infer_classes(&ds.labels)?;
        Ok(Dataset {
            classes: Some(c),
            ..ds
        })
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
        out.push_str(",label\n");
        for (p, y) in self.points.iter().zip(&self.labels) {
            for v in p {
                out.push_str(&format_rational(v));
                out.push(',');
            }
            out.push_str(&format_rational(y));
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    points: Vec<Vec<String>>,
    labels: Vec<String>,
}

fn parse_json(text: &str) -> Result<(Vec<Vec<BigRational>>, Vec<BigRational>)> {
    let f: DatasetFile = serde_json::from_str(text)?;
    let points = f
        .points
        .iter()
        .map(|p| p.iter().map(|s| parse_rational(s)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let labels = f.labels.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
    Ok((points, labels))
}

/// CSV with a header row `x1,...,xd,label`; the last column is the label.
fn parse_csv(text: &str) -> Result<(Vec<Vec<BigRational>>, Vec<BigRational>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[headers.len() - 1] != "label" {
        return Err(Error::Parse("CSV header must be x1,...,xd,label".into()));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let mut vals = rec.iter().map(parse_rational).collect::<Result<Vec<_>>>()?;
        let y = vals.pop().expect("nonempty record");
        points.push(vals);
        labels.push(y);
    }
    Ok((points, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn two_points_on_a_line() {
        let ds = Dataset::from_classes(vec![vec![q(0)], vec![q(3)]], &[1, 2], 2).unwrap();
        assert_eq!(ds.delta_sq(), Some(&q(9)));
        assert_eq!(ds.r_sq(), &q(9));
    }

    #[test]
    fn single_point_has_no_separation() {
        let ds = Dataset::from_classes(vec![vec![q(5)]], &[1], 1).unwrap();
        assert_eq!(ds.delta_sq(), None);
        assert_eq!(ds.r_sq(), &q(25));
    }

    #[test]
    fn unit_square_corners() {
        let pts = vec![vec![q(0), q(0)], vec![q(1), q(0)], vec![q(0), q(1)], vec![q(1), q(1)]];
        let ds = Dataset::from_classes(pts, &[1, 2, 1, 2], 2).unwrap();
        assert_eq!(ds.delta_sq(), Some(&q(1)));
        assert_eq!(ds.r_sq(), &q(2));
    }

    #[test]
    fn duplicates_and_bad_labels_are_rejected() {
        let pts = vec![vec![q(1)], vec![q(2)], vec![q(1)]];
        assert_eq!(
            Dataset::from_classes(pts, &[1, 1, 1], 1),
            Err(Error::DuplicatePoint(0, 2))
        );
        let pts = vec![vec![q(1)], vec![q(2)]];
        assert!(matches!(
            Dataset::from_classes(pts, &[1, 3], 2),
            Err(Error::LabelRange { row: 1, .. })
        ));
    }

    #[test]
    fn csv_and_json_parse_exact_decimals() {
        let (p, l) = parse_csv("x1,x2,label\n0.1,-2,1\n3/7,4.25,2\n").unwrap();
        assert_eq!(p[0][0], BigRational::new(1.into(), 10.into()));
        assert_eq!(p[1][0], BigRational::new(3.into(), 7.into()));
        assert_eq!(l, vec![q(1), q(2)]);
        let (p2, l2) = parse_json(r#"{"points":[["0.1","-2"],["3/7","4.25"]],"labels":["1","2"]}"#).unwrap();
        assert_eq!((p2, l2), (p, l));
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![
            vec![BigRational::new(1.into(), 3.into()), q(2)],
            vec![BigRational::new((-5).into(), 4.into()), q(0)],
        ];
        let ds = Dataset::from_classes(pts, &[2, 1], 2).unwrap();
        let (p, l) = parse_csv(&ds.to_csv()).unwrap();
        assert_eq!(Dataset::load_and_validate(p, l, Some(2)).unwrap(), ds);
    }
}
