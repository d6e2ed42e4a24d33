use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noiseless observations `Z_i = f(X_i)` on a box domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    responses: Vec<f64>,
    domain: Vec<(f64, f64)>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, responses: Vec<f64>, domain: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::LengthMismatch { left: points.len(), right: responses.len() });
        }
        if points.len() < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 points, got {}", points.len())));
        }
        let d = domain.len();
        if d == 0 {
            return Err(Error::InvalidDataset("empty domain".into()));
        }
        if let Some(&(lo, hi)) = domain.iter().find(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidDataset(format!("bad domain bounds [{lo}, {hi}]")));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            let inside = p.iter().zip(&domain).all(|(x, (lo, hi))| x >= lo && x <= hi);
            if !inside {
                return Err(Error::InvalidDataset(format!("point {i} lies outside the domain")));
            }
        }
        if let Some(bad) = responses.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidDataset(format!("response {bad} is not finite")));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidDataset(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { points, responses, domain })
    }

    /// Builds a dataset whose domain is the bounding box of the points.
    pub fn from_points(points: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        let mut domain = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for p in &points {
            for (b, &x) in domain.iter_mut().zip(p) {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
            }
        }
        Self::new(points, responses, domain)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    /// Width of the domain along each axis, falling back to the data spread
    /// for degenerate boxes.
    pub fn ranges(&self) -> Vec<f64> {
        self.domain
            .iter()
            .enumerate()
            .map(|(j, (lo, hi))| {
                let w = hi - lo;
                if w > 0.0 {
                    w
                } else {
                    let (a, b) = self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                        (a.min(p[j]), b.max(p[j]))
                    });
                    (b - a).max(1.0)
                }
            })
            .collect()
    }

    /// Copy without observation `i`.
    pub fn without(&self, i: usize) -> Result<Self> {
        let mut points = self.points.clone();
        let mut responses = self.responses.clone();
        points.remove(i);
        responses.remove(i);
        Self::new(points, responses, self.domain.clone())
    }

    /// Copy with the rows reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let points = perm.iter().map(|&i| self.points[i].clone()).collect();
        let responses = perm.iter().map(|&i| self.responses[i]).collect();
        Self::new(points, responses, self.domain.clone())
    }

    /// Splits rows into `(first, second)` by index list.
    pub fn split(&self, first: &[usize]) -> Result<(Self, Self)> {
        let mut in_first = vec![false; self.len()];
        for &i in first {
            in_first[i] = true;
        }
        let pick = |flag: bool| {
            let idx: Vec<usize> = (0..self.len()).filter(|&i| in_first[i] == flag).collect();
            Self::new(
                idx.iter().map(|&i| self.points[i].clone()).collect(),
                idx.iter().map(|&i| self.responses[i]).collect(),
                self.domain.clone(),
            )
        };
        Ok((pick(true)?, pick(false)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_invariants() {
        let dom = vec![(0.0, 1.0)];
        assert!(Dataset::new(vec![vec![0.1]], vec![1.0], dom.clone()).is_err());
        assert!(Dataset::new(vec![vec![0.1], vec![0.1]], vec![1.0, 2.0], dom.clone()).is_err());
        assert!(Dataset::new(vec![vec![0.1], vec![1.5]], vec![1.0, 2.0], dom.clone()).is_err());
        assert!(Dataset::new(vec![vec![0.1], vec![0.5]], vec![1.0], dom.clone()).is_err());
        assert!(Dataset::new(vec![vec![0.1], vec![0.5]], vec![1.0, 2.0], dom).is_ok());
    }

    #[test]
    fn split_partitions_rows() {
        let ds = Dataset::from_points(
            (0..5).map(|i| vec![i as f64]).collect(),
            (0..5).map(|i| i as f64 * 2.0).collect(),
        )
        .unwrap();
        let (a, b) = ds.split(&[0, 3]).unwrap();
        assert_eq!(a.responses(), &[0.0, 6.0]);
        assert_eq!(b.responses(), &[2.0, 4.0, 8.0]);
    }
}
