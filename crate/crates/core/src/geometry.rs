//! Closed axis-parallel cubes and the dilation algebra used by every stopping
//! and doubling argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;

/// A closed cube `{x : |x_i - c_i| <= side / 2 for all i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCube")]
pub struct Cube {
    center: Vec<f64>,
    side: f64,
}

#[derive(Deserialize)]
struct RawCube {
    center: Vec<f64>,
    side: f64,
}

impl TryFrom<RawCube> for Cube {
    type Error = Error;

    fn try_from(raw: RawCube) -> Result<Self> {
        Cube::new(raw.center, raw.side)
    }
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidCube("center must have at least one coordinate".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidCube(format!("side must be positive and finite, got {side}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCube("center has a non-finite coordinate".into()));
        }
        Ok(Cube { center, side })
    }

    /// Cube centered at `center` with the given side. Panics on invalid input;
    /// for internal use where both are already validated.
    pub(crate) fn from_parts(center: &[f64], side: f64) -> Cube {
        debug_assert!(side > 0.0 && side.is_finite());
        Cube {
            center: center.to_vec(),
            side,
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn half_side(&self) -> f64 {
        self.side / 2.0
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// The concentric cube `ηQ` with side `η·ℓ(Q)`.
    pub fn dilate(&self, eta: f64) -> Result<Cube> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::NonPositiveDilation(eta));
        }
        Cube::new(self.center.clone(), self.side * eta)
    }

    pub fn contains_point(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(self.contains_unchecked(x))
    }

    /// Closed-cube membership without the dimension check.
    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        sup_distance(&self.center, x) <= self.half_side()
    }

    pub fn contains_cube(&self, inner: &Cube) -> Result<bool> {
        check_dim(self.dim(), inner.dim())?;
        let (h_out, h_in) = (self.half_side(), inner.half_side());
        Ok(self
            .center
            .iter()
            .zip(&inner.center)
            .all(|(&co, &ci)| ci - h_in >= co - h_out && ci + h_in <= co + h_out))
    }

    /// Whether the two closed cubes share at least one point.
    pub fn intersects(&self, other: &Cube) -> Result<bool> {
        check_dim(self.dim(), other.dim())?;
        let reach = self.half_side() + other.half_side();
        Ok(sup_distance(&self.center, &other.center) <= reach)
    }

    pub fn is_concentric(&self, other: &Cube) -> bool {
        self.center == other.center
    }
}

/// `max_i |a_i - b_i|`, the norm in which cube membership is measured.
#[inline]
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[inline]
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Dilation factors `η ∈ [1, η_max]` at which an atom sits exactly on the
/// boundary of `ηQ`. The map `η ↦ μ(ηQ)` is a right-continuous step function
/// that jumps only at these values. Sorted ascending, duplicates merged.
pub fn critical_dilations(mu: &AtomicMeasure, q: &Cube, eta_max: f64) -> Result<Vec<f64>> {
    check_dim(mu.dim(), q.dim())?;
    let mut etas: Vec<f64> = mu
        .positions()
        .map(|x| 2.0 * sup_distance(x, q.center()) / q.side())
        .filter(|&eta| (1.0..=eta_max).contains(&eta))
        .collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    Ok(etas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AtomicMeasure, GrowthProfile};
    use proptest::prelude::*;

    fn cube(center: &[f64], side: f64) -> Cube {
        Cube::new(center.to_vec(), side).unwrap()
    }

    fn three_atoms() -> AtomicMeasure {
        AtomicMeasure::from_points(
            1,
            &[(vec![0.0], 1.0), (vec![1.0], 2.0), (vec![3.0], 4.0)],
            GrowthProfile::new(1.0, 8.0, 0.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn dilate_examples() {
        assert_eq!(cube(&[0.0], 2.0).dilate(3.0).unwrap(), cube(&[0.0], 6.0));
        let q = cube(&[0.0], 2.0);
        assert_eq!(q.dilate(1.0).unwrap(), q);
        assert_eq!(
            cube(&[1.0, 1.0], 0.5).dilate(6.0).unwrap(),
            cube(&[1.0, 1.0], 3.0)
        );
        assert_eq!(q.dilate(0.0), Err(Error::NonPositiveDilation(0.0)));
        assert!(q.dilate(-1.0).is_err());
    }

    #[test]
    fn point_membership_is_closed() {
        let q = cube(&[0.0], 2.0);
        assert!(q.contains_point(&[1.0]).unwrap());
        assert!(!q.contains_point(&[1.0001]).unwrap());
        assert!(cube(&[0.0, 0.0], 2.0).contains_point(&[1.0, 1.0]).unwrap());
        assert!(matches!(
            q.contains_point(&[0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn cube_containment() {
        assert!(cube(&[0.0], 6.0).contains_cube(&cube(&[0.0], 2.0)).unwrap());
        assert!(cube(&[0.0], 2.0).contains_cube(&cube(&[0.0], 2.0)).unwrap());
        assert!(!cube(&[0.0], 2.0).contains_cube(&cube(&[1.5], 3.0)).unwrap());
    }

    #[test]
    fn rejects_degenerate_cubes() {
        assert!(Cube::new(vec![0.0], 0.0).is_err());
        assert!(Cube::new(vec![], 1.0).is_err());
        assert!(Cube::new(vec![f64::NAN], 1.0).is_err());
        assert!(serde_json::from_str::<Cube>(r#"{"center":[0],"side":-1}"#).is_err());
    }

    #[test]
    fn cube_json_shape() {
        let q = cube(&[0.5, -1.0], 3.0);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"center":[0.5,-1.0],"side":3.0}"#);
        assert_eq!(serde_json::from_str::<Cube>(&s).unwrap(), q);
    }

    #[test]
    fn critical_dilation_examples() {
        let mu = three_atoms();
        let q = cube(&[0.0], 1.0);
        assert_eq!(critical_dilations(&mu, &q, 10.0).unwrap(), vec![2.0, 6.0]);

        let single = AtomicMeasure::from_points(
            1,
            &[(vec![0.0], 1.0)],
            GrowthProfile::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(critical_dilations(&single, &q, 10.0).unwrap().is_empty());

        let corner = AtomicMeasure::from_points(
            2,
            &[(vec![0.5, 0.5], 1.0)],
            GrowthProfile::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let q2 = cube(&[0.0, 0.0], 1.0);
        assert_eq!(critical_dilations(&corner, &q2, 3.0).unwrap(), vec![1.0]);
    }

    fn arb_cube() -> impl Strategy<Value = Cube> {
        (prop::collection::vec(-10.0..10.0f64, 2), 0.01..5.0f64)
            .prop_map(|(c, s)| Cube::new(c, s).unwrap())
    }

    proptest! {
        #[test]
        fn dilation_composes(q in arb_cube(), a in 0.1..10.0f64, b in 0.1..10.0f64) {
            let twice = q.dilate(a).unwrap().dilate(b).unwrap();
            let once = q.dilate(a * b).unwrap();
            prop_assert_eq!(twice.center(), once.center());
            // Two roundings versus two roundings in a different order.
            let rel = (twice.side() - once.side()).abs() / once.side();
            prop_assert!(rel <= 2.0 * f64::EPSILON);
        }

        #[test]
        fn dyadic_dilation_composes_exactly(q in arb_cube(), i in -6i32..6, j in -6i32..6) {
            let (a, b) = (2f64.powi(i), 2f64.powi(j));
            prop_assert_eq!(q.dilate(a).unwrap().dilate(b).unwrap(), q.dilate(a * b).unwrap());
        }

        #[test]
        fn dilation_contains_original(q in arb_cube(), eta in 1.0..50.0f64) {
            prop_assert!(q.dilate(eta).unwrap().contains_cube(&q).unwrap());
        }

        #[test]
        fn mass_is_constant_between_critical_dilations(
            pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..30),
            c in (-2.0..2.0f64, -2.0..2.0f64),
            side in 0.1..2.0f64,
        ) {
            let atoms: Vec<_> = pts.iter().enumerate()
                .map(|(i, &(x, y))| (vec![x + 1e-7 * i as f64, y], 1.0 + i as f64))
                .collect();
            let Ok(mu) = AtomicMeasure::from_points(2, &atoms, GrowthProfile::new(2.0, 1e9, 1e-9).unwrap()) else {
                return Ok(());
            };
            let q = Cube::new(vec![c.0, c.1], side).unwrap();
            let mut knots = critical_dilations(&mu, &q, 100.0).unwrap();
            knots.insert(0, 1.0);
            knots.push(100.0);
            knots.dedup();
            for w in knots.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let a = mu.cube_mass(&q.dilate(lo + 0.25 * (hi - lo)).unwrap()).unwrap();
                let b = mu.cube_mass(&q.dilate(lo + 0.75 * (hi - lo)).unwrap()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
