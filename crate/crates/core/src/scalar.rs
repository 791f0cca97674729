//! Scalar values carried by densities, coefficients and transforms.
//!
//! Every value is stored as a [`Complex64`]. On the wire a value with zero
//! imaginary part is a bare JSON number and anything else is a `[re, im]`
//! pair, so real-valued inputs round-trip as plain numbers.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Scalar = Complex64;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Scalar> for Repr {
    fn from(z: Scalar) -> Self {
        if z.im == 0.0 {
            Repr::Real(z.re)
        } else {
            Repr::Pair([z.re, z.im])
        }
    }
}

impl From<Repr> for Scalar {
    fn from(r: Repr) -> Self {
        match r {
            Repr::Real(re) => Complex64::new(re, 0.0),
            Repr::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

pub fn serialize<S: Serializer>(z: &Scalar, s: S) -> Result<S::Ok, S::Error> {
    Repr::from(*z).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
    Repr::deserialize(d).map(Scalar::from)
}

/// `#[serde(with = "scalar::vec")]` for sequences of scalars.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Scalar], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|z| Repr::from(*z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Scalar>, D::Error> {
        let raw = Vec::<Repr>::deserialize(d)?;
        Ok(raw.into_iter().map(Scalar::from).collect())
    }
}
