//! Typed, bounded hyperparameter dimensions and the mapping between the
//! continuous key domain `[0,1]^n` and the hyperparameter domain.
//!
//! Encoding is pure min-max normalization; data-type rounding is applied on
//! decode only, so the key domain stays continuous for the genetic operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Data type of one hyperparameter dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionKind {
    Integer,
    Real,
}

/// One hyperparameter: a named, typed, bounded subrange, optionally carrying
/// an explicit value list for grid search.
///
/// Deserialization funnels through the validating constructors, so a decoded
/// spec always satisfies the invariants.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawDimensionSpec")]
pub struct DimensionSpec {
    name: String,
    kind: DimensionKind,
    min: f64,
    max: f64,
    grid_values: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawDimensionSpec {
    name: String,
    kind: DimensionKind,
    min: f64,
    max: f64,
    #[serde(default)]
    grid_values: Option<Vec<f64>>,
}

impl TryFrom<RawDimensionSpec> for DimensionSpec {
    type Error = Error;

    fn try_from(raw: RawDimensionSpec) -> Result<Self> {
        let dim = DimensionSpec::new(raw.name, raw.kind, raw.min, raw.max)?;
        match raw.grid_values {
            Some(values) => dim.with_grid(values),
            None => Ok(dim),
        }
    }
}

impl DimensionSpec {
    pub fn new(
        name: impl Into<String>,
        kind: DimensionKind,
        min: f64,
        max: f64,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: &str| Error::InvalidDimension {
            name: name.clone(),
            reason: reason.to_string(),
        };
        if !min.is_finite() || !max.is_finite() {
            return Err(invalid("bounds must be finite"));
        }
        if min >= max {
            return Err(invalid("min must be strictly less than max"));
        }
        if kind == DimensionKind::Integer && (min.fract() != 0.0 || max.fract() != 0.0) {
            return Err(invalid("integer dimension bounds must be whole numbers"));
        }
        Ok(Self {
            name,
            kind,
            min,
            max,
            grid_values: None,
        })
    }

    pub fn integer(name: impl Into<String>, min: f64, max: f64) -> Result<Self> {
        Self::new(name, DimensionKind::Integer, min, max)
    }

    pub fn real(name: impl Into<String>, min: f64, max: f64) -> Result<Self> {
        Self::new(name, DimensionKind::Real, min, max)
    }

    /// Attaches explicit grid values. Each value must lie in the subrange and
    /// conform to the dimension kind.
    pub fn with_grid(mut self, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension {
                name: self.name.clone(),
                reason: "grid value list must not be empty".to_string(),
            });
        }
        for &v in &values {
            if !v.is_finite() || v < self.min || v > self.max {
                return Err(Error::InvalidDimension {
                    name: self.name.clone(),
                    reason: format!("grid value {v} outside [{}, {}]", self.min, self.max),
                });
            }
            if self.kind == DimensionKind::Integer && v.fract() != 0.0 {
                return Err(Error::InvalidDimension {
                    name: self.name.clone(),
                    reason: format!("grid value {v} is not a whole number"),
                });
            }
        }
        self.grid_values = Some(values);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DimensionKind {
        self.kind
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn grid_values(&self) -> Option<&[f64]> {
        self.grid_values.as_deref()
    }

    /// Nearest value to `v` that conforms to the dimension kind and lies in
    /// `[min, max]`. Clamps both before and after rounding, so the result is
    /// in range for any finite input. Integer rounding is half away from zero.
    pub fn round_value(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "value to round",
                value: v,
            });
        }
        let clamped = v.clamp(self.min, self.max);
        Ok(match self.kind {
            DimensionKind::Real => clamped,
            // + 0.0 turns a rounded -0 into +0
            DimensionKind::Integer => clamped.round().clamp(self.min, self.max) + 0.0,
        })
    }

    fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.min && v <= self.max
    }
}

/// A point in the key domain: `n` reals in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>")]
pub struct KeyVector(Vec<f64>);

impl TryFrom<Vec<f64>> for KeyVector {
    type Error = Error;

    fn try_from(keys: Vec<f64>) -> Result<Self> {
        Self::new(keys)
    }
}

impl KeyVector {
    pub fn new(keys: Vec<f64>) -> Result<Self> {
        for (index, &value) in keys.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::KeyOutOfRange { index, value });
            }
        }
        Ok(Self(keys))
    }

    pub fn keys(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A point in the hyperparameter domain, position-aligned with a
/// [`HyperSpace`]. Validity against a concrete space is checked by
/// [`HyperSpace::check_vector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperVector(Vec<f64>);

impl HyperVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for HyperVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Ordered list of typed, bounded dimensions. Immutable after construction;
/// every operation is pure and safe to call from concurrent workers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawHyperSpace")]
pub struct HyperSpace {
    dims: Vec<DimensionSpec>,
}

#[derive(Deserialize)]
struct RawHyperSpace {
    dims: Vec<DimensionSpec>,
}

impl TryFrom<RawHyperSpace> for HyperSpace {
    type Error = Error;

    fn try_from(raw: RawHyperSpace) -> Result<Self> {
        Self::new(raw.dims)
    }
}

impl HyperSpace {
    pub fn new(dims: Vec<DimensionSpec>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("at least one dimension required".into()));
        }
        for i in 1..dims.len() {
            if dims[..i].iter().any(|d| d.name == dims[i].name) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate dimension name `{}`",
                    dims[i].name
                )));
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[DimensionSpec] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self, i: usize) -> Result<&DimensionSpec> {
        self.dims.get(i).ok_or(Error::IndexOutOfRange {
            what: "dimension",
            index: i,
            len: self.dims.len(),
        })
    }

    /// `(min, max)` of dimension `i`.
    pub fn dim_bounds(&self, i: usize) -> Result<(f64, f64)> {
        let dim = self.dim(i)?;
        Ok((dim.min, dim.max))
    }

    /// Nearest in-range, type-conforming value to `v` on dimension `i`.
    pub fn round_to(&self, i: usize, v: f64) -> Result<f64> {
        self.dim(i)?.round_value(v)
    }

    /// Maps keys to hyperparameter values:
    /// `value_i = round(min_i + key_i * (max_i - min_i))`.
    pub fn decode(&self, keys: &KeyVector) -> Result<HyperVector> {
        if keys.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "keys vs dimensions",
                left: keys.len(),
                right: self.len(),
            });
        }
        let mut values = Vec::with_capacity(self.len());
        for (i, (&key, dim)) in keys.keys().iter().zip(&self.dims).enumerate() {
            if !key.is_finite() || !(0.0..=1.0).contains(&key) {
                return Err(Error::KeyOutOfRange { index: i, value: key });
            }
            values.push(dim.round_value(dim.min + key * dim.span())?);
        }
        Ok(HyperVector(values))
    }

    /// Maps hyperparameter values to keys: `key_i = (v_i - min_i) / span_i`.
    /// No data-type rounding is applied to keys.
    pub fn encode(&self, gamma: &HyperVector) -> Result<KeyVector> {
        if gamma.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "values vs dimensions",
                left: gamma.len(),
                right: self.len(),
            });
        }
        let mut keys = Vec::with_capacity(self.len());
        for (&value, dim) in gamma.values().iter().zip(&self.dims) {
            if !dim.contains(value) {
                return Err(Error::ValueOutOfBounds {
                    name: dim.name.clone(),
                    value,
                    min: dim.min,
                    max: dim.max,
                });
            }
            // Clamp absorbs the floating-point drift of the division.
            keys.push(((value - dim.min) / dim.span()).clamp(0.0, 1.0));
        }
        KeyVector::new(keys)
    }

    /// Checks that `gamma` conforms to the space: in bounds, and whole-valued
    /// on integer dimensions.
    pub fn check_vector(&self, gamma: &HyperVector) -> Result<()> {
        if gamma.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "values vs dimensions",
                left: gamma.len(),
                right: self.len(),
            });
        }
        for (&value, dim) in gamma.values().iter().zip(&self.dims) {
            if !dim.contains(value) {
                return Err(Error::ValueOutOfBounds {
                    name: dim.name.clone(),
                    value,
                    min: dim.min,
                    max: dim.max,
                });
            }
            if dim.kind == DimensionKind::Integer && value.fract() != 0.0 {
                return Err(Error::InvalidDimension {
                    name: dim.name.clone(),
                    reason: format!("value {value} is not a whole number"),
                });
            }
        }
        Ok(())
    }
}
