//! Shaped arrays of 64-bit floats and the named-parameter container.

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// A dense row-major array of `f64`.
///
/// Invariants: `shape.iter().product() == data.len()` and every element
/// is finite. Checked constructors return shape/numeric errors; the
/// `from_*` convenience constructors panic on violation and are meant
/// for values the caller already controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} expects {} elements, got {}",
                shape,
                expected,
                data.len()
            )));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite element {x}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    /// 1-D array from a vector. Panics on non-finite input.
    pub fn from_vec(data: Vec<f64>) -> Self {
        assert!(data.iter().all(|x| x.is_finite()), "non-finite element");
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Element of a 2-D array.
    pub fn at2(&self, row: usize, col: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[row * self.shape[1] + col]
    }

    /// Exact bit equality, for determinism checks.
    pub fn bits_eq(&self, other: &Array) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Max absolute coordinate difference to another array of the same length.
    pub fn linf_distance(&self, other: &Array) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn l2_distance(&self, other: &Array) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Ordered collection of named arrays holding all learnable weights of
/// one network. Entry order is insertion order and is part of the
/// checkpoint contract. Shapes are immutable after creation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    entries: IndexMap<String, Array>,
    seed: u64,
}

impl ParameterSet {
    pub fn new(seed: u64) -> Self {
        Self {
            entries: IndexMap::new(),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn insert(&mut self, name: impl Into<String>, array: Array) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::Argument(format!("duplicate parameter name '{name}'")));
        }
        self.entries.insert(name, array);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Array> {
        self.entries.get(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(Array::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Array)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    /// Replace the values of an existing entry; the shape must match.
    pub fn update(&mut self, name: &str, array: Array) -> Result<()> {
        match self.entries.get_mut(name) {
            None => Err(Error::Argument(format!("unknown parameter '{name}'"))),
            Some(slot) => {
                if slot.shape() != array.shape() {
                    return Err(Error::Shape(format!(
                        "parameter '{name}': shape {:?} is immutable, got {:?}",
                        slot.shape(),
                        array.shape()
                    )));
                }
                *slot = array;
                Ok(())
            }
        }
    }

    /// Same names and shapes, all values zero.
    pub fn zeros_like(&self) -> ParameterSet {
        let mut out = ParameterSet::new(self.seed);
        for (name, array) in self.iter() {
            out.entries
                .insert(name.to_string(), Array::zeros(array.shape().to_vec()));
        }
        out
    }

    /// True when names, shapes, and order all agree.
    pub fn same_layout(&self, other: &ParameterSet) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|((an, aa), (bn, ba))| an == bn && aa.shape() == ba.shape())
    }

    pub fn bits_eq(&self, other: &ParameterSet) -> bool {
        self.same_layout(other)
            && self
                .iter()
                .zip(other.iter())
                .all(|((_, a), (_, b))| a.bits_eq(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_shape_mismatch_and_non_finite() {
        assert!(matches!(
            Array::new(vec![2, 2], vec![0.0; 3]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Array::new(vec![2], vec![0.0, f64::NAN]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn parameter_shapes_are_immutable() {
        let mut ps = ParameterSet::new(0);
        ps.insert("w", Array::zeros(vec![2, 3])).unwrap();
        assert!(ps.update("w", Array::zeros(vec![3, 2])).is_err());
        assert!(ps.update("w", Array::zeros(vec![2, 3])).is_ok());
        assert!(ps.insert("w", Array::zeros(vec![1])).is_err());
    }

    #[test]
    fn linf_distance_uses_absolute_values() {
        let a = Array::from_vec(vec![0.0, 0.0]);
        let b = Array::from_vec(vec![0.1, -0.3]);
        assert!((a.linf_distance(&b).unwrap() - 0.3).abs() < 1e-15);
    }
}
