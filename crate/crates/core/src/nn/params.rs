use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::graph::{Gradients, Graph, Mat, Tensor};
use super::rng::{name_key, stream};
use crate::error::{QatError, Result};

/// Named trainable arrays, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    arrays: BTreeMap<String, Mat>,
}

/// Initialization rule for one array.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    Ones,
    Constant(f64),
    Normal {
        std: f64,
    },
    /// Uniform in `±sqrt(1/fan_in)`, with `fan_in` the row count.
    FanIn,
    Uniform {
        low: f64,
        high: f64,
    },
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Mat) {
        self.arrays.insert(name.into(), value);
    }

    /// Inserts a `rows×cols` array drawn from its own random stream, keyed by
    /// `seed` and `name`; the same name gets the same values in any build.
    pub fn init(&mut self, seed: u64, name: &str, rows: usize, cols: usize, init: Init) {
        let mut rng = stream(seed, [0x1417, name_key(name), 0]);
        let value = match init {
            Init::Zeros => Mat::zeros((rows, cols)),
            Init::Ones => Mat::ones((rows, cols)),
            Init::Constant(c) => Mat::from_elem((rows, cols), c),
            Init::Normal { std } => {
                let dist = Normal::new(0.0, std).expect("finite std");
                sample(rows, cols, &mut rng, &dist)
            }
            Init::FanIn => {
                let bound = (1.0 / rows as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("valid bounds");
                sample(rows, cols, &mut rng, &dist)
            }
            Init::Uniform { low, high } => {
                let dist = Uniform::new(low, high).expect("valid bounds");
                sample(rows, cols, &mut rng, &dist)
            }
        };
        self.insert(name, value);
    }

    pub fn get(&self, name: &str) -> Result<&Mat> {
        self.arrays
            .get(name)
            .ok_or_else(|| QatError::MissingArray(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Mat> {
        self.arrays
            .get_mut(name)
            .ok_or_else(|| QatError::MissingArray(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arrays.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mat)> {
        self.arrays.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Mat)> {
        self.arrays.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.arrays.values().map(|a| a.len()).sum()
    }

    /// Registers every array as a graph parameter.
    pub fn bind(&self, graph: &mut Graph) -> BoundParams {
        BoundParams {
            handles: self
                .arrays
                .iter()
                .map(|(k, v)| (k.clone(), graph.param(v.clone())))
                .collect(),
        }
    }
}

fn sample<D: Distribution<f64>>(rows: usize, cols: usize, rng: &mut impl Rng, dist: &D) -> Mat {
    let data: Vec<f64> = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    Mat::from_shape_vec((rows, cols), data).expect("rows*cols elements")
}

/// Graph handles of a [`ParamSet`].
#[derive(Debug, Clone)]
pub struct BoundParams {
    handles: BTreeMap<String, Tensor>,
}

impl BoundParams {
    pub fn get(&self, name: &str) -> Result<Tensor> {
        self.handles
            .get(name)
            .copied()
            .ok_or_else(|| QatError::MissingArray(name.to_string()))
    }

    /// Gradient for every bound array; arrays the loss does not reach get
    /// zeros.
    pub fn collect_grads(&self, graph: &Graph, grads: &mut Gradients) -> BTreeMap<String, Mat> {
        self.handles
            .iter()
            .map(|(name, &t)| {
                let g = grads.take(t).unwrap_or_else(|| Mat::zeros(graph.dim(t)));
                (name.clone(), g)
            })
            .collect()
    }
}
