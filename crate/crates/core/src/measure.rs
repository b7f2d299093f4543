//! Finite measures on the elements of a poset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordaff;
use crate::poset::{ElementSet, Poset};

/// Equality tolerance for statements that hold exactly in exact arithmetic.
pub const TOL: f64 = 1e-9;

/// Nonnegative weight vector, one entry per poset element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::BadWeight { index, value });
            }
        }
        Ok(Measure { weights })
    }

    /// Validates mass 1 within [`TOL`] and renormalizes.
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(weights)?;
        let mass = m.mass();
        if (mass - 1.0).abs() > TOL {
            return Err(Error::NotProbability(mass));
        }
        Ok(m.scale(1.0 / mass))
    }

    pub fn zeros(n: usize) -> Self {
        Measure {
            weights: vec![0.0; n],
        }
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Measure { weights: w }
    }

    pub fn uniform(n: usize) -> Self {
        Measure {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        Measure { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.mass() - 1.0).abs() <= TOL
    }

    /// μ(B)
    pub fn measure_of(&self, set: &ElementSet) -> f64 {
        self.weights
            .iter()
            .zip(&set.0)
            .filter(|(_, &b)| b)
            .map(|(w, _)| w)
            .sum()
    }

    /// Integral of a function against the measure.
    pub fn integrate(&self, h: &[f64]) -> f64 {
        self.weights.iter().zip(h).map(|(w, v)| w * v).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0, "negative scale");
        Measure {
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    pub fn add(&self, other: &Measure) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Measure {
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `self - other`, which must be a measure; entries within `TOL` below zero clamp to zero.
    pub fn sub(&self, other: &Measure) -> Result<Self> {
        check_dims(self, other)?;
        let mut w = Vec::with_capacity(self.len());
        for (index, (a, b)) in self.weights.iter().zip(&other.weights).enumerate() {
            let d = a - b;
            if d < -TOL {
                return Err(Error::BadWeight { index, value: d });
            }
            w.push(d.max(0.0));
        }
        Ok(Measure { weights: w })
    }

    /// Componentwise `self ≤ other` within `tol`.
    pub fn le(&self, other: &Measure, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| *a <= b + tol)
    }

    pub fn max_abs_diff(&self, other: &Measure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_on(&self, poset: &Poset) -> Result<()> {
        if self.len() != poset.len() {
            return Err(Error::DimMismatch(self.len(), poset.len()));
        }
        Ok(())
    }
}

/// λ = plus − minus, kept as a pair of measures.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDiff {
    pub plus: Measure,
    pub minus: Measure,
}

impl SignedDiff {
    pub fn new(plus: Measure, minus: Measure) -> Result<Self> {
        check_dims(&plus, &minus)?;
        Ok(SignedDiff { plus, minus })
    }

    /// λ(S)
    pub fn total(&self) -> f64 {
        self.plus.mass() - self.minus.mass()
    }

    /// λ(h)
    pub fn integrate(&self, h: &[f64]) -> f64 {
        self.plus.integrate(h) - self.minus.integrate(h)
    }

    pub fn negate(&self) -> Self {
        SignedDiff {
            plus: self.minus.clone(),
            minus: self.plus.clone(),
        }
    }
}

pub(crate) fn check_dims(a: &Measure, b: &Measure) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// ‖μ − ν‖ = Σ |μ_i − ν_i|.
pub fn tv_distance(mu: &Measure, nu: &Measure) -> Result<f64> {
    check_dims(mu, nu)?;
    Ok(mu
        .weights
        .iter()
        .zip(&nu.weights)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// μ ∧ ν: the largest measure below both, i.e. the pointwise minimum.
pub fn inf_measure(mu: &Measure, nu: &Measure) -> Result<Measure> {
    check_dims(mu, nu)?;
    Ok(Measure {
        weights: mu
            .weights
            .iter()
            .zip(&nu.weights)
            .map(|(a, b)| a.min(*b))
            .collect(),
    })
}

/// α(μ, ν) = (μ ∧ ν)(S).
pub fn affinity(mu: &Measure, nu: &Measure) -> Result<f64> {
    Ok(inf_measure(mu, nu)?.mass())
}

/// μ ⪯_sd ν: equal mass and no increasing set carries more μ-mass than ν-mass.
pub fn stochastically_dominated(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<bool> {
    mu.check_on(poset)?;
    nu.check_on(poset)?;
    if (mu.mass() - nu.mass()).abs() > TOL {
        return Ok(false);
    }
    let (value, _) = ordaff::max_upset_deficiency(poset, mu, nu)?;
    Ok(value <= TOL)
}
