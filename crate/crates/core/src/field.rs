//! Sampled complex fields on uniform grids.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A uniform axis: `coord(i) = start + i * step` for `i < count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    /// `count` points from `min` to `max` inclusive.
    pub fn linspace(name: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis `{name}` needs count >= 2 and finite max > min (got {min}..{max}, {count})"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            start: min,
            step: (max - min) / (count - 1) as f64,
            count,
        })
    }

    /// `count` points covering the periodic cell `[min, max)`.
    pub fn periodic(name: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis `{name}` needs count >= 2 and finite max > min (got {min}..{max}, {count})"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            start: min,
            step: (max - min) / count as f64,
            count,
        })
    }

    /// A single coordinate, e.g. one time slice.
    pub fn point(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            start: value,
            step: 0.0,
            count: 1,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.coord(i))
    }

    pub fn last(&self) -> f64 {
        self.coord(self.count - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    /// Lengths in units of the axial oscillator length `l_x`.
    Natural,
    Microns,
}

/// Complex samples on the outer product of `axes`, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexField {
    axes: Vec<Axis>,
    samples: Vec<Complex64>,
    units: LengthUnit,
}

impl ComplexField {
    pub fn new(axes: Vec<Axis>, samples: Vec<Complex64>, units: LengthUnit) -> Result<Self> {
        let expected: usize = axes.iter().map(|a| a.count).product();
        if axes.is_empty() || expected != samples.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples do not match axis counts (product {expected})",
                samples.len()
            )));
        }
        Ok(Self {
            axes,
            samples,
            units,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, name: &str) -> Option<&Axis> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn units(&self) -> LengthUnit {
        self.units
    }

    /// The axis that carries spatial samples of a 1D field; singleton axes
    /// (such as a fixed time) are skipped.
    pub fn spatial_axis(&self) -> Result<&Axis> {
        let mut extended = self.axes.iter().filter(|a| a.count > 1);
        match (extended.next(), extended.next()) {
            (Some(axis), None) => Ok(axis),
            _ => Err(Error::InvalidGrid(
                "expected exactly one non-singleton axis".into(),
            )),
        }
    }

    /// `sum |psi|^2 dx` over a 1D field (rectangle rule, which is spectrally
    /// accurate for smooth fields that vanish at the edges).
    pub fn norm_sq(&self) -> Result<f64> {
        let dx = self.spatial_axis()?.step;
        Ok(self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx)
    }

    /// L2 distance between two 1D fields on the same grid.
    pub fn l2_distance(&self, other: &ComplexField) -> Result<f64> {
        let axis = self.spatial_axis()?;
        let other_axis = other.spatial_axis()?;
        if axis.count != other_axis.count
            || (axis.start - other_axis.start).abs() > 1e-12 * axis.step
            || (axis.step - other_axis.step).abs() > 1e-12 * axis.step
        {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((sum * axis.step).sqrt())
    }
}

/// Indices of strict interior local maxima whose value exceeds `floor` times
/// the global maximum.
pub fn local_maxima(values: &[f64], floor: f64) -> Vec<usize> {
    let top = values.iter().cloned().fold(0.0, f64::max);
    (1..values.len().saturating_sub(1))
        .filter(|&i| {
            values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > floor * top
        })
        .collect()
}
