//! Deterministic stand-in generator: a Gaussian mixture with per-component
//! labels, optional independent label noise, and an optional region of
//! systematically flipped labels. Used by offline pipelines and tests in
//! place of a live provider.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, Role, Row};
use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::schema::{FeatureKind, FeatureSpec, TabularSchema, TargetSpec};

/// Axis-aligned region `|x[axis]| > abs_threshold` whose samples get their
/// label flipped after drawing, simulating a systematic labeling error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseRegion {
    pub axis: usize,
    pub abs_threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockSpec {
    /// One mean vector per mixture component.
    pub component_means: Vec<Vec<f64>>,
    /// Per-component diagonal variances, same shape as the means.
    pub component_vars: Vec<Vec<f64>>,
    /// Label emitted by each component.
    pub class_of_component: Vec<String>,
    /// Probability of flipping each sample's label, drawn independently.
    pub label_noise_rate: f64,
    pub noise_region: Option<NoiseRegion>,
}

impl MockSpec {
    /// Equally weighted unit-variance components, one per mean.
    pub fn isotropic(means: Vec<Vec<f64>>, classes: Vec<String>) -> MockSpec {
        let vars = means.iter().map(|m| vec![1.0; m.len()]).collect();
        MockSpec {
            component_means: means,
            component_vars: vars,
            class_of_component: classes,
            label_noise_rate: 0.0,
            noise_region: None,
        }
    }

    pub fn with_label_noise(mut self, rate: f64) -> MockSpec {
        self.label_noise_rate = rate;
        self
    }

    pub fn with_noise_region(mut self, axis: usize, abs_threshold: f64) -> MockSpec {
        self.noise_region = Some(NoiseRegion { axis, abs_threshold });
        self
    }

    pub fn n_features(&self) -> usize {
        self.component_means.first().map(Vec::len).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.component_means.len();
        if m == 0 {
            return Err(Error::InvalidConfig("mock spec needs at least one component".into()));
        }
        if self.component_vars.len() != m || self.class_of_component.len() != m {
            return Err(Error::InvalidConfig(
                "component means, variances, and classes must have equal length".into(),
            ));
        }
        let d = self.n_features();
        if d == 0 {
            return Err(Error::InvalidConfig("mock components need at least one feature".into()));
        }
        for (mean, var) in self.component_means.iter().zip(&self.component_vars) {
            if mean.len() != d || var.len() != d {
                return Err(Error::InvalidConfig("inconsistent component dimensions".into()));
            }
            if mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("component means must be finite".into()));
            }
            if var.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig(
                    "component variances must be finite and non-negative".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.label_noise_rate) {
            return Err(Error::InvalidConfig("label noise rate must lie in [0, 1]".into()));
        }
        if let Some(region) = &self.noise_region {
            if region.axis >= d {
                return Err(Error::InvalidConfig("noise region axis out of range".into()));
            }
            if !region.abs_threshold.is_finite() || region.abs_threshold < 0.0 {
                return Err(Error::InvalidConfig(
                    "noise region threshold must be finite and non-negative".into(),
                ));
            }
        }
        if self.levels().len() < 2 {
            return Err(Error::InvalidConfig("mock spec needs at least two classes".into()));
        }
        Ok(())
    }

    fn levels(&self) -> Vec<String> {
        let mut levels = self.class_of_component.clone();
        levels.sort();
        levels.dedup();
        levels
    }

    pub fn schema(&self) -> TabularSchema {
        TabularSchema {
            features: (0..self.n_features())
                .map(|j| FeatureSpec {
                    name: format!("x{}", j + 1),
                    kind: FeatureKind::Numeric,
                    description: format!("coordinate {}", j + 1),
                    levels: None,
                })
                .collect(),
            target: TargetSpec {
                name: "label".into(),
                levels: self.levels(),
            },
            background: "points drawn from a mixture of labeled clusters".into(),
        }
    }
}

fn flipped(levels: &[String], label: &str) -> String {
    let idx = levels.iter().position(|l| l == label).unwrap_or(0);
    levels[(idx + 1) % levels.len()].clone()
}

/// Draws `n` labeled samples. Per sample the draw order is fixed (component,
/// then one normal per coordinate, then the noise uniform when the rate is
/// positive), so outputs are reproducible across runs and platforms. The
/// returned dataset carries a flip audit: true where the emitted label
/// differs from the component's clean label.
pub fn mock_sample(spec: &MockSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let schema = spec.schema();
    let levels = schema.target.levels.clone();
    let mut rng = rng_for("mock", seed);
    let m = spec.component_means.len();

    let mut rows = Vec::with_capacity(n);
    let mut audit = Vec::with_capacity(n);
    for _ in 0..n {
        let comp = rng.random_range(0..m);
        let mean = &spec.component_means[comp];
        let var = &spec.component_vars[comp];
        let cells: Vec<Cell> = mean
            .iter()
            .zip(var)
            .map(|(&mu, &v)| {
                let z: f64 = rng.sample(StandardNormal);
                Cell::Numeric(mu + v.sqrt() * z)
            })
            .collect();

        let clean = spec.class_of_component[comp].clone();
        let mut label = clean.clone();
        if let Some(region) = &spec.noise_region {
            let coord = cells[region.axis].as_numeric().expect("numeric mock cell");
            if coord.abs() > region.abs_threshold {
                label = flipped(&levels, &label);
            }
        }
        if spec.label_noise_rate > 0.0 {
            let u: f64 = rng.random_range(0.0..1.0);
            if u < spec.label_noise_rate {
                label = flipped(&levels, &label);
            }
        }
        audit.push(label != clean);
        rows.push(Row::new(cells, label));
    }

    Dataset::new(schema, Role::Synthetic, rows)?.with_audit(audit)
}
