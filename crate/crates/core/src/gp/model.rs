use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::basis::BasisSet;
use super::em::{EmFitter, EmSettings, ModelParams};
use super::normalize::{normalize_cluster, NormalizationTransform};
use crate::error::{invalid, Error, Result};
use crate::par::Exec;
use crate::track::Trajectory;

/// Mean and covariance of the model at one normalised time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSection {
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

/// A fitted corridor model: the weight distribution N(μ, Σ), the noise
/// precision β, and everything needed to evaluate it in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryModel {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub beta: f64,
    pub basis: BasisSet,
    pub transform: NormalizationTransform,
    pub n_trajectories: usize,
    pub neg_log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    /// Iterations in which Σ̂ needed a diagonal ridge.
    pub ridge_events: usize,
}

impl TrajectoryModel {
    /// Normalise a cluster and fit it by EM.
    pub fn fit(cluster: &[Trajectory], basis: BasisSet, settings: EmSettings) -> Result<Self> {
        Self::fit_with(cluster, basis, settings, Exec::default())
    }

    pub fn fit_with(
        cluster: &[Trajectory],
        basis: BasisSet,
        settings: EmSettings,
        exec: Exec,
    ) -> Result<Self> {
        let (tracks, transform) = normalize_cluster(cluster)?;
        let outcome = EmFitter::new(&basis, &tracks, settings, exec)?.run()?;
        Ok(
            Self::from_params(outcome.params, basis, transform, tracks.len()).with_history(
                outcome.trace,
                outcome.converged,
                outcome.ridge_events,
            ),
        )
    }

    /// Wrap known parameters (no fitting history).
    pub fn from_params(
        params: ModelParams,
        basis: BasisSet,
        transform: NormalizationTransform,
        n_trajectories: usize,
    ) -> Self {
        assert_eq!(
            params.dim(),
            3 * basis.count(),
            "parameter size does not match basis"
        );
        Self {
            mu: params.mu,
            sigma: params.sigma,
            beta: params.beta,
            basis,
            transform,
            n_trajectories,
            neg_log_likelihood_trace: Vec::new(),
            converged: true,
            ridge_events: 0,
        }
    }

    fn with_history(mut self, trace: Vec<f64>, converged: bool, ridge_events: usize) -> Self {
        self.neg_log_likelihood_trace = trace;
        self.converged = converged;
        self.ridge_events = ridge_events;
        self
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            mu: self.mu.clone(),
            sigma: self.sigma.clone(),
            beta: self.beta,
        }
    }

    pub fn iterations(&self) -> usize {
        self.neg_log_likelihood_trace.len()
    }

    /// m(τ) = Φ(τ)μ and k(τ,τ) = Φ(τ)ΣΦ(τ)ᵀ + β⁻¹I in normalised coordinates.
    pub fn section(&self, tau: f64) -> GaussianSection {
        let j = self.basis.count();
        let v = self.basis.values(tau);
        let mut mean = Vector3::zeros();
        let mut proj = DMatrix::zeros(3, 3 * j);
        for d in 0..3 {
            mean[d] = (0..j).map(|k| v[k] * self.mu[d * j + k]).sum();
            for k in 0..j {
                proj[(d, d * j + k)] = v[k];
            }
        }
        let full = &proj * &self.sigma * proj.transpose();
        let noise = 1.0 / self.beta;
        let mut cov = Matrix3::from_fn(|r, c| 0.5 * (full[(r, c)] + full[(c, r)]));
        for d in 0..3 {
            cov[(d, d)] += noise;
        }
        GaussianSection { mean, cov }
    }

    /// The section mapped back to metres: mean offset + scale∘m, covariance
    /// diag(scale)·k·diag(scale).
    pub fn real_section(&self, tau: f64) -> GaussianSection {
        let s = self.section(tau);
        let tf = &self.transform;
        let scale = Vector3::from(tf.scale);
        let d = Matrix3::from_diagonal(&scale);
        GaussianSection {
            mean: Vector3::from(tf.offset) + scale.component_mul(&s.mean),
            cov: d * s.cov * d,
        }
    }

    /// Text serialisation: a key-value header, then μ̂ on one row and Σ̂ on
    /// 3J rows. Floats use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let join = |xs: &mut dyn Iterator<Item = f64>| {
            xs.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
        };
        let mut s = String::new();
        let _ = writeln!(s, "format = corridor-model-1");
        let _ = writeln!(s, "basis_count = {}", self.basis.count());
        let _ = writeln!(
            s,
            "centers = {}",
            join(&mut self.basis.centers().iter().copied())
        );
        let _ = writeln!(s, "width = {:e}", self.basis.width());
        let _ = writeln!(
            s,
            "offset = {}",
            join(&mut self.transform.offset.iter().copied())
        );
        let _ = writeln!(
            s,
            "scale = {}",
            join(&mut self.transform.scale.iter().copied())
        );
        let _ = writeln!(s, "n_trajectories = {}", self.n_trajectories);
        let _ = writeln!(s, "beta = {:e}", self.beta);
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "ridge_events = {}", self.ridge_events);
        let _ = writeln!(
            s,
            "trace = {}",
            join(&mut self.neg_log_likelihood_trace.iter().copied())
        );
        let _ = writeln!(s, "[mu]");
        let _ = writeln!(s, "{}", join(&mut self.mu.iter().copied()));
        let _ = writeln!(s, "[sigma]");
        for r in 0..self.sigma.nrows() {
            let _ = writeln!(s, "{}", join(&mut self.sigma.row(r).iter().copied()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::ModelFormat(m);
        let floats = |v: &str| -> Result<Vec<f64>> {
            if v.trim().is_empty() {
                return Ok(Vec::new());
            }
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad number `{x}`")))
                })
                .collect()
        };
        let mut lines = text.lines();
        let mut header = std::collections::HashMap::new();
        for line in lines.by_ref() {
            let line = line.trim();
            if line == "[mu]" {
                break;
            }
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value: `{line}`")))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(format!("missing `{k}`")));
        if get("format")? != "corridor-model-1" {
            return Err(bad("unknown format".into()));
        }
        let j: usize = get("basis_count")?
            .parse()
            .map_err(|_| bad("basis_count".into()))?;
        let centers = floats(get("centers")?)?;
        if centers.len() + 1 != j {
            return Err(bad("centers do not match basis_count".into()));
        }
        let width: f64 = get("width")?.parse().map_err(|_| bad("width".into()))?;
        let basis = BasisSet::new(centers, width)?;
        let three = |k: &str| -> Result<[f64; 3]> {
            let v = floats(get(k)?)?;
            v.try_into()
                .map_err(|_| bad(format!("`{k}` needs 3 values")))
        };
        let transform = NormalizationTransform {
            offset: three("offset")?,
            scale: three("scale")?,
        };
        if transform.scale.iter().any(|s| !(*s > 0.0)) {
            return Err(bad("scale must be positive".into()));
        }
        let n_trajectories = get("n_trajectories")?
            .parse()
            .map_err(|_| bad("n_trajectories".into()))?;
        let beta: f64 = get("beta")?.parse().map_err(|_| bad("beta".into()))?;
        if !(beta > 0.0) {
            return Err(bad("beta must be positive".into()));
        }
        let converged = get("converged")?
            .parse()
            .map_err(|_| bad("converged".into()))?;
        let ridge_events = get("ridge_events")?
            .parse()
            .map_err(|_| bad("ridge_events".into()))?;
        let trace = floats(get("trace")?)?;

        let dim = 3 * j;
        let mu = floats(lines.next().ok_or_else(|| bad("missing mu row".into()))?)?;
        if mu.len() != dim {
            return Err(bad(format!("mu has {} values, expected {dim}", mu.len())));
        }
        if lines.next().map(str::trim) != Some("[sigma]") {
            return Err(bad("missing [sigma]".into()));
        }
        let mut sigma = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let row = floats(lines.next().ok_or_else(|| bad("sigma truncated".into()))?)?;
            if row.len() != dim {
                return Err(bad(format!("sigma row {r} has {} values", row.len())));
            }
            for (c, v) in row.into_iter().enumerate() {
                sigma[(r, c)] = v;
            }
        }
        Ok(Self {
            mu: DVector::from_vec(mu),
            sigma,
            beta,
            basis,
            transform,
            n_trajectories,
            neg_log_likelihood_trace: trace,
            converged,
            ridge_events,
        })
    }
}

/// Check a normalised time argument.
pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(invalid("tau", format!("{tau} not in [0, 1]")))
    }
}
