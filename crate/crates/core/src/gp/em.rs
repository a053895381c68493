//! Expectation-maximisation for the basis-function trajectory model.
//!
//! Each trajectory `y_n` (3·M_n stacked coordinates) is modelled as
//! `y_n = Φ_n w_n + ε` with `w_n ~ N(μ, Σ)` and `ε ~ N(0, β⁻¹ I)`. The E-step
//! computes the Gaussian posterior of every `w_n`; the M-step re-estimates
//! `(μ, Σ, β)` from those posteriors.
//!
//! Φ_n is block-diagonal with the same J scalar basis values in each of the
//! three coordinate blocks, so `Φ_nᵀ Φ_n = I₃ ⊗ G_n` with `G_n = B_nᵀ B_n`
//! (B_n is the M_n × J scalar basis matrix). Only `B_n`, `G_n` and the
//! per-dimension projections are stored.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::basis::BasisSet;
use super::normalize::NormalizedTrack;
use crate::error::{invalid, Error, Result};
use crate::par::Exec;

/// Floor on the fitted noise variance 1/β.
pub const MIN_NOISE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// 3J mean weight vector.
    pub mu: DVector<f64>,
    /// 3J × 3J weight covariance.
    pub sigma: DMatrix<f64>,
    /// Noise precision.
    pub beta: f64,
}

impl ModelParams {
    /// The uninformative starting point: μ = 0, Σ = a·I.
    pub fn initial(dim: usize, prior_scale: f64, beta: f64) -> Self {
        Self {
            mu: DVector::zeros(dim),
            sigma: DMatrix::identity(dim, dim) * prior_scale,
            beta,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Per-trajectory design quantities.
#[derive(Debug, Clone)]
pub struct Design {
    /// M × J scalar basis values.
    basis: DMatrix<f64>,
    /// M × 3 coordinates.
    y: DMatrix<f64>,
    /// J × J Gram matrix BᵀB.
    gram: DMatrix<f64>,
    /// Φᵀy, dimension-major (3J).
    phi_t_y: DVector<f64>,
}

impl Design {
    pub fn new(basis: &BasisSet, track: &NormalizedTrack) -> Self {
        let m = track.len();
        let j = basis.count();
        let mut b = DMatrix::zeros(m, j);
        let mut row = Vec::with_capacity(j);
        for (i, &tau) in track.taus.iter().enumerate() {
            basis.values_into(tau, &mut row);
            for (k, v) in row.iter().enumerate() {
                b[(i, k)] = *v;
            }
        }
        let y = DMatrix::from_fn(m, 3, |i, d| track.coords[i][d]);
        let gram = b.transpose() * &b;
        let bty = b.transpose() * &y; // J × 3
        let phi_t_y = DVector::from_fn(3 * j, |k, _| bty[(k % j, k / j)]);
        Self {
            basis: b,
            y,
            gram,
            phi_t_y,
        }
    }

    /// Number of points M_n.
    pub fn points(&self) -> usize {
        self.y.nrows()
    }

    pub fn basis_count(&self) -> usize {
        self.gram.nrows()
    }

    pub fn phi_t_y(&self) -> &DVector<f64> {
        &self.phi_t_y
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// The explicit 3M × 3J design matrix, point-major: rows `3i..3i+3`
    /// hold Φ(τ_i).
    pub fn stacked_phi(&self) -> DMatrix<f64> {
        let (m, j) = self.basis.shape();
        let mut phi = DMatrix::zeros(3 * m, 3 * j);
        for i in 0..m {
            for d in 0..3 {
                for k in 0..j {
                    phi[(3 * i + d, d * j + k)] = self.basis[(i, k)];
                }
            }
        }
        phi
    }

    /// The stacked 3M observation vector matching [`Design::stacked_phi`].
    pub fn stacked_y(&self) -> DVector<f64> {
        let m = self.points();
        DVector::from_fn(3 * m, |r, _| self.y[(r / 3, r % 3)])
    }

    /// Σᵢ ‖y_i − Φ(τ_i) w‖² computed point by point.
    pub fn residual_sq(&self, w: &DVector<f64>) -> f64 {
        let j = self.basis_count();
        let mut total = 0.0;
        for d in 0..3 {
            let pred = &self.basis * w.rows(d * j, j);
            total += self
                .y
                .column(d)
                .iter()
                .zip(pred.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        total
    }

    /// Tr(ΦᵀΦ X) for a 3J × 3J matrix X.
    pub fn trace_gram(&self, x: &DMatrix<f64>) -> f64 {
        let j = self.basis_count();
        (0..3)
            .map(|d| {
                self.gram
                    .component_mul(&x.view((d * j, d * j), (j, j)))
                    .sum()
            })
            .sum()
    }

    /// ΦᵀΦ X for a 3J × k matrix X.
    pub fn gram_apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let j = self.basis_count();
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for d in 0..3 {
            let block = &self.gram * x.rows(d * j, j);
            out.rows_mut(d * j, j).copy_from(&block);
        }
        out
    }
}

/// Posterior of one trajectory's weights.
#[derive(Debug, Clone)]
pub struct Expectation {
    /// E[w_n].
    pub mean: DVector<f64>,
    /// S_n, the posterior covariance.
    pub cov: DMatrix<f64>,
    /// ln |S_n|.
    pub log_det_cov: f64,
}

impl Expectation {
    /// E[w_n w_nᵀ] = S_n + E[w_n] E[w_n]ᵀ.
    pub fn second_moment(&self) -> DMatrix<f64> {
        &self.cov + &self.mean * self.mean.transpose()
    }
}

fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what} has non-finite entries"
        )));
    }
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// A⁻¹ = L⁻ᵀ L⁻¹ from the Cholesky factor of A. L⁻¹ is built column by
/// column with contiguous axpy updates; the product is a single gemm.
fn cholesky_inverse(c: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    let l = c.l_dirty();
    let n = l.nrows();
    let ls = l.as_slice();
    let mut linv = DMatrix::<f64>::zeros(n, n);
    for (j, x) in linv.as_mut_slice().chunks_exact_mut(n).enumerate() {
        x[j] = 1.0;
        for k in j..n {
            let lk = &ls[k * n..(k + 1) * n];
            x[k] /= lk[k];
            let xk = x[k];
            for (xi, li) in x[k + 1..].iter_mut().zip(&lk[k + 1..]) {
                *xi -= li * xk;
            }
        }
    }
    let mut inv = linv.transpose() * &linv;
    symmetrize(&mut inv);
    inv
}

/// ln |A| from a Cholesky factor of A.
fn log_det_factor(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for k in (i + 1)..n {
            let v = 0.5 * (m[(i, k)] + m[(k, i)]);
            m[(i, k)] = v;
            m[(k, i)] = v;
        }
    }
}

/// Posterior moments of every trajectory's weights under `params`:
/// S_n = (Σ⁻¹ + β Φ_nᵀ Φ_n)⁻¹ and E[w_n] = S_n (β Φ_nᵀ y_n + Σ⁻¹ μ).
///
/// Σ⁻¹ is formed once per call; each trajectory then needs one Cholesky
/// factorisation of a 3J × 3J matrix and its inverse.
pub fn e_step(params: &ModelParams, designs: &[Design], exec: Exec) -> Result<Vec<Expectation>> {
    if !(params.beta > 0.0) {
        return Err(invalid("beta", "precision must be positive"));
    }
    let chol = cholesky(&params.sigma, "Sigma")?;
    let precision = cholesky_inverse(&chol);
    let sigma_inv_mu = chol.solve(&params.mu);
    let beta = params.beta;

    let results = exec.map(designs, |design| -> Result<Expectation> {
        let j = design.basis_count();
        let mut info = precision.clone();
        for d in 0..3 {
            let mut block = info.view_mut((d * j, d * j), (j, j));
            block.zip_apply(&design.gram, |a, g| *a += beta * g);
        }
        let ic = cholesky(&info, "posterior precision")?;
        let cov = cholesky_inverse(&ic);
        let mean = ic.solve(&(design.phi_t_y() * beta + &sigma_inv_mu));
        let log_det_cov = -log_det_factor(&ic);
        Ok(Expectation {
            mean,
            cov,
            log_det_cov,
        })
    });
    results.into_iter().collect()
}

/// Outcome of [`m_step`].
#[derive(Debug, Clone)]
pub struct MStep {
    pub params: ModelParams,
    /// Ridge added to the diagonal of Σ̂ when it failed to factor.
    pub ridge: Option<f64>,
}

/// Maximum-likelihood update of (μ, Σ, β) from the posterior moments.
///
/// Σ̂ is the second moment about the updated μ̂,
/// `(1/N) Σ (E[wwᵀ] − E[w] μ̂ᵀ − μ̂ E[w]ᵀ + μ̂ μ̂ᵀ)`, accumulated as
/// `S_n + (E[w_n] − μ̂)(E[w_n] − μ̂)ᵀ` and symmetrised.
pub fn m_step(expectations: &[Expectation], designs: &[Design]) -> Result<MStep> {
    let n = expectations.len();
    if n == 0 || n != designs.len() {
        return Err(invalid(
            "expectations",
            "need one expectation per design, N >= 1",
        ));
    }
    let dim = expectations[0].mean.len();
    let inv_n = 1.0 / n as f64;

    let mut mu = DVector::zeros(dim);
    for e in expectations {
        mu += &e.mean;
    }
    mu *= inv_n;

    let mut sigma = DMatrix::zeros(dim, dim);
    for e in expectations {
        let dev = &e.mean - &mu;
        sigma += &e.cov;
        sigma.ger(1.0, &dev, &dev, 1.0);
    }
    sigma *= inv_n;
    symmetrize(&mut sigma);

    let mut ridge = None;
    if Cholesky::new(sigma.clone()).is_none() {
        let base = (sigma.trace() / dim as f64).abs().max(f64::MIN_POSITIVE);
        let mut r = 1e-10 * base;
        loop {
            let mut candidate = sigma.clone();
            for i in 0..dim {
                candidate[(i, i)] += r;
            }
            if Cholesky::new(candidate.clone()).is_some() {
                sigma = candidate;
                ridge = Some(r);
                break;
            }
            r *= 10.0;
            if !r.is_finite() || r > 1e6 * base {
                return Err(Error::NotPositiveDefinite("Sigma-hat after ridge".into()));
            }
        }
    }

    let total_points: usize = designs.iter().map(Design::points).sum();
    let mut sum = 0.0;
    for (e, d) in expectations.iter().zip(designs) {
        sum += d.residual_sq(&e.mean) + d.trace_gram(&e.cov);
    }
    let noise_var = (sum / (3 * total_points) as f64).max(MIN_NOISE_VARIANCE);

    Ok(MStep {
        params: ModelParams {
            mu,
            sigma,
            beta: 1.0 / noise_var,
        },
        ridge,
    })
}

/// Expected complete-data negative log-likelihood (constants dropped):
///
/// ```text
/// −(3M*/2) ln β + (β/2) Σ_n {yᵀy − 2yᵀΦE[w] + Tr(ΦᵀΦ E[wwᵀ])}
///   + (N/2) ln|Σ| + ½ Σ_n Tr(Σ⁻¹ (E[wwᵀ] − E[w]μᵀ − μE[w]ᵀ + μμᵀ))
/// ```
pub fn neg_log_likelihood(
    params: &ModelParams,
    expectations: &[Expectation],
    designs: &[Design],
) -> Result<f64> {
    let chol = cholesky(&params.sigma, "Sigma")?;
    let n = expectations.len() as f64;
    let total_points: usize = designs.iter().map(Design::points).sum();
    let beta = params.beta;

    let mut data_term = 0.0;
    let mut spread = DMatrix::zeros(params.dim(), params.dim());
    for (e, d) in expectations.iter().zip(designs) {
        data_term += d.residual_sq(&e.mean) + d.trace_gram(&e.cov);
        let dev = &e.mean - &params.mu;
        spread += &e.cov;
        spread.ger(1.0, &dev, &dev, 1.0);
    }
    let log_det_sigma = log_det_factor(&chol);
    let prior_term = chol.solve(&spread).trace();

    Ok(-((3 * total_points) as f64) / 2.0 * beta.ln()
        + beta / 2.0 * data_term
        + n / 2.0 * log_det_sigma
        + 0.5 * prior_term)
}

/// Variational free energy: the expected complete-data negative
/// log-likelihood with all constants, minus the entropy of the posteriors.
///
/// Evaluated at the parameters that produced `expectations` it equals
/// [`marginal_neg_log_likelihood`]; for any other parameters it is an upper
/// bound on it. Along EM, the value at (θ_{k+1}, q_k) is therefore
/// non-increasing in k.
pub fn free_energy(
    params: &ModelParams,
    expectations: &[Expectation],
    designs: &[Design],
) -> Result<f64> {
    let q = neg_log_likelihood(params, expectations, designs)?;
    let total_points: usize = designs.iter().map(Design::points).sum();
    let dim = params.dim() as f64;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let entropy: f64 = expectations
        .iter()
        .map(|e| 0.5 * (dim + e.log_det_cov))
        .sum();
    Ok(q + 0.5 * (3 * total_points) as f64 * ln_2pi - entropy)
}

/// Exact negative log marginal likelihood −ln Π_n N(y_n; Φ_n μ, Φ_n Σ Φ_nᵀ + β⁻¹I),
/// evaluated through the same factorisation as the E-step.
pub fn marginal_neg_log_likelihood(params: &ModelParams, designs: &[Design]) -> Result<f64> {
    let chol = cholesky(&params.sigma, "Sigma")?;
    let l = chol.l();
    let beta = params.beta;
    let dim = params.dim();
    let mut total = 0.0;
    for d in designs {
        let m3 = (3 * d.points()) as f64;
        let mut k = l.transpose() * d.gram_apply(&l) * beta;
        for i in 0..dim {
            k[(i, i)] += 1.0;
        }
        symmetrize(&mut k);
        let kc = cholesky(&k, "I + beta L^T Phi^T Phi L")?;
        let log_det_c = log_det_factor(&kc) - m3 * beta.ln();

        // r = y − Φμ; rᵀC⁻¹r = β‖r‖² − β² (Lᵀ Φᵀ r)ᵀ K⁻¹ (Lᵀ Φᵀ r)
        let r_sq = d.residual_sq(&params.mu);
        let a_mu = d.gram_apply(&DMatrix::from_column_slice(dim, 1, params.mu.as_slice()));
        let phi_t_r = d.phi_t_y() - a_mu.column(0);
        let u = l.transpose() * phi_t_r;
        let quad = beta * r_sq - beta * beta * u.dot(&kc.solve(&u));
        total += 0.5 * (m3 * (2.0 * std::f64::consts::PI).ln() + log_det_c + quad);
    }
    Ok(total)
}

/// EM settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSettings {
    /// a in the initial Σ = a·I.
    pub prior_scale: f64,
    pub initial_beta: f64,
    /// Absolute change of the negative log-likelihood that stops the loop.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for EmSettings {
    fn default() -> Self {
        Self {
            prior_scale: 1e3,
            initial_beta: 1e3,
            tol: 1e-3,
            max_iterations: 500,
        }
    }
}

impl EmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_scale > 0.0 && self.prior_scale.is_finite()) {
            return Err(invalid("prior_scale", "must be positive"));
        }
        if !(self.initial_beta > 0.0 && self.initial_beta.is_finite()) {
            return Err(invalid("initial_beta", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be positive"));
        }
        Ok(())
    }
}

/// Stepwise EM driver.
#[derive(Debug, Clone)]
pub struct EmFitter {
    designs: Vec<Design>,
    params: ModelParams,
    settings: EmSettings,
    exec: Exec,
    trace: Vec<f64>,
    ridge_events: usize,
}

impl EmFitter {
    pub fn new(
        basis: &BasisSet,
        tracks: &[NormalizedTrack],
        settings: EmSettings,
        exec: Exec,
    ) -> Result<Self> {
        settings.validate()?;
        if tracks.is_empty() {
            return Err(invalid("cluster", "no trajectories to fit"));
        }
        if let Some(t) = tracks.iter().find(|t| t.len() < 2) {
            return Err(Error::InvalidTrajectory {
                id: t.id.clone(),
                message: "fewer than 2 points".into(),
            });
        }
        let designs = exec.map(tracks, |t| Design::new(basis, t));
        let params = ModelParams::initial(
            3 * basis.count(),
            settings.prior_scale,
            settings.initial_beta,
        );
        Ok(Self {
            designs,
            params,
            settings,
            exec,
            trace: Vec::new(),
            ridge_events: 0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn designs(&self) -> &[Design] {
        &self.designs
    }

    /// Negative log-likelihood after each completed iteration.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn ridge_events(&self) -> usize {
        self.ridge_events
    }

    pub fn converged(&self) -> bool {
        match self.trace.as_slice() {
            [.., a, b] => (b - a).abs() <= self.settings.tol,
            _ => false,
        }
    }

    /// One E-step + M-step. Returns the negative log-likelihood of the new
    /// parameters under the expectations used to produce them.
    pub fn step(&mut self) -> Result<f64> {
        let expectations = e_step(&self.params, &self.designs, self.exec)?;
        let update = m_step(&expectations, &self.designs)?;
        if update.ridge.is_some() {
            self.ridge_events += 1;
        }
        let nll = neg_log_likelihood(&update.params, &expectations, &self.designs)?;
        self.params = update.params;
        self.trace.push(nll);
        Ok(nll)
    }

    /// Iterate until converged or the iteration cap is hit.
    pub fn run(mut self) -> Result<EmOutcome> {
        while !self.converged() && self.iterations() < self.settings.max_iterations {
            self.step()?;
        }
        Ok(EmOutcome {
            converged: self.converged(),
            params: self.params,
            trace: self.trace,
            ridge_events: self.ridge_events,
            total_points: self.designs.iter().map(Design::points).sum(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub params: ModelParams,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub ridge_events: usize,
    pub total_points: usize,
}

pub fn em_fit(
    basis: &BasisSet,
    tracks: &[NormalizedTrack],
    settings: EmSettings,
) -> Result<EmOutcome> {
    EmFitter::new(basis, tracks, settings, Exec::default())?.run()
}
