//! TOML run configuration. Every section is optional; missing keys take
//! their defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use corridor_core::clustering::ClusteringParams;
use corridor_core::footprint::GridSpec;
use corridor_core::gp::{BasisSet, EmSettings};
use corridor_core::representative::{GenerationSettings, RepresentativeScheme, Ring, SearchWindow};
use corridor_core::synth::SynthConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub input: InputConfig,
    pub clustering: ClusteringConfig,
    pub model: ModelConfig,
    pub representative: RepresentativeConfig,
    pub footprint: FootprintConfig,
    pub synth: SynthSection,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub trajectories: Option<PathBuf>,
    pub airport: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub resample_steps: usize,
    pub variance_retained: f64,
    pub eps: f64,
    pub min_pts: usize,
    pub min_cluster_size: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let p = ClusteringParams::default();
        Self {
            resample_steps: p.resample_steps,
            variance_retained: p.variance_retained,
            eps: p.eps,
            min_pts: p.min_pts,
            min_cluster_size: p.min_cluster_size,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub basis_count: usize,
    pub prior_scale: f64,
    pub initial_beta: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let s = EmSettings::default();
        Self {
            basis_count: 18,
            prior_scale: s.prior_scale,
            initial_beta: s.initial_beta,
            tol: s.tol,
            max_iterations: s.max_iterations,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepresentativeConfig {
    /// Built-in scheme names ("flat", "round") to generate.
    pub schemes: Vec<String>,
    pub custom: Vec<CustomScheme>,
    pub steps: usize,
    pub d_tau: f64,
    /// Half-width, in steps, of the sample window searched for the
    /// farthest ellipsoid. Absent means every step.
    pub search_window: Option<usize>,
}

impl Default for RepresentativeConfig {
    fn default() -> Self {
        let g = GenerationSettings::default();
        Self {
            schemes: vec!["flat".into(), "round".into()],
            custom: Vec::new(),
            steps: g.steps,
            d_tau: g.d_tau,
            search_window: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomScheme {
    pub name: String,
    pub dof: u32,
    pub rings: Vec<RingConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FootprintConfig {
    pub range_m: f64,
    /// Trajectories are cut to their airport-side run below this altitude
    /// before fitting and footprint evaluation.
    pub altitude_cutoff_m: f64,
    /// Cells along the longer side of the default grid.
    pub cells: usize,
    /// Explicit grid; overrides the default bounding-box grid.
    pub grid: Option<GridConfig>,
}

impl Default for FootprintConfig {
    fn default() -> Self {
        Self {
            range_m: corridor_core::footprint::DEFAULT_RANGE_M,
            altitude_cutoff_m: 500.0,
            cells: corridor_core::footprint::DEFAULT_CELLS,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub origin_east_m: f64,
    pub origin_north_m: f64,
    pub cell_m: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub per_corridor: usize,
    pub points_min: usize,
    pub points_max: usize,
    pub lateral_sigma_m: f64,
    pub climb_sigma: f64,
    pub noise_m: f64,
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self {
            per_corridor: s.per_corridor,
            points_min: s.points_min,
            points_max: s.points_max,
            lateral_sigma_m: s.lateral_sigma_m,
            climb_sigma: s.climb_sigma,
            noise_m: s.noise_m,
            outlier_fraction: s.outlier_fraction,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plots: true,
        }
    }
}

impl Config {
    /// Read a config file. Relative input paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg =
            Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.input.trajectories, &mut cfg.input.airport]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn clustering_params(&self) -> Result<ClusteringParams> {
        let c = &self.clustering;
        let p = ClusteringParams {
            resample_steps: c.resample_steps,
            variance_retained: c.variance_retained,
            eps: c.eps,
            min_pts: c.min_pts,
            min_cluster_size: c.min_cluster_size,
        };
        p.validate().context("[clustering]")?;
        Ok(p)
    }

    pub fn basis(&self) -> Result<BasisSet> {
        BasisSet::uniform(self.model.basis_count).context("[model] basis_count")
    }

    pub fn em_settings(&self) -> Result<EmSettings> {
        let m = &self.model;
        let s = EmSettings {
            prior_scale: m.prior_scale,
            initial_beta: m.initial_beta,
            tol: m.tol,
            max_iterations: m.max_iterations,
        };
        s.validate().context("[model]")?;
        Ok(s)
    }

    pub fn generation(&self) -> Result<GenerationSettings> {
        let r = &self.representative;
        let g = GenerationSettings {
            steps: r.steps,
            d_tau: r.d_tau,
            search: r
                .search_window
                .map_or(SearchWindow::All, SearchWindow::Steps),
        };
        g.validate().context("[representative]")?;
        Ok(g)
    }

    /// Built-in schemes in the listed order, then custom schemes.
    pub fn schemes(&self) -> Result<Vec<RepresentativeScheme>> {
        let mut out = Vec::new();
        for name in &self.representative.schemes {
            out.push(match name.as_str() {
                "flat" => RepresentativeScheme::flat(),
                "round" => RepresentativeScheme::round(),
                other => bail!(
                    "[representative] schemes: unknown scheme `{other}` (expected flat or round)"
                ),
            });
        }
        for c in &self.representative.custom {
            let rings = c
                .rings
                .iter()
                .map(|r| Ring::new(r.radius, r.lower, r.upper, r.angles.clone()))
                .collect();
            out.push(
                RepresentativeScheme::new(c.name.clone(), c.dof, rings)
                    .with_context(|| format!("[representative] custom scheme `{}`", c.name))?,
            );
        }
        let mut names: Vec<&str> = out.iter().map(|s| s.name()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            bail!("[representative] scheme `{}` listed twice", w[0]);
        }
        for s in &out {
            if s.name().is_empty()
                || !s
                    .name()
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                bail!("[representative] scheme name `{}` must be non-empty ASCII letters, digits, - or _", s.name());
            }
        }
        Ok(out)
    }

    pub fn explicit_grid(&self) -> Result<Option<GridSpec>> {
        self.footprint
            .grid
            .map(|g| GridSpec::new([g.origin_east_m, g.origin_north_m], g.cell_m, g.nx, g.ny))
            .transpose()
            .context("[footprint] grid")
    }

    pub fn validate_footprint(&self) -> Result<()> {
        let f = &self.footprint;
        if !(f.range_m > 0.0 && f.range_m.is_finite()) {
            bail!("[footprint] range_m must be positive");
        }
        if !f.altitude_cutoff_m.is_finite() {
            bail!("[footprint] altitude_cutoff_m must be finite");
        }
        if f.cells == 0 {
            bail!("[footprint] cells must be positive");
        }
        self.explicit_grid()?;
        Ok(())
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let s = &self.synth;
        let c = SynthConfig {
            per_corridor: s.per_corridor,
            points_min: s.points_min,
            points_max: s.points_max,
            lateral_sigma_m: s.lateral_sigma_m,
            climb_sigma: s.climb_sigma,
            noise_m: s.noise_m,
            outlier_fraction: s.outlier_fraction,
            ..SynthConfig::default()
        };
        c.validate().context("[synth]")?;
        Ok(c)
    }

    pub fn trajectories_path(&self) -> Result<&Path> {
        let p = self
            .input
            .trajectories
            .as_deref()
            .context("[input] trajectories is not set")?;
        if !p.is_file() {
            bail!("[input] trajectories: {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn airport_path(&self) -> Result<&Path> {
        let p = self
            .input
            .airport
            .as_deref()
            .context("[input] airport is not set")?;
        if !p.is_file() {
            bail!("[input] airport: {} does not exist", p.display());
        }
        Ok(p)
    }

    /// Every parameter section, without touching the filesystem.
    pub fn validate_parameters(&self) -> Result<()> {
        self.clustering_params()?;
        self.basis()?;
        self.em_settings()?;
        self.generation()?;
        self.schemes()?;
        self.validate_footprint()?;
        Ok(())
    }
}
