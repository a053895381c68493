//! The pipeline stages. Each stage validates its configuration and reads
//! every input before it creates any output file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use corridor_core::clustering::{cluster_trajectories_with, write_assignments};
use corridor_core::footprint::{
    compare_footprints, footprint_raw, footprint_weighted, read_grid, read_grid_inferred,
    write_grid, FootprintComparison, FootprintGrid, GridSpec, GRID_HEADER,
};
use corridor_core::gp::TrajectoryModel;
use corridor_core::representative::{
    generate_representatives, read_representatives, write_representatives, WeightedTrajectory,
    REPRESENTATIVE_HEADER,
};
use corridor_core::synth::{default_airport, default_corridors, generate_corridors};
use corridor_core::track::{
    assign_runway, classify_phase, filter_altitude, parse_trajectories, write_trajectories,
    AirportGeometry, Phase, Trajectory, TRAJECTORY_HEADER,
};
use corridor_core::Exec;

use crate::config::Config;
use crate::plot;

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const AIRPORT_FILE: &str = "airport.txt";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const CLUSTER_SUMMARY_FILE: &str = "cluster_summary.txt";
pub const CLUSTERS_DIR: &str = "clusters";
pub const MODELS_DIR: &str = "models";
pub const FIT_REPORT_FILE: &str = "fit_report.csv";
pub const GRID_SPEC_FILE: &str = "grid.txt";
pub const RAW_LABEL: &str = "raw";
pub const PLOTS_DIR: &str = "plots";

pub fn cluster_file_name(id: usize) -> String {
    format!("cluster_{id:03}.csv")
}

pub fn model_file_name(id: usize) -> String {
    format!("cluster_{id:03}.model")
}

pub fn representatives_file_name(scheme: &str) -> String {
    format!("representatives_{scheme}.csv")
}

pub fn footprint_file_name(label: &str) -> String {
    format!("footprint_{label}.csv")
}

pub fn comparison_file_name(label: &str) -> String {
    format!("comparison_{label}.txt")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn read_trajectory_file(path: &Path) -> Result<(Vec<Trajectory>, Vec<String>)> {
    let parsed =
        parse_trajectories(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    Ok((parsed.trajectories, parsed.rejected_short))
}

fn read_airport(path: &Path) -> Result<AirportGeometry> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    AirportGeometry::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The cluster id encoded in a `cluster_<k>` file stem.
pub fn cluster_id_from_path(path: &Path) -> Option<usize> {
    path.file_stem()?
        .to_str()?
        .strip_prefix("cluster_")?
        .parse()
        .ok()
}

/// Cluster ids for a list of files: from the file names when every name
/// carries one, otherwise by position.
fn cluster_ids(files: &[PathBuf]) -> Result<Vec<usize>> {
    let named: Option<Vec<usize>> = files.iter().map(|f| cluster_id_from_path(f)).collect();
    let ids = named.unwrap_or_else(|| (0..files.len()).collect());
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        bail!("two input files map to the same cluster id");
    }
    Ok(ids)
}

/// Files in `dir` with the given extension, sorted by name.
pub fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == extension) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn require_files(files: &[PathBuf], what: &str) -> Result<()> {
    if files.is_empty() {
        bail!("no {what} given");
    }
    for f in files {
        if !f.is_file() {
            bail!("{what}: {} does not exist", f.display());
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SynthReport {
    pub trajectories: usize,
}

/// Write a seeded synthetic corridor dataset and its airport geometry.
pub fn synth(cfg: &Config, out: &Path, seed: Option<u64>) -> Result<SynthReport> {
    let synth = cfg.synth_config()?;
    let seed = seed.unwrap_or(cfg.synth.seed);
    let tracks = generate_corridors(&default_corridors(), &synth, seed)?;
    let mut w = create(&out.join(TRAJECTORIES_FILE))?;
    write_trajectories(&mut w, &tracks)?;
    w.flush()?;
    write_text(&out.join(AIRPORT_FILE), &default_airport().to_text())?;
    Ok(SynthReport {
        trajectories: tracks.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub cluster: usize,
    pub phase: Phase,
    pub runway: String,
    pub size: usize,
}

#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub trajectories: usize,
    pub rejected_short: usize,
    pub outliers: usize,
    pub clusters: Vec<ClusterRow>,
    pub files: Vec<PathBuf>,
}

impl ClusterReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "trajectories = {}", self.trajectories);
        let _ = writeln!(s, "rejected_short = {}", self.rejected_short);
        let _ = writeln!(s, "clusters = {}", self.clusters.len());
        let _ = writeln!(s, "outliers = {}", self.outliers);
        let _ = writeln!(s);
        let _ = writeln!(s, "cluster,phase,runway,size");
        for c in &self.clusters {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                c.cluster,
                c.phase.as_str(),
                c.runway,
                c.size
            );
        }
        s
    }
}

/// Split the input by (phase, runway) and cluster each group. Cluster ids
/// run over all groups in (phase, runway) order.
pub fn cluster(cfg: &Config, out: &Path, exec: Exec) -> Result<ClusterReport> {
    let params = cfg.clustering_params()?;
    let traj_path = cfg.trajectories_path()?;
    let airport = read_airport(cfg.airport_path()?)?;
    let (tracks, rejected) = read_trajectory_file(traj_path)?;
    if tracks.is_empty() {
        bail!("no trajectories parsed from {}", traj_path.display());
    }

    let mut groups: BTreeMap<(Phase, String), Vec<usize>> = BTreeMap::new();
    for (i, t) in tracks.iter().enumerate() {
        let phase = classify_phase(t, &airport);
        let runway = assign_runway(t, &airport, phase).to_string();
        groups.entry((phase, runway)).or_default().push(i);
    }

    let mut labels = vec![None; tracks.len()];
    let mut rows = Vec::new();
    let mut members = Vec::new();
    for ((phase, runway), idx) in &groups {
        let group: Vec<Trajectory> = idx.iter().map(|&i| tracks[i].clone()).collect();
        let result = cluster_trajectories_with(&group, &params, exec)
            .with_context(|| format!("clustering {} runway {runway}", phase.as_str()))?;
        for c in result.clusters {
            let id = rows.len();
            let global: Vec<usize> = c.iter().map(|&k| idx[k]).collect();
            for &g in &global {
                labels[g] = Some(id);
            }
            rows.push(ClusterRow {
                cluster: id,
                phase: *phase,
                runway: runway.clone(),
                size: global.len(),
            });
            members.push(global);
        }
    }

    let mut w = create(&out.join(ASSIGNMENTS_FILE))?;
    write_assignments(&mut w, &tracks, &labels)?;
    w.flush()?;
    let mut files = Vec::new();
    for (id, m) in members.iter().enumerate() {
        let path = out.join(CLUSTERS_DIR).join(cluster_file_name(id));
        let subset: Vec<Trajectory> = m.iter().map(|&i| tracks[i].clone()).collect();
        let mut w = create(&path)?;
        write_trajectories(&mut w, &subset)?;
        w.flush()?;
        files.push(path);
    }
    let report = ClusterReport {
        trajectories: tracks.len(),
        rejected_short: rejected.len(),
        outliers: labels.iter().filter(|l| l.is_none()).count(),
        clusters: rows,
        files,
    };
    write_text(&out.join(CLUSTER_SUMMARY_FILE), &report.to_text())?;
    Ok(report)
}

/// One cluster file after the altitude cutoff.
#[derive(Debug, Clone)]
pub struct LoadedCluster {
    pub id: usize,
    pub path: PathBuf,
    pub trajectories: Vec<Trajectory>,
    /// Trajectories with fewer than two points below the cutoff.
    pub dropped: usize,
}

/// Read cluster files and keep each trajectory's airport-side run below
/// the configured altitude cutoff.
pub fn load_clusters(cfg: &Config, files: &[PathBuf]) -> Result<Vec<LoadedCluster>> {
    require_files(files, "cluster files")?;
    let airport = read_airport(cfg.airport_path()?)?;
    let cutoff = cfg.footprint.altitude_cutoff_m;
    let ids = cluster_ids(files)?;
    let mut out = Vec::new();
    for (path, id) in files.iter().zip(ids) {
        let (tracks, rejected) = read_trajectory_file(path)?;
        if let Some(bad) = rejected.first() {
            bail!(
                "{}: trajectory `{bad}` has a single point (zero duration) and cannot be fitted",
                path.display()
            );
        }
        if tracks.is_empty() {
            bail!("{}: no trajectories parsed", path.display());
        }
        let kept: Vec<Trajectory> = tracks
            .iter()
            .filter_map(|t| filter_altitude(t, classify_phase(t, &airport), cutoff))
            .collect();
        if kept.is_empty() {
            bail!(
                "{}: no trajectory has two points below the altitude cutoff of {cutoff} m",
                path.display()
            );
        }
        out.push(LoadedCluster {
            id,
            path: path.clone(),
            dropped: tracks.len() - kept.len(),
            trajectories: kept,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FitRow {
    pub cluster: usize,
    pub n_trajectories: usize,
    pub dropped: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_neg_log_likelihood: f64,
    pub ridge_events: usize,
    pub model_file: PathBuf,
}

pub fn fit_report_text(rows: &[FitRow]) -> String {
    let mut s = String::from(
        "cluster,n_trajectories,dropped_by_altitude,iterations,converged,final_neg_log_likelihood,ridge_events\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.cluster,
            r.n_trajectories,
            r.dropped,
            r.iterations,
            r.converged,
            r.final_neg_log_likelihood,
            r.ridge_events
        );
    }
    s
}

/// Fit one model per cluster file.
pub fn fit(cfg: &Config, cluster_files: &[PathBuf], out: &Path, exec: Exec) -> Result<Vec<FitRow>> {
    let basis = cfg.basis()?;
    let settings = cfg.em_settings()?;
    let clusters = load_clusters(cfg, cluster_files)?;
    let mut models = Vec::new();
    for c in &clusters {
        let model = TrajectoryModel::fit_with(&c.trajectories, basis.clone(), settings, exec)
            .with_context(|| format!("fitting {}", c.path.display()))?;
        models.push(model);
    }
    let mut rows = Vec::new();
    for (c, m) in clusters.iter().zip(&models) {
        let path = out.join(MODELS_DIR).join(model_file_name(c.id));
        write_text(&path, &m.to_text())?;
        rows.push(FitRow {
            cluster: c.id,
            n_trajectories: m.n_trajectories,
            dropped: c.dropped,
            iterations: m.iterations(),
            converged: m.converged,
            final_neg_log_likelihood: m
                .neg_log_likelihood_trace
                .last()
                .copied()
                .unwrap_or(f64::NAN),
            ridge_events: m.ridge_events,
            model_file: path,
        });
    }
    write_text(&out.join(FIT_REPORT_FILE), &fit_report_text(&rows))?;
    Ok(rows)
}

/// Models keyed by cluster id.
pub fn load_models(files: &[PathBuf]) -> Result<BTreeMap<usize, TrajectoryModel>> {
    require_files(files, "model files")?;
    let ids = cluster_ids(files)?;
    let mut out = BTreeMap::new();
    for (path, id) in files.iter().zip(ids) {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let model = TrajectoryModel::from_text(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        out.insert(id, model);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GenerateRow {
    pub scheme: String,
    pub trajectories: usize,
    pub file: PathBuf,
}

/// Representatives of every model under every configured scheme, one CSV
/// per scheme.
pub fn generate(
    cfg: &Config,
    model_files: &[PathBuf],
    out: &Path,
    exec: Exec,
) -> Result<Vec<GenerateRow>> {
    let schemes = cfg.schemes()?;
    let settings = cfg.generation()?;
    if schemes.is_empty() {
        bail!("[representative] no schemes selected");
    }
    let models = load_models(model_files)?;
    let mut all = Vec::new();
    for scheme in &schemes {
        let mut reps = Vec::new();
        for (&id, model) in &models {
            reps.extend(
                generate_representatives(model, scheme, id, &settings, exec)
                    .with_context(|| format!("cluster {id}, scheme {}", scheme.name()))?,
            );
        }
        all.push((scheme.name().to_string(), reps));
    }
    let mut rows = Vec::new();
    for (name, reps) in all {
        let path = out.join(representatives_file_name(&name));
        let mut w = create(&path)?;
        write_representatives(&mut w, &reps)?;
        w.flush()?;
        rows.push(GenerateRow {
            scheme: name,
            trajectories: reps.len(),
            file: path,
        });
    }
    Ok(rows)
}

/// What a footprint input file holds, judged by its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Trajectories,
    Representatives,
}

pub fn detect_input(path: &Path) -> Result<InputKind> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<&str> = text
        .lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .collect();
    if header == TRAJECTORY_HEADER {
        Ok(InputKind::Trajectories)
    } else if header == REPRESENTATIVE_HEADER {
        Ok(InputKind::Representatives)
    } else {
        bail!(
            "{}: header is neither `{}` nor `{}`",
            path.display(),
            TRAJECTORY_HEADER.join(","),
            REPRESENTATIVE_HEADER.join(",")
        )
    }
}

/// A footprint request: either raw cluster files, or one representative
/// file weighted by the sizes recorded in the models.
#[derive(Debug, Clone)]
pub enum FootprintInput {
    Raw {
        cluster_files: Vec<PathBuf>,
    },
    Weighted {
        representatives: PathBuf,
        model_files: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone)]
pub struct FootprintReport {
    pub label: String,
    pub grid: FootprintGrid,
    pub n_total: usize,
    pub file: PathBuf,
}

/// Explicit grid from the config, else the grid file in `out`.
fn known_grid(cfg: &Config, out: &Path) -> Result<Option<GridSpec>> {
    if let Some(g) = cfg.explicit_grid()? {
        return Ok(Some(g));
    }
    let path = out.join(GRID_SPEC_FILE);
    if path.is_file() {
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Some(
            GridSpec::from_text(&text).with_context(|| format!("parsing {}", path.display()))?,
        ));
    }
    Ok(None)
}

/// Label of a representative file: `representatives_round.csv` → `round`.
pub fn representatives_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("weighted");
    stem.strip_prefix("representatives_")
        .unwrap_or(stem)
        .to_string()
}

pub fn footprint(
    cfg: &Config,
    input: &FootprintInput,
    out: &Path,
    exec: Exec,
) -> Result<FootprintReport> {
    cfg.validate_footprint()?;
    let range = cfg.footprint.range_m;
    match input {
        FootprintInput::Raw { cluster_files } => {
            let clusters = load_clusters(cfg, cluster_files)?;
            let tracks: Vec<Trajectory> =
                clusters.into_iter().flat_map(|c| c.trajectories).collect();
            let spec = match cfg.explicit_grid()? {
                Some(g) => g,
                None => GridSpec::covering(&tracks, range, cfg.footprint.cells)?,
            };
            let grid = footprint_raw(&tracks, &spec, range, tracks.len(), exec)?;
            write_text(&out.join(GRID_SPEC_FILE), &spec.to_text())?;
            let file = out.join(footprint_file_name(RAW_LABEL));
            write_grid_file(&file, &grid)?;
            Ok(FootprintReport {
                label: RAW_LABEL.into(),
                grid,
                n_total: tracks.len(),
                file,
            })
        }
        FootprintInput::Weighted {
            representatives,
            model_files,
        } => {
            require_files(std::slice::from_ref(representatives), "representative file")?;
            let spec = known_grid(cfg, out)?.with_context(|| {
                format!(
                    "no grid: set [footprint] grid or compute the raw footprint first (writes {GRID_SPEC_FILE})"
                )
            })?;
            let models = load_models(model_files)?;
            let reps = read_representatives(open(representatives)?)
                .with_context(|| format!("reading {}", representatives.display()))?;
            let sizes: BTreeMap<usize, usize> =
                models.iter().map(|(&k, m)| (k, m.n_trajectories)).collect();
            let n_total: usize = sizes.values().sum();
            let grid = footprint_weighted(&reps, &sizes, n_total, &spec, range, exec)
                .with_context(|| format!("weighting {}", representatives.display()))?;
            let label = representatives_label(representatives);
            let file = out.join(footprint_file_name(&label));
            write_grid_file(&file, &grid)?;
            Ok(FootprintReport {
                label,
                grid,
                n_total,
                file,
            })
        }
    }
}

fn write_grid_file(path: &Path, grid: &FootprintGrid) -> Result<()> {
    let mut w = create(path)?;
    write_grid(&mut w, grid)?;
    w.flush()?;
    Ok(())
}

/// Read a grid CSV, using the spec in `grid_spec` when given.
pub fn read_grid_file(
    path: &Path,
    grid_spec: Option<&GridSpec>,
    range: f64,
) -> Result<FootprintGrid> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.lines().next().map(|h| h.trim()) != Some(&GRID_HEADER.join(",")[..]) {
        bail!(
            "{}: expected header `{}`",
            path.display(),
            GRID_HEADER.join(",")
        );
    }
    let grid = match grid_spec {
        Some(s) => read_grid(text.as_bytes(), s, range),
        None => read_grid_inferred(text.as_bytes(), range),
    };
    grid.with_context(|| format!("reading {}", path.display()))
}

/// `footprint_round.csv` → `round`.
pub fn footprint_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("candidate");
    stem.strip_prefix("footprint_").unwrap_or(stem).to_string()
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub label: String,
    pub comparison: FootprintComparison,
    pub file: PathBuf,
}

/// Compare a candidate grid CSV against a reference grid CSV.
pub fn compare(
    cfg: &Config,
    candidate: &Path,
    reference: &Path,
    out: &Path,
) -> Result<CompareReport> {
    cfg.validate_footprint()?;
    require_files(
        &[candidate.to_path_buf(), reference.to_path_buf()],
        "grid files",
    )?;
    let range = cfg.footprint.range_m;
    let spec = known_grid(cfg, out)?;
    let a = read_grid_file(candidate, spec.as_ref(), range)?;
    let b = read_grid_file(reference, spec.as_ref(), range)?;
    let comparison = compare_footprints(&a, &b).with_context(|| {
        format!(
            "{} and {} use different grids",
            candidate.display(),
            reference.display()
        )
    })?;
    let label = footprint_label(candidate);
    let file = out.join(comparison_file_name(&label));
    write_text(&file, &comparison.to_text())?;
    Ok(CompareReport {
        label,
        comparison,
        file,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub clusters: ClusterReport,
    pub fits: Vec<FitRow>,
    pub generated: Vec<GenerateRow>,
    pub footprints: Vec<FootprintReport>,
    pub comparisons: Vec<CompareReport>,
}

/// cluster → fit → generate → raw footprint → weighted footprints →
/// comparisons (→ plots).
pub fn pipeline(cfg: &Config, out: &Path, exec: Exec) -> Result<PipelineReport> {
    cfg.validate_parameters()?;
    cfg.trajectories_path()?;
    cfg.airport_path()?;

    let clusters = cluster(cfg, out, exec)?;
    if clusters.files.is_empty() {
        bail!("no clusters found; nothing to fit");
    }
    let fits = fit(cfg, &clusters.files, out, exec)?;
    let model_files: Vec<PathBuf> = fits.iter().map(|f| f.model_file.clone()).collect();
    let generated = generate(cfg, &model_files, out, exec)?;

    let raw = footprint(
        cfg,
        &FootprintInput::Raw {
            cluster_files: clusters.files.clone(),
        },
        out,
        exec,
    )?;
    let mut footprints = vec![raw];
    let mut comparisons = Vec::new();
    for g in &generated {
        let fp = footprint(
            cfg,
            &FootprintInput::Weighted {
                representatives: g.file.clone(),
                model_files: model_files.clone(),
            },
            out,
            exec,
        )?;
        comparisons.push(compare(cfg, &fp.file, &footprints[0].file, out)?);
        footprints.push(fp);
    }

    if cfg.output.plots {
        write_plots(cfg, out, &clusters, &generated, &footprints)?;
    }
    Ok(PipelineReport {
        clusters,
        fits,
        generated,
        footprints,
        comparisons,
    })
}

fn write_plots(
    cfg: &Config,
    out: &Path,
    clusters: &ClusterReport,
    generated: &[GenerateRow],
    footprints: &[FootprintReport],
) -> Result<()> {
    let dir = out.join(PLOTS_DIR);
    let loaded = load_clusters(cfg, &clusters.files)?;
    let raw: Vec<(usize, &Trajectory)> = loaded
        .iter()
        .flat_map(|c| c.trajectories.iter().map(move |t| (c.id, t)))
        .collect();
    for g in generated {
        let reps: Vec<WeightedTrajectory> = read_representatives(open(&g.file)?)?;
        write_text(
            &dir.join(format!("top_view_{}.svg", g.scheme)),
            &plot::top_view(&raw, &reps, &format!("Top view, {} scheme", g.scheme)),
        )?;
        write_text(
            &dir.join(format!("side_view_{}.svg", g.scheme)),
            &plot::side_view(&raw, &reps, &format!("Side view, {} scheme", g.scheme)),
        )?;
    }
    for f in footprints {
        write_text(
            &dir.join(format!("footprint_{}.svg", f.label)),
            &plot::heat_map(&f.grid, &format!("Footprint, {}", f.label)),
        )?;
    }
    Ok(())
}
