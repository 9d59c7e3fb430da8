//! Command-line surface.

use std::path::PathBuf;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use cover_core::raster::Background;
use cover_core::scene::SceneSpec;
use cover_core::select::{Method, SelectConfig};
use nalgebra::Vector3;

use crate::config::{RunConfig, SceneSource};

#[derive(Debug, Parser)]
#[command(name = "cover", version, about = "Coverage-based next-best-view selection on synthetic Gaussian scenes")]
pub struct Cli {
    /// Maximum number of worker threads (defaults to all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    /// Parses the process arguments, exiting with a usage error on failure.
    pub fn parse_args() -> Self {
        Self::try_parse_args(std::env::args_os()).unwrap_or_else(|e| e.exit())
    }

    /// Like [`Parser::try_parse_from`], and also rejects experiment
    /// settings given alongside `run --config`.
    pub fn try_parse_args<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let mut cmd = Self::command();
        let matches = cmd.try_get_matches_from_mut(args)?;
        if let Some(("run", sub)) = matches.subcommand() {
            if sub.value_source("config") == Some(ValueSource::CommandLine) {
                let settings = RunSettings::augment_args(clap::Command::new("settings"));
                let given = settings
                    .get_arguments()
                    .map(|a| a.get_id().as_str())
                    .find(|id| sub.value_source(id) == Some(ValueSource::CommandLine));
                if let Some(id) = given {
                    let name = settings
                        .get_arguments()
                        .find(|a| a.get_id() == id)
                        .and_then(|a| a.get_long())
                        .unwrap_or(id);
                    return Err(cmd.error(
                        ErrorKind::ArgumentConflict,
                        format!("--{name} cannot be used with --config; the manifest fixes every setting"),
                    ));
                }
            }
        }
        Self::from_arg_matches(&matches)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene and write it as JSON.
    GenScene(GenSceneArgs),
    /// Run a view-selection experiment and write its curve, checkpoint,
    /// chosen views and manifest.
    Run(RunArgs),
    /// Render the coverage metric of a checkpoint from one viewpoint to a PGM image.
    RenderMetric(RenderArgs),
    /// Tabulate final PSNR and the area-under-curve gain of method curves over a random curve.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// Number of Gaussian primitives.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    pub primitives: u32,
    /// Candidate cameras available for selection.
    #[arg(long, default_value_t = 100)]
    pub candidates: usize,
    /// Held-out evaluation cameras.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub eval: u32,
    /// Seed cameras the reconstruction starts from.
    #[arg(long = "seed-cameras", default_value_t = 10)]
    pub seed_cameras: usize,
    /// Scene generation seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Image width in pixels.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub width: u32,
    /// Image height in pixels.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub height: u32,
    /// Vertical field of view in degrees.
    #[arg(long, default_value_t = 60.0)]
    pub fov: f64,
    /// Seed cameras lie within this many degrees of a random axis (180 spreads them everywhere).
    #[arg(long, default_value_t = 45.0)]
    pub seed_cap: f64,
    /// Give primitives a view-dependent colour field.
    #[arg(long)]
    pub view_dependent: bool,
}

impl SceneArgs {
    pub fn to_spec(&self) -> SceneSpec {
        SceneSpec {
            n_primitives: self.primitives as usize,
            n_candidates: self.candidates,
            n_eval: self.eval as usize,
            n_seed: self.seed_cameras,
            rng_seed: self.seed,
            view_dependent: self.view_dependent,
            image_width: self.width,
            image_height: self.height,
            fov_y_deg: self.fov,
            seed_cap_deg: self.seed_cap,
            ..SceneSpec::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct GenSceneArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Output JSON path.
    #[arg(short, long)]
    pub output: PathBuf,
}

fn parse_background(s: &str) -> Result<Background, String> {
    match s {
        "0" | "zero" => Ok(Background::Zero),
        "1" | "one" => Ok(Background::One),
        _ => Err(format!("expected 'zero' or 'one', got '{s}'")),
    }
}

fn parse_point(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected three finite comma-separated numbers, got '{s}'")),
    }
}

/// Experiment settings. Rejected when `--config` is given.
#[derive(Debug, Clone, Args)]
pub struct RunSettings {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Load the scene from a JSON file instead of generating it.
    #[arg(long)]
    pub scene_file: Option<PathBuf>,
    /// Selection method: cover, trans, view, exact_fig or random.
    #[arg(long, default_value = "cover")]
    pub method: Method,
    /// Selection rounds after the seed set.
    #[arg(long, default_value_t = crate::config::DEFAULT_ROUNDS)]
    pub rounds: usize,
    /// Number of seed cameras in the initial training set.
    #[arg(long, default_value_t = cover_core::select::DEFAULT_SEED_VIEWS)]
    pub seed_views: usize,
    /// Seed for the random method's choices.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Restrict each round to the k pool cameras nearest the previous choice.
    #[arg(long)]
    pub embodied: bool,
    /// Neighbourhood size for --embodied.
    #[arg(long, default_value_t = cover_core::select::DEFAULT_EMBODIED_K)]
    pub k: usize,
    /// Refine each chosen pose by descending the coverage score, and train on the refined view too.
    #[arg(long)]
    pub refine: bool,
    /// Gradient steps per refinement.
    #[arg(long, default_value_t = crate::config::DEFAULT_REFINE_STEPS)]
    pub refine_steps: usize,
    /// Direction patches per primitive (12, 42, 162, 642 give icospheres, other counts a Fibonacci grid).
    #[arg(long, default_value_t = 162)]
    pub grid_patches: usize,
    /// Concentration of the spherical Gaussian direction kernel.
    #[arg(long, default_value_t = cover_core::metrics::DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Ridge added to the colour solve and the Fisher Gram matrix.
    #[arg(long, default_value_t = SelectConfig::default().ridge)]
    pub ridge: f64,
    /// Use every n-th pixel when building exact Fisher rows.
    #[arg(long, default_value_t = 4)]
    pub pixel_stride: usize,
    /// Metric background: zero or one.
    #[arg(long, default_value = "zero", value_parser = parse_background)]
    pub background: Background,
    /// Standard deviation of the noise added to training observations.
    #[arg(long, default_value_t = SelectConfig::default().observation_noise)]
    pub noise: f64,
    /// Seed of the observation noise (defaults to --rng-seed).
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Re-run exactly from a manifest written by an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, env = "COVER_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    #[command(flatten)]
    pub settings: RunSettings,
}

impl RunSettings {
    pub fn to_config(&self, output_dir: PathBuf) -> RunConfig {
        let scene = match &self.scene_file {
            Some(p) => SceneSource::File(p.clone()),
            None => SceneSource::Generate(self.scene.to_spec()),
        };
        RunConfig {
            scene,
            method: self.method,
            rounds: self.rounds,
            seed_count: self.seed_views,
            rng_seed: self.rng_seed,
            embodied: self.embodied,
            k: self.k,
            refine: self.refine,
            refine_steps: self.refine_steps,
            select: SelectConfig {
                grid_patches: self.grid_patches,
                kappa: self.kappa,
                ridge: self.ridge,
                pixel_stride: self.pixel_stride,
                background: self.background,
                observation_noise: self.noise,
                noise_seed: self.noise_seed.unwrap_or(self.rng_seed),
                ..SelectConfig::default()
            },
            output_dir,
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene JSON.
    #[arg(long)]
    pub scene: PathBuf,
    /// Checkpoint of a run on this scene; without one every primitive is unseen.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Candidate camera id to render from.
    #[arg(long, conflicts_with_all = ["position", "target"], required_unless_present = "position")]
    pub camera: Option<usize>,
    /// Camera position "x,y,z" for a free viewpoint.
    #[arg(long, value_parser = parse_point, requires = "target")]
    pub position: Option<Vector3<f64>>,
    /// Point the free viewpoint looks at, "x,y,z".
    #[arg(long, value_parser = parse_point, requires = "position")]
    pub target: Option<Vector3<f64>>,
    /// Direction patches used when no checkpoint is given.
    #[arg(long, default_value_t = 162)]
    pub grid_patches: usize,
    /// Background value: zero or one.
    #[arg(long, default_value = "zero", value_parser = parse_background)]
    pub background: Background,
    /// Output PGM path.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Curve CSV of the random baseline.
    #[arg(long)]
    pub random: PathBuf,
    /// Curve CSVs of the methods to compare.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
