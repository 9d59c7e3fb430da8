use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cover_cli::args::{Cli, Command};
use cover_cli::{cmd_gen_scene, cmd_render_metric, cmd_report, cmd_run, Manifest, RenderRequest, Viewpoint};

fn main() -> ExitCode {
    match dispatch(Cli::parse_args()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::GenScene(a) => println!("{}", cmd_gen_scene(&a.scene.to_spec(), &a.output)?),
        Command::Run(a) => {
            let config = match &a.config {
                Some(path) => {
                    let mut cfg = Manifest::load(path)?.config;
                    if let Some(dir) = a.output_dir {
                        cfg.output_dir = dir;
                    }
                    cfg
                }
                None => a
                    .settings
                    .to_config(a.output_dir.unwrap_or_else(|| PathBuf::from("cover-out"))),
            };
            let (_, summary) = cmd_run(&config)?;
            println!("{summary}");
        }
        Command::RenderMetric(a) => {
            let viewpoint = match (a.camera, a.position, a.target) {
                (Some(id), _, _) => Viewpoint::Candidate(id),
                (None, Some(position), Some(target)) => Viewpoint::LookAt { position, target },
                _ => unreachable!("clap enforces a camera id or a position/target pair"),
            };
            let (_, summary) = cmd_render_metric(&RenderRequest {
                scene: &a.scene,
                checkpoint: a.checkpoint.as_deref(),
                viewpoint,
                grid_patches: a.grid_patches,
                background: a.background,
                output: &a.output,
            })?;
            println!("{summary}");
        }
        Command::Report(a) => {
            let (_, table) = cmd_report(&a.random, &a.curves, a.csv.as_deref())?;
            print!("{table}");
        }
    }
    Ok(())
}
