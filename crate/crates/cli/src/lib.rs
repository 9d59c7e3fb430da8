//! Library half of the `cover` binary, so the commands can be driven from
//! tests without spawning a process.

pub mod args;
pub mod commands;
pub mod config;

pub use commands::{cmd_gen_scene, cmd_render_metric, cmd_report, cmd_run, RenderRequest, RunArtifacts, Viewpoint};
pub use config::{Manifest, RunConfig, SceneSource};
