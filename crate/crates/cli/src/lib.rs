//! HTTP service and command-line front end for gaplens.

pub mod app;
pub mod cli;
pub mod demo;
pub mod schemas;

pub use app::{router, AppState, ServiceConfig};
pub use cli::{build_service, Cli, CliError, ServeArgs};
