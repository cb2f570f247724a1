use anyhow::{Context, Result};
use clap::Parser;
use cmlt_cli::output::Manifest;
use cmlt_cli::{execute, Cli};

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Some(n) = std::env::var("CMLT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    let cli = Cli::parse();
    let cfg = match (cli.command, cli.config) {
        (Some(c), _) => c,
        (None, Some(p)) => Manifest::read(&p)?.config,
        (None, None) => anyhow::bail!("a subcommand or --config is required"),
    };
    execute(&cfg, &mut std::io::stdout().lock())
}
