use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use clap::Parser;

use aiops_server::ServiceConfig;

#[derive(Parser)]
#[command(name = "aiops-server", about = "Agent chat service over a simulated cluster")]
struct Args {
    /// YAML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `bind` from the configuration.
    #[arg(long)]
    bind: Option<String>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    let (service, router) = aiops_server::build(&config)?;
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .with_context(|| format!("binding {}", config.bind))?;
    tracing::info!(addr = %listener.local_addr()?, backends = ?service.backend_ids(), "listening");
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    if !service.drain(Duration::from_secs(30)).await {
        tracing::warn!("runs still active after 30s; exiting anyway");
    }
    Ok(())
}
