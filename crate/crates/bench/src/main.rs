use std::process::ExitCode;

use clap::Parser;

use aiops_bench::{load_suite_arg, run, show_suite, summary_lines, validate_fixture, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Run(args) => run(&args).map(|out| {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            for line in summary_lines(&out) {
                println!("{line}");
            }
            println!("{} runs in {:.2}s", out.records.len(), out.wall_seconds);
        }),
        Command::ValidateFixture { file } => validate_fixture(&file, &mut stdout),
        Command::ShowSuite { suite } => load_suite_arg(&suite).and_then(|s| show_suite(&s, &mut stdout)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
