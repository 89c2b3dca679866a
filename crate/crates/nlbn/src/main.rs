use std::process::ExitCode;

const USAGE: &str = "usage: nlbn <eig|solve|scan-gamma|bubble-scan|level-check|window|system-check|flow> \
[--config file] [--key value ...] [--out path]";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || matches!(args[0].as_str(), "-h" | "--help" | "help") {
        println!("{USAGE}");
        return if args.is_empty() { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }
    ExitCode::from(nlbn::run(args) as u8)
}
