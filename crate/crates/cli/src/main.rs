use std::path::PathBuf;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let out_dir = std::env::var_os(fso_adapt_cli::OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let code = fso_adapt_cli::run(
        std::env::args_os(),
        out_dir.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
