use std::io;

fn main() {
    let env_grid = std::env::var(statdisc_cli::config::GRID_ENV).ok();
    let code = statdisc_cli::run(std::env::args_os(), env_grid, &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
