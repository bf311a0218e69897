use std::io;

fn main() {
    let code = colloc::experiments::cli::cli_main(
        std::env::args_os(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    std::process::exit(code);
}
