fn main() {
    let code = enlg::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
