fn main() {
    let code = cascade_slt::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}
