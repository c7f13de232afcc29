fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(tec_polar::cli::run(&argv));
}
