fn main() {
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut output = std::io::stdout().lock();
    let code = poptopic::cli::run(std::env::args_os(), &mut input, &mut output);
    std::process::exit(code);
}
