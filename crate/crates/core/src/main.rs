fn main() {
    let code = lpbound::cli::main(std::env::args_os());
    std::process::exit(code);
}
