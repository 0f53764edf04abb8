fn main() {
    std::process::exit(pheno_cli::main_with_args(std::env::args_os()));
}
