fn main() {
    std::process::exit(swarmthresh::cli::cli_main(std::env::args_os()));
}
