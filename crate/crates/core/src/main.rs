fn main() {
    std::process::exit(wmhseg::cli::dispatch(std::env::args_os()));
}
