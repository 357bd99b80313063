fn main() {
    std::process::exit(expdnn::cli::dispatch(std::env::args_os().skip(1)));
}
