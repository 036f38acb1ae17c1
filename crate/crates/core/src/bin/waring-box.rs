fn main() {
    std::process::exit(waring_box::cli::run(std::env::args_os()));
}
