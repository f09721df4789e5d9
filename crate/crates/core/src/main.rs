fn main() {
    std::process::exit(hapto_fv::cli_io::cli_main(std::env::args_os()));
}
