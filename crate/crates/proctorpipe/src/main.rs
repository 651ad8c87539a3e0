fn main() {
    std::process::exit(proctorpipe::cli::main(std::env::args_os()));
}
