fn main() {
    std::process::exit(owc_sim::runner::cli(std::env::args()));
}
