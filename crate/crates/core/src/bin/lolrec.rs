fn main() {
    std::process::exit(lolrec::cli::main_with_args(std::env::args_os()));
}
