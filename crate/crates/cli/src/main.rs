fn main() {
    // Die quietly when the reader closes the pipe (`nsk1d report | head`),
    // like other line-oriented tools, instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(nsk1d_cli::cli_main(std::env::args()));
}
