use std::io::{self, Write};

fn main() {
    let code = {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        let code = ospf_models::cli::main_with(std::env::args_os(), &mut out, &mut io::stderr());
        let _ = out.flush();
        code
    };
    std::process::exit(code);
}
