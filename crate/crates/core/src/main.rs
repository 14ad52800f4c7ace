// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

use clap::Parser;
use trilevel::cli::{run, Cli};

fn main() {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("trilevel: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
