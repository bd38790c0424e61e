//! Run the shipped verification configs the way the `verify` command does.
use metastable::cli::{cmd_verify, BUNDLED, VerifyOverrides};

fn main() {
    for (name, text) in BUNDLED {
        match cmd_verify(text, None, &VerifyOverrides::default()) {
            Ok(run) => println!("{name}: {:?} (config {})", run.verdict, &run.config_hash[..12]),
            Err(e) => println!("{name}: error {e}"),
        }
    }
}
