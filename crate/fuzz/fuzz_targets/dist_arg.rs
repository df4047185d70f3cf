#![no_main]

use libfuzzer_sys::fuzz_target;
use prophet_cli::config::parse_dist_arg_with;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_dist_arg_with(s, |_| Ok(r#"{"kind":"uniform","lo":0,"hi":1}"#.to_string()));
    }
});
