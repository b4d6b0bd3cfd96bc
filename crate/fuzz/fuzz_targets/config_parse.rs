#![no_main]

use cqnls_cli::config::{build_config, ExperimentKind, RawConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing and typed validation must reject malformed input with errors,
    // never panic or allocate unbounded memory.
    if let Ok(raw) = RawConfig::parse_str(text) {
        for kind in [
            ExperimentKind::Evolve,
            ExperimentKind::GroundState,
            ExperimentKind::Converge,
            ExperimentKind::Conserve,
            ExperimentKind::StabMap,
            ExperimentKind::SsfmRef,
            ExperimentKind::Timing,
        ] {
            let _ = build_config(kind, &raw);
        }
    }
});
