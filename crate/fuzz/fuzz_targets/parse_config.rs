#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Config parsing must never panic, whatever the document contains.
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = river_bargain::parse_config(text) else { return };
    // Accepted configs are validated, so everything downstream of the
    // parser has to hold up too.
    let agreement = river_bargain::solver::solve_with(&config.problem, &config.oracle);
    assert_eq!(
        agreement.allocation.t2().to_bits(),
        (-agreement.allocation.t1).to_bits()
    );
    if let Some(spec) = &config.sweep {
        assert!(spec.check().is_ok());
    }
});
