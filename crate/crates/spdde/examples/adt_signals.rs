//! Average dwell-time tooling: generating budget-compliant switching
//! signals and catching a violating one.
//!
//! ```bash
//! cargo run --release -p spdde --example adt_signals
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use spdde::presets::adversarial_adt_signal;
use spdde::switching::generate_adt_signal;

fn main() {
    let (tau_a, chatter) = (1.0, 2.0);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let signal =
        generate_adt_signal(&[0, 1, 2], tau_a, chatter, 20.0, Some(0.05), &mut rng).unwrap();
    println!(
        "generated signal: initial index {}, {} switches on [0, 20]",
        signal.initial_index,
        signal.num_switches()
    );
    for (t, p) in signal.switches().iter().take(6) {
        println!("  t = {t:<6} -> index {p}");
    }
    println!(
        "budget (tau_a = {tau_a}, N0 = {chatter}) verified: {}",
        signal.verify_adt(tau_a, chatter).is_ok()
    );
    println!("serialized: {}\n", serde_json::to_string(&signal).unwrap());

    let crowded = adversarial_adt_signal();
    match crowded.verify_adt(1.0, 2.0) {
        Ok(()) => println!("unexpected: adversarial fixture passed"),
        Err(violation) => println!("adversarial fixture rejected: {violation}"),
    }

    // recurrence structure used by the fixed-index certificate
    let pairs = signal.fixed_index_pairs(signal.initial_index, 20.0);
    println!(
        "\nindex {} recurs over {} consecutive activation pairs",
        signal.initial_index,
        pairs.len()
    );
}
