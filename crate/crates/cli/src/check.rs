use rqco::checks::{self, CheckOutcome, MAX_CHECK_QUBITS};

use crate::error::CliError;
use crate::CheckKind;

pub fn run(kind: CheckKind, qubits: usize, slots: usize, seed: u64, directions: usize) -> Result<(), CliError> {
    if qubits > MAX_CHECK_QUBITS {
        return Err(CliError::Usage(format!("--qubits {qubits} exceeds the limit of {MAX_CHECK_QUBITS}")));
    }
    if qubits < 2 || slots == 0 {
        return Err(CliError::Usage("checks need at least 2 qubits and 1 slot".into()));
    }
    let outcomes = match kind {
        CheckKind::Gradient => checks::gradient_checks(qubits, slots, seed, directions)?,
        CheckKind::Hessian => checks::hessian_checks(qubits, slots, seed)?,
        CheckKind::Hvp => checks::hvp_checks(qubits, slots, seed)?,
        CheckKind::Kernels => checks::kernel_checks(qubits, seed)?,
    };
    report(&outcomes)
}

fn report(outcomes: &[CheckOutcome]) -> Result<(), CliError> {
    for o in outcomes {
        println!(
            "{}  {}  max_error={:.3e}  tolerance={:.1e}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.max_error,
            o.tolerance
        );
    }
    match outcomes.iter().filter(|o| !o.passed).count() {
        0 => Ok(()),
        n => Err(CliError::ChecksFailed(n)),
    }
}
