use backaction_lab::verify::{run_suite, Suite, VerifyConfig};

fn assert_suite(suite: Suite) {
    let report = run_suite(suite, &VerifyConfig::default());
    for c in &report.checks {
        println!("{}: {} = {:e} (bound {:e}) {}", report.name, c.name, c.value, c.bound, c.passed);
    }
    for n in &report.notes {
        println!("{}: {n}", report.name);
    }
    assert!(report.passed, "{report:#?}");
}

#[test]
fn backaction_equivalence() {
    assert_suite(Suite::BackactionEquivalence);
}

#[test]
fn hamilton_jacobi() {
    assert_suite(Suite::HamiltonJacobi);
}

#[test]
fn joint_amplitude() {
    assert_suite(Suite::JointAmplitude);
}

#[test]
fn stern_gerlach() {
    assert_suite(Suite::SternGerlach);
}

#[test]
fn free_particle() {
    assert_suite(Suite::FreeParticle);
}

#[test]
fn eigenvalue_emergence() {
    assert_suite(Suite::EigenvalueEmergence);
}

#[test]
fn tradeoff() {
    assert_suite(Suite::Tradeoff);
}

#[test]
fn completeness() {
    assert_suite(Suite::Completeness);
}

#[test]
fn injected_fault_fails_the_hamilton_jacobi_suite() {
    let config = VerifyConfig { inject_fault: true, ..VerifyConfig::default() };
    assert!(!run_suite(Suite::HamiltonJacobi, &config).passed);
}
