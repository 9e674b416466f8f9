//! Contract tests over the on-disk program corpus: every program parses,
//! typechecks, checks clean, translates, and runs identically on both
//! engines for every schedule the differential harness tries.

use coroc_core::interp::difftest::{self, DiffConfig};
use coroc_core::testgen::corpus_programs;
use coroc_core::{check, parse_program, typecheck};

#[test]
fn corpus_has_critical_mass() {
    let programs = corpus_programs();
    assert!(programs.len() >= 50, "only {} corpus programs", programs.len());
}

#[test]
fn every_corpus_program_checks_clean() {
    for (name, source) in corpus_programs() {
        let program = parse_program(&source).unwrap_or_else(|e| panic!("{name}: {e}"));
        let typed = typecheck(program).unwrap_or_else(|e| panic!("{name}: {e}"));
        let report = check::check(&typed);
        assert!(report.is_clean(), "{name}: {:?}", report.diagnostics);
    }
}

#[test]
fn both_engines_agree_on_every_corpus_program() {
    for (name, source) in corpus_programs() {
        let program = parse_program(&source).unwrap_or_else(|e| panic!("{name}: {e}"));
        let report = difftest::run(&program, &DiffConfig::default())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(report.is_clean(), "{name}: {:#?}", report.mismatches);
        assert_eq!(report.skipped_fuel, 0, "{name} ran out of fuel");
        assert!(report.schedules_run >= 1, "{name} never ran");
    }
}
