//! Behavioral tests for the two execution engines: golden event traces,
//! differential runs over the shared corpus, fault parity between the
//! direct-style interpreter and the frame machine, pool transparency, and
//! the runtime counters under deep continuation growth.

use coroc_core::cps::{self, CpsError, Stage};
use coroc_core::interp::machine::RunOptions;
use coroc_core::interp::{difftest, direct, machine, DEFAULT_FUEL};
use coroc_core::{parse_program, typecheck, Fault, Outcome, TraceEvent, TypedProgram};

mod common;
use common::{CORPUS, COUNTDOWN, SUSPEND_RESULT};

fn typed(src: &str) -> TypedProgram {
    typecheck(parse_program(src).expect("parse")).expect("typecheck")
}

fn converted(src: &str) -> TypedProgram {
    let program = parse_program(src).expect("parse");
    typecheck(cps::translate(&program).expect("translate")).expect("typecheck converted")
}

/// Runs the original program on the direct interpreter and its translation
/// on the frame machine.
fn run_both(src: &str, schedule: &[u64]) -> (Outcome, Outcome) {
    let d = direct::run(&typed(src), schedule, DEFAULT_FUEL);
    let m = machine::run(&converted(src), schedule, DEFAULT_FUEL);
    (d, m)
}

/// Runs the same untranslated program on both engines; used for programs
/// the translation gate refuses, which must still fault identically.
fn run_both_unconverted(src: &str, schedule: &[u64]) -> (Outcome, Outcome) {
    let t = typed(src);
    (direct::run(&t, schedule, DEFAULT_FUEL), machine::run(&t, schedule, DEFAULT_FUEL))
}

fn trace_lines(outcome: &Outcome) -> Vec<String> {
    outcome.trace.iter().map(|e| e.to_string()).collect()
}

#[test]
fn countdown_trace_golden_on_both_engines() {
    let (d, m) = run_both(COUNTDOWN, &[0, 0, 0]);
    assert_eq!(d, m);
    assert!(d.is_clean(), "{:?}", d.fault);
    assert_eq!(d.coroutines_created, 1);
    assert_eq!(
        trace_lines(&d),
        [
            "ENTER 0", "YIELD 0", "ENTER 0", "YIELD 0", "ENTER 0", "YIELD 0", "ENTER 0",
            "PRINT 0", "TERM 0",
        ]
    );
}

#[test]
fn entering_unknown_or_terminated_coroutines_is_a_silent_skip() {
    let (d, m) = run_both(COUNTDOWN, &[7, 0, 0, 0, 0, 3]);
    let (expect, _) = run_both(COUNTDOWN, &[0, 0, 0]);
    assert_eq!(d, m);
    assert_eq!(d, expect);
}

#[test]
fn corpus_differential_runs_exhaustively_and_cleanly() {
    for (name, src) in CORPUS {
        let program = parse_program(src).expect(name);
        let report = difftest::run(&program, &difftest::DiffConfig::default())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(report.is_clean(), "{name}: {:#?}", report.mismatches);
        assert!(report.exhaustive, "{name}");
        assert_eq!(report.skipped_fuel, 0, "{name}");
        assert_eq!(report.schedules_run, 7, "{name}");
    }
}

#[test]
fn resume_arguments_do_not_replace_suspended_call_results() {
    let (d, m) = run_both(SUSPEND_RESULT, &[0]);
    assert_eq!(d, m);
    assert_eq!(trace_lines(&d), ["ENTER 0", "YIELD 0", "ENTER 0", "PRINT 8", "TERM 0"]);
}

const PROBE: &str = r#"
coroutine_fn void worker(int n) {
    print(in_coroutine());
    print(co_self() + n);
    co_yield();
    print(co_self() + n);
}

void main() {
    int a;
    int b;
    a = co_create(&worker);
    b = co_create(&worker);
    print(in_coroutine());
    co_enter(b, 10);
    co_enter(a, 100);
}
"#;

#[test]
fn context_probes_report_the_running_coroutine() {
    let (d, m) = run_both(PROBE, &[1, 0]);
    assert_eq!(d, m);
    assert!(d.is_clean(), "{:?}", d.fault);
    assert_eq!(
        trace_lines(&d),
        [
            "PRINT 0", "ENTER 1", "PRINT 1", "PRINT 11", "YIELD 1", "ENTER 0", "PRINT 1",
            "PRINT 100", "YIELD 0", "ENTER 1", "PRINT 11", "TERM 1", "ENTER 0", "PRINT 100",
            "TERM 0",
        ]
    );
}

const TWO_WORKERS: &str = r#"
coroutine_fn void worker(int base) {
    print(base + 1);
    co_yield();
    print(base + 2);
    co_yield();
    print(base + 3);
}

void main() {
    int a;
    int b;
    a = co_create(&worker);
    b = co_create(&worker);
    co_enter(a, 10);
    co_enter(b, 20);
}
"#;

#[test]
fn independent_workers_interleave_identically() {
    let (d, m) = run_both(TWO_WORKERS, &[1, 0, 1]);
    assert_eq!(d, m);
    assert_eq!(
        trace_lines(&d),
        [
            "ENTER 0", "PRINT 11", "YIELD 0", "ENTER 1", "PRINT 21", "YIELD 1", "ENTER 1",
            "PRINT 22", "YIELD 1", "ENTER 0", "PRINT 12", "YIELD 0", "ENTER 1", "PRINT 23",
            "TERM 1",
        ]
    );

    let program = parse_program(TWO_WORKERS).unwrap();
    let report = difftest::run(&program, &difftest::DiffConfig::default()).unwrap();
    assert!(report.is_clean(), "{:#?}", report.mismatches);
    assert!(report.exhaustive);
    assert_eq!(report.schedules_run, 127);
}

const NESTED_CREATE: &str = r#"
coroutine_fn void child(int n) {
    print(n);
    co_yield();
    print(n + 1);
}

coroutine_fn void parent(int n) {
    int c;
    c = co_create(&child);
    co_yield();
    print(100 + c);
}

void main() {
    int p;
    p = co_create(&parent);
    co_enter(p, 7);
}
"#;

#[test]
fn coroutines_created_inside_coroutines_share_the_ordinal_sequence() {
    let (d, m) = run_both(NESTED_CREATE, &[1, 0, 1]);
    assert_eq!(d, m);
    assert_eq!(d.coroutines_created, 2);
    assert_eq!(
        trace_lines(&d),
        [
            "ENTER 0", "YIELD 0", "ENTER 1", "PRINT 0", "YIELD 1", "ENTER 0", "PRINT 101",
            "TERM 0", "ENTER 1", "PRINT 1", "TERM 1",
        ]
    );

    let program = parse_program(NESTED_CREATE).unwrap();
    let report = difftest::run(&program, &difftest::DiffConfig::default()).unwrap();
    assert!(report.is_clean(), "{:#?}", report.mismatches);
    assert_eq!(report.schedules_run, 127);
}

const ENTER_FROM_COROUTINE: &str = r#"
coroutine_fn void inner(int n) {
    print(n);
}

coroutine_fn void outer(int n) {
    int c;
    c = co_create(&inner);
    co_yield();
    co_enter(c, n);
}

void main() {
    int c;
    c = co_create(&outer);
    co_enter(c, 5);
}
"#;

#[test]
fn co_enter_inside_a_running_coroutine_faults() {
    let (d, m) = run_both(ENTER_FROM_COROUTINE, &[0]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::EnterInsideCoroutine));
    assert_eq!(d.coroutines_created, 2);
    assert_eq!(trace_lines(&d), ["ENTER 0", "YIELD 0", "ENTER 0"]);
}

const CRASH: &str = r#"
coroutine_fn void crash(int n) {
    co_yield();
    print(1 / n);
}

void main() {
    int c;
    c = co_create(&crash);
    co_enter(c, 0);
}
"#;

#[test]
fn division_by_zero_faults_identically_inside_a_coroutine() {
    let (d, m) = run_both(CRASH, &[0]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::DivideByZero));
    assert_eq!(trace_lines(&d), ["ENTER 0", "YIELD 0", "ENTER 0"]);

    let program = parse_program(CRASH).unwrap();
    let report = difftest::run(&program, &difftest::DiffConfig::default()).unwrap();
    assert!(report.is_clean(), "{:#?}", report.mismatches);
}

#[test]
fn dereferencing_an_uninitialized_pointer_faults() {
    let src = "void main() {\n    int *p;\n    print(*p);\n}\n";
    let (d, m) = run_both(src, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::BadPointer));
    assert!(d.trace.is_empty());
}

#[test]
fn alloc_rejects_non_positive_sizes() {
    let zero = "void main() {\n    int *p;\n    p = alloc(0);\n}\n";
    let (d, m) = run_both(zero, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::BadAllocSize { size: 0 }));

    let negative = "void main() {\n    int *p;\n    p = alloc(0 - 5);\n}\n";
    let (d, m) = run_both(negative, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::BadAllocSize { size: -5 }));
}

#[test]
fn alloc_beyond_the_heap_limit_faults() {
    let src = "void main() {\n    int *p;\n    p = alloc(8388608);\n}\n";
    let (d, m) = run_both(src, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::OutOfMemory));
}

#[test]
fn suspension_in_native_context_faults() {
    let (d, m) = run_both_unconverted("void main() {\n    co_yield();\n}\n", &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::SuspendOutsideCoroutine));
}

#[test]
fn co_sleep_evaluates_its_argument_before_suspending() {
    let (d, m) = run_both_unconverted("void main() {\n    co_sleep(1 / 0);\n}\n", &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::DivideByZero));
}

#[test]
fn co_self_in_native_context_faults() {
    let (d, m) = run_both_unconverted("void main() {\n    print(co_self());\n}\n", &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::SelfOutsideCoroutine));
}

#[test]
fn calling_a_bodyless_function_faults() {
    let src = "extern void helper(int n);\n\nvoid main() {\n    helper(3);\n}\n";
    let (d, m) = run_both(src, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::UnresolvedExtern { name: "helper".to_string() }));
}

#[test]
fn a_program_without_main_faults() {
    let src = "void not_main() {\n    print(1);\n}\n";
    let (d, m) = run_both(src, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::MissingMain));
    assert!(d.trace.is_empty());
}

#[test]
fn runaway_recursion_hits_the_depth_limit() {
    let src = "void rec(int n) {\n    rec(n + 1);\n}\n\nvoid main() {\n    rec(0);\n}\n";
    let (d, m) = run_both(src, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::CallDepthExceeded));
}

#[test]
fn an_endless_loop_exhausts_fuel() {
    let src = "void main() {\n    int i;\n    i = 0;\n    while (1) {\n        i = i + 1;\n    }\n}\n";
    let d = direct::run(&typed(src), &[], 1_000);
    let m = machine::run(&converted(src), &[], 1_000);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::FuelExhausted));
}

#[test]
fn creating_from_a_bodyless_entry_faults() {
    let src =
        "extern coroutine_fn void ghost(int n);\n\nvoid main() {\n    int c;\n    c = co_create(&ghost);\n}\n";
    let (d, m) = run_both(src, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::NotACoroutineEntry));
    assert_eq!(d.coroutines_created, 0);
}

const NULL_FUNPTR: &str = r#"
coroutine_fn void (*p)(int);

coroutine_fn void driver(int n) {
    (*p)(n);
}

void main() {
    int c;
    c = co_create(&driver);
    co_enter(c, 1);
}
"#;

#[test]
fn calling_through_a_null_coroutine_pointer_faults() {
    let (d, m) = run_both(NULL_FUNPTR, &[]);
    assert_eq!(d, m);
    assert_eq!(d.fault, Some(Fault::NotAFunction));
    assert_eq!(trace_lines(&d), ["ENTER 0"]);
}

const CHURN: &str = r#"
coroutine_fn void task(int n) {
    co_yield();
    print(n);
}

void main() {
    int i;
    int c;
    i = 0;
    while (i < 10) {
        c = co_create(&task);
        co_enter(c, i);
        co_enter(c, 0);
        i = i + 1;
    }
}
"#;

#[test]
fn continuation_pooling_is_invisible_to_program_behavior() {
    let conv = converted(CHURN);
    let (pooled, pooled_stats) = machine::run_with(&conv, &[], RunOptions::default());
    let (bare, bare_stats) =
        machine::run_with(&conv, &[], RunOptions { pool_max: 0, ..RunOptions::default() });

    assert_eq!(pooled, bare);
    assert!(pooled.is_clean(), "{:?}", pooled.fault);
    assert_eq!(pooled.coroutines_created, 10);
    assert_eq!(pooled.trace.len(), 50);

    assert_eq!(pooled_stats.pool_misses, 1);
    assert_eq!(pooled_stats.pool_hits, 9);
    assert_eq!(bare_stats.pool_hits, 0);
    assert_eq!(bare_stats.pool_misses, 10);

    let d = direct::run(&typed(CHURN), &[], DEFAULT_FUEL);
    assert_eq!(d, pooled);
}

const DEEP: &str = r#"
coroutine_fn int deep(int n) {
    int v;
    if (n == 0) {
        co_yield();
        return 7;
    }
    v = deep(n - 1);
    return v + n;
}

coroutine_fn void start(int n) {
    print(deep(n));
}

void main() {
    int c;
    c = co_create(&start);
    co_enter(c, 20);
}
"#;

#[test]
fn deep_call_chains_grow_the_continuation_and_still_agree() {
    let (d, m) = run_both(DEEP, &[0]);
    assert_eq!(d, m);
    assert!(d.is_clean(), "{:?}", d.fault);
    assert_eq!(trace_lines(&d), ["ENTER 0", "YIELD 0", "ENTER 0", "PRINT 217", "TERM 0"]);

    let (_, stats) = machine::run_with(&converted(DEEP), &[0], RunOptions::default());
    assert!(stats.frames_pushed > 20, "{stats:?}");
    assert!(stats.reallocations >= 1, "{stats:?}");
}

#[test]
fn a_frame_limit_turns_deep_chains_into_an_overflow_fault() {
    let conv = converted(DEEP);
    let opts = RunOptions { frame_limit: Some(4), ..RunOptions::default() };
    let (out, _) = machine::run_with(&conv, &[], opts);
    assert_eq!(out.fault, Some(Fault::FrameOverflow));
    assert_eq!(trace_lines(&out), ["ENTER 0"]);
}

#[test]
fn boxing_and_normalization_preserve_direct_behavior() {
    for (name, src) in CORPUS {
        let program = parse_program(src).unwrap();
        let base = typed(src);
        for stage in [Stage::Boxed, Stage::Normalized] {
            let staged = typecheck(cps::translate_to(&program, stage).unwrap())
                .unwrap_or_else(|e| panic!("{name}/{}: {e}", stage.name()));
            for depth in 0..=6 {
                let schedule = vec![0u64; depth];
                let a = direct::run(&base, &schedule, DEFAULT_FUEL);
                let b = direct::run(&staged, &schedule, DEFAULT_FUEL);
                assert_eq!(a, b, "{name}/{}: schedule {schedule:?}", stage.name());
            }
        }
    }
}

#[test]
fn difftest_reports_the_translation_gate_refusal() {
    let src = "coroutine_fn void co(void) { co_yield(); }\n\
               void f(void) { co(); }\n\
               void main() { }";
    let program = parse_program(src).unwrap();
    match difftest::run(&program, &difftest::DiffConfig::default()) {
        Err(CpsError::CheckFailed(diags)) => assert!(!diags.is_empty()),
        other => panic!("expected gate refusal, got {other:?}"),
    }
}

#[test]
fn difftest_skips_fuel_starved_schedules_instead_of_flagging_them() {
    let program = parse_program(COUNTDOWN).unwrap();
    let cfg = difftest::DiffConfig { fuel: 8, ..difftest::DiffConfig::default() };
    let report = difftest::run(&program, &cfg).unwrap();
    assert!(report.is_clean(), "{:#?}", report.mismatches);
    assert!(report.skipped_fuel >= 1, "{report:?}");
}

#[test]
fn difftest_without_coroutines_stops_after_the_empty_schedule() {
    let program = parse_program("void main() { print(42); }").unwrap();
    let report = difftest::run(&program, &difftest::DiffConfig::default()).unwrap();
    assert!(report.is_clean());
    assert!(report.exhaustive);
    assert_eq!(report.schedules_run, 1);
}

#[test]
fn trace_events_render_compactly() {
    assert_eq!(TraceEvent::Print { value: -3 }.to_string(), "PRINT -3");
    assert_eq!(TraceEvent::Enter { coroutine: 2 }.to_string(), "ENTER 2");
    assert_eq!(TraceEvent::Yield { coroutine: 0 }.to_string(), "YIELD 0");
    assert_eq!(TraceEvent::Term { coroutine: 11 }.to_string(), "TERM 11");
}
