//! Static checker behavior, anchored on the annotated example program
//! exercising every diagnostic the checker knows.

use coroc_core::check::{check, emit_dot, DiagnosticKind};
use coroc_core::parser::parse_program;
use coroc_core::printer::PrintOptions;
use coroc_core::typeck::typecheck;
use std::collections::BTreeSet;

const FIG3: &str = include_str!("../../../corpus/check/fig3.mc");

fn check_source(source: &str) -> coroc_core::check::CheckReport {
    let typed = typecheck(parse_program(source).unwrap()).unwrap();
    check(&typed)
}

#[test]
fn annotated_example_reports_exactly_the_planted_bugs() {
    let report = check_source(FIG3);
    let got: Vec<(DiagnosticKind, &str)> =
        report.diagnostics.iter().map(|d| (d.kind, d.subject.as_str())).collect();
    assert_eq!(
        got,
        vec![
            (DiagnosticKind::MissingCoroutine, "missing"),
            (DiagnosticKind::SpuriousCoroutine, "spurious"),
            (DiagnosticKind::WrongBlocking, "wrong"),
            (DiagnosticKind::BlockingCalledFromCoroutine, "wrong_call -> block"),
            (DiagnosticKind::MissingCoroutine, "ptr_call"),
        ]
    );
}

#[test]
fn diagnostics_are_sorted_by_position() {
    let report = check_source(FIG3);
    let positions: Vec<(u32, u32)> =
        report.diagnostics.iter().map(|d| (d.line, d.col)).collect();
    let mut sorted = positions.clone();
    sorted.sort();
    assert_eq!(positions, sorted);
}

#[test]
fn annotated_example_inference() {
    let report = check_source(FIG3);
    let inferred: BTreeSet<&str> = report
        .graph
        .nodes
        .iter()
        .filter(|n| n.inferred_coroutine)
        .map(|n| n.name.as_str())
        .collect();
    let expected: BTreeSet<&str> = [
        "co_yield",
        "coro",
        "coro_fun_ptr",
        "good",
        "missing",
        "call_missing",
        "wrong",
        "wrong_call",
        "ptr_call",
    ]
    .into_iter()
    .collect();
    assert_eq!(inferred, expected);
}

#[test]
fn correctly_annotated_callers_of_buggy_functions_stay_unflagged() {
    let report = check_source(FIG3);
    assert!(report.diagnostics.iter().all(|d| d.subject != "call_missing"));
}

#[test]
fn graph_filtering_drops_plain_library_calls() {
    let report = check_source(FIG3);
    let filtered = report.graph.filtered();
    assert!(filtered.node("print").is_none());
    assert!(filtered.node("co_yield").is_some());
    assert!(filtered.node("block").is_some());
}

#[test]
fn dot_output_matches_golden() {
    let report = check_source(FIG3);
    let dot = emit_dot(&report.graph.filtered(), &PrintOptions::default());
    let golden = include_str!("../../../corpus/golden/fig3.dot");
    assert_eq!(dot, golden);
}

#[test]
fn empty_graph_renders_as_empty_digraph() {
    let report = check_source("int unused;");
    let dot = emit_dot(&report.graph.filtered(), &PrintOptions::default());
    assert_eq!(dot, "digraph G { }\n");
}

#[test]
fn retained_address_suppresses_spurious_report() {
    let with_address = "coroutine_fn void f(int x) { print(x); }\n\
                        coroutine_fn void (*p)(int) = &f;\n";
    let report = check_source(with_address);
    assert!(report.is_clean(), "{:?}", report.diagnostics);

    let without = "coroutine_fn void f(int x) { print(x); }\n";
    let report = check_source(without);
    assert_eq!(report.diagnostics.len(), 1);
    assert_eq!(report.diagnostics[0].kind, DiagnosticKind::SpuriousCoroutine);
}

#[test]
fn annotation_loss_is_reported_on_pointer_stores() {
    let source = "coroutine_fn void co(int x) { co_yield(); }\n\
                  void (*p)(int) = &co;\n";
    let report = check_source(source);
    assert!(report
        .diagnostics
        .iter()
        .any(|d| d.kind == DiagnosticKind::AnnotationLoss && d.subject == "co"));
}

#[test]
fn annotation_loss_is_reported_on_argument_passing() {
    let source = "coroutine_fn void co(int x) { co_yield(); }\n\
                  void take(void (*f)(int)) { }\n\
                  void main() { take(&co); }\n";
    let report = check_source(source);
    assert!(report
        .diagnostics
        .iter()
        .any(|d| d.kind == DiagnosticKind::AnnotationLoss && d.subject == "co"));
}

#[test]
fn inconsistent_pointer_use_is_reported_once_per_function() {
    let source = "coroutine_fn void co(int x) { co_yield(); }\n\
                  coroutine_fn void (*a)(int) = &co;\n\
                  void (*b)(int) = &co;\n\
                  blocking_fn void (*c)(int) = &co;\n";
    let report = check_source(source);
    let inconsistent: Vec<_> = report
        .diagnostics
        .iter()
        .filter(|d| d.kind == DiagnosticKind::PointerUseInconsistent)
        .collect();
    assert_eq!(inconsistent.len(), 1);
    assert_eq!(inconsistent[0].subject, "co");
}

#[test]
fn in_coroutine_callers_are_noted_but_clean() {
    let source = "void log_context() { print(in_coroutine()); }\n";
    let report = check_source(source);
    assert!(report.is_clean());
    let notes: Vec<_> = report
        .diagnostics
        .iter()
        .filter(|d| d.kind == DiagnosticKind::HybridFunction)
        .collect();
    assert_eq!(notes.len(), 1);
    assert_eq!(notes[0].subject, "log_context");
}

#[test]
fn blocking_annotation_does_not_stop_reachability() {
    let source = "coroutine_fn void co(void) { co_yield(); }\n\
                  blocking_fn void mid(void) { co(); }\n\
                  void outer(void) { mid(); }\n";
    let report = check_source(source);
    let kinds: Vec<(DiagnosticKind, &str)> =
        report.diagnostics.iter().map(|d| (d.kind, d.subject.as_str())).collect();
    assert!(kinds.contains(&(DiagnosticKind::WrongBlocking, "mid")));
    assert!(kinds.contains(&(DiagnosticKind::MissingCoroutine, "outer")));
}

#[test]
fn extern_coroutine_declarations_are_trusted() {
    let source = "extern coroutine_fn void wait_for_io(int fd);\n\
                  coroutine_fn void handler(int fd) { wait_for_io(fd); }\n";
    let report = check_source(source);
    assert!(report.is_clean(), "{:?}", report.diagnostics);
}
