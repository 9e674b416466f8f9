//! Parser, printer, and type checker behavior on whole programs.

use coroc_core::ast::{strip_metadata, AnnotationKind};
use coroc_core::error::LangError;
use coroc_core::parser::{parse_program, parse_program_with, ParseOptions};
use coroc_core::printer::print_program;
use coroc_core::typeck::typecheck;

const COUNTDOWN: &str = include_str!("../../../corpus/golden/countdown.mc");
const FIG3: &str = include_str!("../../../corpus/check/fig3.mc");

#[test]
fn countdown_prints_back_to_its_source() {
    let program = parse_program(COUNTDOWN).unwrap();
    assert_eq!(print_program(&program), COUNTDOWN);
}

#[test]
fn printing_round_trips_structurally() {
    for source in [COUNTDOWN, FIG3] {
        let program = parse_program(source).unwrap();
        let printed = print_program(&program);
        let reparsed = parse_program(&printed).unwrap();
        assert_eq!(strip_metadata(&program), strip_metadata(&reparsed), "{printed}");
    }
}

#[test]
fn printing_is_idempotent() {
    for source in [COUNTDOWN, FIG3] {
        let once = print_program(&parse_program(source).unwrap());
        let twice = print_program(&parse_program(&once).unwrap());
        assert_eq!(once, twice);
    }
}

#[test]
fn fixture_programs_typecheck() {
    for source in [COUNTDOWN, FIG3] {
        let program = parse_program(source).unwrap();
        typecheck(program).unwrap();
    }
}

#[test]
fn annotations_parse_in_either_position() {
    let leading = parse_program("coroutine_fn void f() { co_yield(); }").unwrap();
    let trailing = parse_program("void coroutine_fn f() { co_yield(); }").unwrap();
    assert_eq!(strip_metadata(&leading), strip_metadata(&trailing));
    let f = leading.find_function("f").unwrap();
    assert_eq!(f.annotation.kind, AnnotationKind::Coroutine);
}

#[test]
fn coroutine_attribute_name_is_configurable() {
    let opts = ParseOptions::with_coroutine_attr("qemu_coroutine_fn");
    let program = parse_program_with("qemu_coroutine_fn void f() { co_yield(); }", &opts).unwrap();
    let f = program.find_function("f").unwrap();
    assert!(f.annotation.is_coroutine());

    let err = parse_program("qemu_coroutine_fn void f() { co_yield(); }").unwrap_err();
    assert!(matches!(err, LangError::UnknownAnnotation { name, .. } if name == "qemu_coroutine_fn"));
}

#[test]
fn misspelled_annotation_is_reported_by_name() {
    let err = parse_program("coroutin_fn void f() { return; }").unwrap_err();
    assert!(matches!(err, LangError::UnknownAnnotation { name, .. } if name == "coroutin_fn"));
}

#[test]
fn reserved_prefix_is_rejected_in_user_source() {
    let err = parse_program("void f() { int __cpc_x; }").unwrap_err();
    assert!(matches!(err, LangError::Parse { .. }), "{err}");

    let opts = ParseOptions::internal();
    parse_program_with("void f() { int __cpc_x; }", &opts).unwrap();
}

#[test]
fn reserved_call_forms_are_not_identifiers() {
    for source in ["void f() { int push; }", "void f() { int invoke; }"] {
        assert!(parse_program(source).is_err(), "{source}");
    }
}

#[test]
fn bodyless_function_requires_extern() {
    assert!(parse_program("void f();").is_err());
    parse_program("extern void f();").unwrap();
    assert!(parse_program("extern void f() { return; }").is_err());
}

#[test]
fn labels_are_rejected_outside_body_top_level() {
    let source = "void f(int x) { if (x) { l: print(x); } }";
    assert!(parse_program(source).is_err());
}

#[test]
fn cps_forms_parse_and_print() {
    let source = "coroutine_fn void f(int x, cont k) {\n    co_sleep(1, push(f, x - 1, k));\n    return;\n}\n";
    let program = parse_program(source).unwrap();
    assert_eq!(print_program(&program), source);

    let ret = "coroutine_fn void g(int x, cont k) {\n    h(x, push_ret(g, ?, k));\n    return;\n}\n";
    let program = parse_program_with(ret, &ParseOptions::internal()).unwrap();
    assert_eq!(print_program(&program), ret);
}

#[test]
fn duplicate_locals_are_rejected() {
    let program = parse_program("void f(int x) { int x; }").unwrap();
    assert!(matches!(typecheck(program), Err(LangError::DuplicateDefinition { .. })));
}

#[test]
fn shadowing_a_global_is_rejected() {
    let program = parse_program("int g;\nvoid f() { int g; }").unwrap();
    assert!(matches!(typecheck(program), Err(LangError::DuplicateDefinition { .. })));
}

#[test]
fn defining_a_builtin_is_rejected() {
    let program = parse_program("void print(int x) { return; }").unwrap();
    assert!(matches!(typecheck(program), Err(LangError::DuplicateDefinition { .. })));
}

#[test]
fn redeclaring_a_builtin_with_its_signature_is_allowed() {
    let program =
        parse_program("extern coroutine_fn void co_sleep(int ms);\nvoid main() { }").unwrap();
    typecheck(program).unwrap();

    let program = parse_program("extern void co_sleep(int ms);\nvoid main() { }").unwrap();
    assert!(typecheck(program).is_err());
}

#[test]
fn void_results_cannot_be_used_as_values() {
    let program = parse_program("void f() { }\nvoid main() { int x = f(); }").unwrap();
    assert!(matches!(typecheck(program), Err(LangError::VoidValueUse { .. })));
}

#[test]
fn call_arity_is_checked() {
    let program = parse_program("void f(int x) { }\nvoid main() { f(); }").unwrap();
    assert!(matches!(typecheck(program), Err(LangError::ArityMismatch { .. })));
}

#[test]
fn trailing_cont_argument_needs_a_coroutine_or_needcont_callee() {
    let opts = ParseOptions::internal();
    let ok = "coroutine_fn void f(cont k) {\n    co_yield(k);\n    return;\n}\n";
    typecheck(parse_program_with(ok, &opts).unwrap()).unwrap();

    let bad = "void g(int x) { }\nvoid f(cont k) { g(1, k); }";
    let program = parse_program_with(bad, &opts).unwrap();
    assert!(matches!(typecheck(program), Err(LangError::ArityMismatch { .. })));
}

#[test]
fn co_create_requires_a_coroutine_entry() {
    let ok = "coroutine_fn void entry(int x) { co_yield(); }\nvoid main() { int c = co_create(&entry); }";
    typecheck(parse_program(ok).unwrap()).unwrap();

    let bad = "void entry(int x) { }\nvoid main() { int c = co_create(&entry); }";
    assert!(typecheck(parse_program(bad).unwrap()).is_err());

    let wrong_shape = "coroutine_fn void entry(int x, int y) { co_yield(); }\nvoid main() { int c = co_create(&entry); }";
    assert!(typecheck(parse_program(wrong_shape).unwrap()).is_err());
}

#[test]
fn taking_a_builtin_address_is_rejected() {
    let program = parse_program("coroutine_fn void (*p)() = &co_yield;").unwrap();
    assert!(typecheck(program).is_err());
}

#[test]
fn global_initializers_must_be_constant() {
    typecheck(parse_program("int g = -3;").unwrap()).unwrap();
    let program = parse_program("int g = 1 + 2;").unwrap();
    assert!(typecheck(program).is_err());
}

#[test]
fn goto_targets_must_exist() {
    let program = parse_program("void f() { goto missing; }").unwrap();
    assert!(typecheck(program).is_err());
}

#[test]
fn annotation_mismatch_on_assignment_is_not_a_type_error() {
    let source = "coroutine_fn void co(int x) { co_yield(); }\nvoid (*p)(int) = &co;\nvoid main() { }";
    typecheck(parse_program(source).unwrap()).unwrap();
}

#[test]
fn calls_through_dereferenced_pointers_typecheck() {
    let source = "coroutine_fn void co(int x) { co_yield(); }\n\
                  coroutine_fn void (*p)(int) = &co;\n\
                  coroutine_fn void f() { (*p)(1); p(2); }";
    typecheck(parse_program(source).unwrap()).unwrap();
}
