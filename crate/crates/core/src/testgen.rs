//! Seeded random program generators for the property suites.
//!
//! Two families, both deterministic in the seed:
//!
//! - [`graph_program`] builds arbitrary annotated call structures — defined
//!   functions, externs, blocking annotations, function pointers, address
//!   retention — and records ground truth so the expected coroutine set can
//!   be recomputed by plain reachability, independent of the checker.
//! - [`clean_program`] builds correctly annotated, translatable programs
//!   that terminate under every schedule, for exercising the translation
//!   pipeline and both execution engines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::fs;
use std::path::PathBuf;

/// Loads the on-disk corpus: every hand-written program under `corpus/exec`
/// plus the golden countdown, as `(name, source)` pairs sorted by name.
pub fn corpus_programs() -> Vec<(String, String)> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut programs: Vec<(String, String)> = fs::read_dir(root.join("exec"))
        .expect("corpus/exec directory")
        .map(|entry| entry.expect("corpus entry").path())
        .filter(|path| path.extension().is_some_and(|ext| ext == "mc"))
        .map(|path| {
            let name = path
                .file_stem()
                .expect("corpus file name")
                .to_string_lossy()
                .into_owned();
            (name, fs::read_to_string(&path).expect("corpus file"))
        })
        .collect();
    programs.push((
        "countdown".to_string(),
        fs::read_to_string(root.join("golden/countdown.mc")).expect("countdown"),
    ));
    programs.sort();
    programs
}

/// A generated program plus the call structure it was generated from:
/// every expected call-graph node, whether each is an inference root, and
/// every call edge, direct and indirect alike.
#[derive(Debug, Clone)]
pub struct GraphProgram {
    pub source: String,
    /// Node name to root flag. Roots are coroutine-annotated declarations
    /// without a body, coroutine-annotated definitions whose address is
    /// retained, and indirect callees of coroutine-annotated pointer type.
    pub nodes: BTreeMap<String, bool>,
    /// Caller name to callee node name, one entry per distinct pair.
    pub edges: BTreeSet<(String, String)>,
}

impl GraphProgram {
    /// The coroutine set by brute force: every node with a path along call
    /// edges to some root.
    pub fn expected_coroutines(&self) -> BTreeSet<String> {
        let mut adjacent: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (from, to) in &self.edges {
            adjacent.entry(from).or_default().push(to);
        }
        let mut out = BTreeSet::new();
        for start in self.nodes.keys() {
            let mut seen = BTreeSet::new();
            let mut stack = vec![start.as_str()];
            while let Some(name) = stack.pop() {
                if !seen.insert(name) {
                    continue;
                }
                if self.nodes.get(name).copied().unwrap_or(false) {
                    out.insert(start.clone());
                    break;
                }
                if let Some(next) = adjacent.get(name) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Ann {
    Native,
    Coroutine,
    Blocking,
}

impl Ann {
    fn attr(self) -> &'static str {
        match self {
            Ann::Native => "",
            Ann::Coroutine => "coroutine_fn ",
            Ann::Blocking => "blocking_fn ",
        }
    }
}

enum Site {
    Direct(usize),
    ViaVar(usize),
    ViaDeref(usize),
    Retain { ptr: usize, func: usize },
    Yield,
    Print,
}

/// Generates a program with arbitrary call structure: up to `max_functions`
/// functions with any annotation mix, some extern, plus global function
/// pointers called directly and through derefs. Every signature is
/// `void(void)` so any combination typechecks; annotations are free to be
/// wrong, which is the point.
pub fn graph_program(seed: u64, max_functions: usize) -> GraphProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_functions.max(3));
    let n_ptrs = (n / 5).clamp(1, 24);

    let fn_ann: Vec<Ann> = (0..n)
        .map(|_| {
            let r = rng.random_range(0..100u32);
            if r < 55 {
                Ann::Native
            } else if r < 85 {
                Ann::Coroutine
            } else {
                Ann::Blocking
            }
        })
        .collect();
    let fn_extern: Vec<bool> = (0..n).map(|_| rng.random_bool(0.15)).collect();
    let ptr_co: Vec<bool> = (0..n_ptrs).map(|_| rng.random_bool(0.4)).collect();
    let ptr_init: Vec<Option<usize>> = (0..n_ptrs)
        .map(|_| rng.random_bool(0.6).then(|| rng.random_range(0..n)))
        .collect();

    let bodies: Vec<Vec<Site>> = (0..n)
        .map(|i| {
            if fn_extern[i] {
                return Vec::new();
            }
            let len = rng.random_range(0..=4);
            (0..len)
                .map(|_| {
                    let r = rng.random_range(0..100u32);
                    if r < 55 {
                        Site::Direct(rng.random_range(0..n))
                    } else if r < 68 {
                        Site::ViaVar(rng.random_range(0..n_ptrs))
                    } else if r < 78 {
                        Site::ViaDeref(rng.random_range(0..n_ptrs))
                    } else if r < 88 {
                        Site::Retain {
                            ptr: rng.random_range(0..n_ptrs),
                            func: rng.random_range(0..n),
                        }
                    } else if r < 94 {
                        Site::Yield
                    } else {
                        Site::Print
                    }
                })
                .collect()
        })
        .collect();

    let mut retained = vec![false; n];
    for j in ptr_init.iter().flatten() {
        retained[*j] = true;
    }
    for body in &bodies {
        for site in body {
            if let Site::Retain { func, .. } = site {
                retained[*func] = true;
            }
        }
    }

    let mut source = String::new();
    for (i, body) in bodies.iter().enumerate() {
        if fn_extern[i] {
            let _ = writeln!(source, "extern {}void f{i}(void);", fn_ann[i].attr());
            continue;
        }
        let _ = writeln!(source, "{}void f{i}(void) {{", fn_ann[i].attr());
        for site in body {
            let _ = match site {
                Site::Direct(j) => writeln!(source, "    f{j}();"),
                Site::ViaVar(k) => writeln!(source, "    p{k}();"),
                Site::ViaDeref(k) => writeln!(source, "    (*p{k})();"),
                Site::Retain { ptr, func } => writeln!(source, "    p{ptr} = &f{func};"),
                Site::Yield => writeln!(source, "    co_yield();"),
                Site::Print => writeln!(source, "    print({i});"),
            };
        }
        let _ = writeln!(source, "}}");
    }
    for k in 0..n_ptrs {
        let ann = if ptr_co[k] { "coroutine_fn " } else { "" };
        let _ = match ptr_init[k] {
            Some(j) => writeln!(source, "{ann}void (*p{k})(void) = &f{j};"),
            None => writeln!(source, "{ann}void (*p{k})(void);"),
        };
    }

    let mut nodes = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        let root = fn_ann[i] == Ann::Coroutine && (fn_extern[i] || retained[i]);
        nodes.insert(format!("f{i}"), root);
    }
    for (i, body) in bodies.iter().enumerate() {
        let caller = format!("f{i}");
        for site in body {
            let callee = match site {
                Site::Direct(j) => format!("f{j}"),
                Site::ViaVar(k) => {
                    nodes.entry(format!("p{k}")).or_insert(ptr_co[*k]);
                    format!("p{k}")
                }
                Site::ViaDeref(k) => {
                    nodes.entry(format!("*p{k}")).or_insert(ptr_co[*k]);
                    format!("*p{k}")
                }
                Site::Yield => {
                    nodes.entry("co_yield".to_string()).or_insert(true);
                    "co_yield".to_string()
                }
                Site::Print => {
                    nodes.entry("print".to_string()).or_insert(false);
                    "print".to_string()
                }
                Site::Retain { .. } => continue,
            };
            edges.insert((caller.clone(), callee));
        }
    }

    GraphProgram { source, nodes, edges }
}

/// Generates a correctly annotated program: native helpers that never
/// suspend, a chain of coroutine helpers that all reach a suspension, one or
/// two entry coroutines, and a `main` that creates and enters each entry.
/// Calls only go from lower to higher indices and every loop is counted, so
/// the program terminates under any schedule.
pub fn clean_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nat = rng.random_range(1..=3usize);
    let n_co = rng.random_range(1..=3usize);
    let n_entry = rng.random_range(1..=2usize);
    let n_glob = rng.random_range(1..=2usize);

    let mut src = String::new();
    for g in 0..n_glob {
        let _ = writeln!(src, "int g{g} = {};", rng.random_range(0..5));
    }
    let _ = writeln!(src);

    for i in 0..n_nat {
        let _ = writeln!(src, "int nat{i}(int a, int b) {{");
        match rng.random_range(0..5u32) {
            0 => {
                let _ = writeln!(src, "    if (a > b) {{");
                let _ = writeln!(src, "        a = a - b;");
                let _ = writeln!(src, "    }} else {{");
                let _ = writeln!(src, "        a = b + a + 1;");
                let _ = writeln!(src, "    }}");
                let _ = writeln!(src, "    return a;");
            }
            1 => {
                let _ = writeln!(src, "    int t;");
                let _ = writeln!(src, "    t = 0;");
                let _ = writeln!(src, "    while (t < 3) {{");
                let _ = writeln!(src, "        t = t + 1;");
                let _ = writeln!(src, "        a = a + b;");
                let _ = writeln!(src, "    }}");
                let _ = writeln!(src, "    return a;");
            }
            2 => {
                let _ = writeln!(src, "    int *p;");
                let _ = writeln!(src, "    p = alloc(2);");
                let _ = writeln!(src, "    p[0] = a;");
                let _ = writeln!(src, "    p[1] = b;");
                let _ = writeln!(src, "    return p[0] + p[1];");
            }
            3 if i > 0 => {
                let k = rng.random_range(0..i);
                let _ = writeln!(src, "    return nat{k}(a, b) + 1;");
            }
            _ => {
                let _ = writeln!(src, "    return a % 7 + b / 3 + a * 2;");
            }
        }
        let _ = writeln!(src, "}}");
        let _ = writeln!(src);
    }

    for j in 0..n_co {
        let _ = writeln!(src, "coroutine_fn int co{j}(int x) {{");
        let _ = writeln!(src, "    int t;");
        let mut suspended = false;
        for _ in 0..rng.random_range(1..=3u32) {
            match rng.random_range(0..8u32) {
                0 => {
                    let _ = writeln!(src, "    co_yield();");
                    suspended = true;
                }
                1 => {
                    let _ = writeln!(src, "    co_sleep(x + {});", rng.random_range(0..3));
                    suspended = true;
                }
                2 => {
                    let _ = writeln!(src, "    print(x + {});", rng.random_range(0..10));
                }
                3 => {
                    let k = rng.random_range(0..n_nat);
                    let _ = writeln!(src, "    x = nat{k}(x, {});", rng.random_range(0..4));
                }
                4 if j + 1 < n_co => {
                    let m = rng.random_range(j + 1..n_co);
                    let _ = writeln!(src, "    t = co{m}(x);");
                    let _ = writeln!(src, "    x = x + t;");
                    suspended = true;
                }
                5 => {
                    let g = rng.random_range(0..n_glob);
                    let _ = writeln!(src, "    g{g} = g{g} + x;");
                    let _ = writeln!(src, "    print(g{g});");
                }
                6 => {
                    let _ = writeln!(src, "    if (x > {}) {{", rng.random_range(0..4));
                    let _ = writeln!(src, "        print({});", rng.random_range(0..10));
                    let _ = writeln!(src, "    }} else {{");
                    let _ = writeln!(src, "        x = x + 1;");
                    let _ = writeln!(src, "    }}");
                }
                _ => {
                    let g = rng.random_range(0..n_glob);
                    let _ = writeln!(src, "    t = 0;");
                    let _ = writeln!(src, "    while (t < 2) {{");
                    let _ = writeln!(src, "        t = t + 1;");
                    let _ = writeln!(src, "        x = x + g{g};");
                    let _ = writeln!(src, "    }}");
                }
            }
        }
        if !suspended {
            let _ = writeln!(src, "    co_yield();");
        }
        let _ = writeln!(src, "    return x;");
        let _ = writeln!(src, "}}");
        let _ = writeln!(src);
    }

    for e in 0..n_entry {
        let _ = writeln!(src, "coroutine_fn void entry{e}(int n) {{");
        let _ = writeln!(src, "    int t;");
        let _ = writeln!(src, "    t = co0(n);");
        let _ = writeln!(src, "    print(t);");
        for _ in 0..rng.random_range(0..=2u32) {
            match rng.random_range(0..4u32) {
                0 => {
                    let _ = writeln!(src, "    co_yield();");
                }
                1 => {
                    let _ = writeln!(src, "    print(n + {});", rng.random_range(0..10));
                }
                2 => {
                    let g = rng.random_range(0..n_glob);
                    let _ = writeln!(src, "    g{g} = g{g} + n;");
                }
                _ => {
                    let k = rng.random_range(0..n_co);
                    let _ = writeln!(src, "    if (n > {}) {{", rng.random_range(0..3));
                    let _ = writeln!(src, "        t = co{k}(n + 1);");
                    let _ = writeln!(src, "        print(t);");
                    let _ = writeln!(src, "    }}");
                }
            }
        }
        let _ = writeln!(src, "}}");
        let _ = writeln!(src);
    }

    let _ = writeln!(src, "void main() {{");
    for e in 0..n_entry {
        let _ = writeln!(src, "    int c{e};");
    }
    for e in 0..n_entry {
        let _ = writeln!(src, "    c{e} = co_create(&entry{e});");
        let _ = writeln!(src, "    co_enter(c{e}, {});", rng.random_range(0..5));
    }
    let _ = writeln!(src, "}}");
    src
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typeck::typecheck;
    use crate::{check, cps, parse_program};

    #[test]
    fn graph_programs_typecheck() {
        for seed in 0..20 {
            let gp = graph_program(seed, 40);
            let program = parse_program(&gp.source).expect("parse");
            typecheck(program).expect("typecheck");
        }
    }

    #[test]
    fn inference_matches_reachability_oracle() {
        for seed in 100..130 {
            let gp = graph_program(seed, 40);
            let program = parse_program(&gp.source).expect("parse");
            let typed = typecheck(program).expect("typecheck");
            let report = check::check(&typed);

            let graph_names: BTreeSet<&str> =
                report.graph.nodes.iter().map(|n| n.name.as_str()).collect();
            let expected_names: BTreeSet<&str> =
                gp.nodes.keys().map(String::as_str).collect();
            assert_eq!(graph_names, expected_names, "seed {seed}\n{}", gp.source);

            let expected = gp.expected_coroutines();
            for node in &report.graph.nodes {
                assert_eq!(
                    node.inferred_coroutine,
                    expected.contains(&node.name),
                    "seed {seed}, node {}\n{}",
                    node.name,
                    gp.source
                );
            }
        }
    }

    #[test]
    fn clean_programs_check_clean_and_translate() {
        for seed in 0..20 {
            let src = clean_program(seed);
            let program = parse_program(&src).expect("parse");
            let typed = typecheck(program.clone()).expect("typecheck");
            let report = check::check(&typed);
            assert!(
                report.is_clean(),
                "seed {seed} not clean: {:?}\n{src}",
                report.diagnostics
            );
            cps::translate(&program).expect("translate");
        }
    }
}
