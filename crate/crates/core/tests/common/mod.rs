//! The shared program corpus: small coroutine programs exercising one
//! pipeline concern each. Both the translation tests and the execution
//! tests run over the full list.

#![allow(dead_code)]

pub const COUNTDOWN: &str = include_str!("../../../../corpus/golden/countdown.mc");

pub const SUSPEND_RESULT: &str =
    include_str!("../../../../corpus/exec/suspend_result.mc");

pub const BOXED_PARAM: &str =
    include_str!("../../../../corpus/exec/boxed_param.mc");

pub const GLOBAL_ORDER: &str =
    include_str!("../../../../corpus/exec/global_order.mc");

pub const BOOL_CHAIN: &str =
    include_str!("../../../../corpus/exec/bool_chain.mc");

pub const WHILE_CPS_COND: &str =
    include_str!("../../../../corpus/exec/while_cps_cond.mc");

pub const INDIRECT: &str =
    include_str!("../../../../corpus/exec/indirect.mc");

pub const BRANCH_MERGE: &str =
    include_str!("../../../../corpus/exec/branch_merge.mc");

pub const RELAY: &str =
    include_str!("../../../../corpus/exec/relay.mc");

pub const STORE_TARGET: &str =
    include_str!("../../../../corpus/exec/store_target.mc");

pub const CORPUS: &[(&str, &str)] = &[
    ("countdown", COUNTDOWN),
    ("suspend_result", SUSPEND_RESULT),
    ("boxed_param", BOXED_PARAM),
    ("global_order", GLOBAL_ORDER),
    ("bool_chain", BOOL_CHAIN),
    ("while_cps_cond", WHILE_CPS_COND),
    ("indirect", INDIRECT),
    ("branch_merge", BRANCH_MERGE),
    ("relay", RELAY),
    ("store_target", STORE_TARGET),
];
