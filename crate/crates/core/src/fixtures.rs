//! Grammars shipped with the crate, used by tests, benches and the CLI docs.

use crate::grammar::Grammar;

pub const PAREN: &str = include_str!("../fixtures/paren.bnf");
pub const LIST_LEFT: &str = include_str!("../fixtures/list_left.bnf");
pub const LIST_RIGHT: &str = include_str!("../fixtures/list_right.bnf");
pub const EXPR: &str = include_str!("../fixtures/expr.bnf");
pub const JSON: &str = include_str!("../fixtures/json.bnf");
pub const DIGITS: &str = include_str!("../fixtures/digits.bnf");
pub const TWO_LISTS: &str = include_str!("../fixtures/two_lists.bnf");
pub const AMBIGUOUS: &str = include_str!("../fixtures/ambiguous.bnf");

/// The LR(1) fixtures by name, in a stable order.
pub const ALL: &[(&str, &str)] = &[
    ("paren", PAREN),
    ("list_left", LIST_LEFT),
    ("list_right", LIST_RIGHT),
    ("expr", EXPR),
    ("json", JSON),
    ("digits", DIGITS),
    ("two_lists", TWO_LISTS),
];

fn load(src: &str) -> Grammar {
    Grammar::parse(src).expect("fixture grammar parses")
}

pub fn paren() -> Grammar {
    load(PAREN)
}

pub fn list_left() -> Grammar {
    load(LIST_LEFT)
}

pub fn list_right() -> Grammar {
    load(LIST_RIGHT)
}

pub fn expr() -> Grammar {
    load(EXPR)
}

pub fn json() -> Grammar {
    load(JSON)
}

pub fn digits() -> Grammar {
    load(DIGITS)
}

pub fn two_lists() -> Grammar {
    load(TWO_LISTS)
}
