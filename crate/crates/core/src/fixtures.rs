//! The reference models `T1` and `T2` used across tests and examples.

use crate::model::format::parse_model;
use crate::model::Pomdp;

/// States {0,1,2,3}, actions {a,b}, observations {u,v,w}. `a` walks
/// 0 -> 1 -> 3 (reach), `b` from 0 falls into 2 (avoid); 2 and 3 absorb.
pub const T1: &str = include_str!("../fixtures/t1.pomdp");

/// T1 except `P(1|0,a) = P(2|0,a) = 0.5`.
pub const T2: &str = include_str!("../fixtures/t2.pomdp");

pub fn t1() -> Pomdp {
    parse_model(T1).expect("T1 fixture parses")
}

pub fn t2() -> Pomdp {
    parse_model(T2).expect("T2 fixture parses")
}
