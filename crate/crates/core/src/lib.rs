#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod attacks;
pub mod error;
pub mod harness;
pub mod optimizers;
pub mod oracle;
pub mod problems;
