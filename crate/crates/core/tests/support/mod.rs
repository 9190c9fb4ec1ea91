//! Strategies and checks shared by the property suites and the acceptance runner.
#![allow(dead_code)]

pub mod cgpc;
pub mod ema;
pub mod mixup;
