#![allow(dead_code)]

pub mod hand;
pub mod oracle;
pub mod props;
