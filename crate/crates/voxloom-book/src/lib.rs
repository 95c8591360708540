//! Doc-test shim for the guide: every chapter is included as module
//! documentation so `cargo test --doc` compiles and runs the book's code
//! blocks against the current library. One module per chapter keeps a
//! failing snippet traceable to its source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/timebase.md")]
pub mod timebase {}

#[doc = include_str!("../../../book/src/decoding.md")]
pub mod decoding {}

#[doc = include_str!("../../../book/src/streaming.md")]
pub mod streaming {}

#[doc = include_str!("../../../book/src/generation.md")]
pub mod generation {}

#[doc = include_str!("../../../book/src/rewards.md")]
pub mod rewards {}

#[doc = include_str!("../../../book/src/markup.md")]
pub mod markup {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/serving.md")]
pub mod serving {}
