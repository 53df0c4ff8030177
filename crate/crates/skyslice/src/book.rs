//! Compiles the guide's code snippets as doc-tests so the book and the
//! library cannot drift apart. `cargo test --doc` runs every fenced Rust
//! block in these chapters.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/scenarios.md")]
mod scenarios {}

#[doc = include_str!("../../../book/src/channel.md")]
mod channel {}

#[doc = include_str!("../../../book/src/qos.md")]
mod qos {}

#[doc = include_str!("../../../book/src/environment.md")]
mod environment {}

#[doc = include_str!("../../../book/src/rewards.md")]
mod rewards {}

#[doc = include_str!("../../../book/src/learning.md")]
mod learning {}

#[doc = include_str!("../../../book/src/agents.md")]
mod agents {}

#[doc = include_str!("../../../book/src/running.md")]
mod running {}
