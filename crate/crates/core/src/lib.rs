// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

pub mod analysis;
pub mod cli;
pub mod error;
pub mod observers;
pub mod plant;
pub mod qmat;
pub mod sim;

pub use error::{Error, Result};
