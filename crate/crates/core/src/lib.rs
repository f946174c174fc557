//! Core model for estimating generative-AI task exposure across a workforce:
//! task weighting, survey raking, savings classification, clustering, role
//! redesign and rater agreement. Pure computation, `no_std` with `alloc`.

#![no_std]

extern crate alloc;

pub mod agreement;
pub mod clustering;
pub mod exposure;
pub mod grade;
pub mod numeric;
pub mod raking;
pub mod redesign;
pub mod savings;
