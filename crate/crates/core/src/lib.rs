//! Finite quotients of finitely presented groups inside Lie-type classes
//! A1 and A2 (untwisted and unitary), computed by exhaustive enumeration
//! over small finite fields.

pub mod ff;
pub mod matrix;
pub mod module;
pub mod matgrp;
pub mod lietype;
pub mod fp;
pub mod phi;
pub mod detector;
pub mod unitary;
pub mod cache;
pub mod cli;
