//! Float math that works with and without `std`.
//!
//! `f64`'s transcendental methods live in `std`, not `core`; in `no_std`
//! builds they are routed through `libm` instead.

#![allow(dead_code)]

macro_rules! shim {
    ($name:ident, $libm:ident, $($arg:ident),+) => {
        #[cfg(feature = "std")]
        #[inline(always)]
        pub fn $name($($arg: f64),+) -> f64 {
            shim!(@std $name, $($arg),+)
        }
        #[cfg(not(feature = "std"))]
        #[inline(always)]
        pub fn $name($($arg: f64),+) -> f64 {
            libm::$libm($($arg),+)
        }
    };
    (@std $name:ident, $x:ident) => { $x.$name() };
    (@std $name:ident, $x:ident, $y:ident) => { $x.$name($y) };
}

shim!(sin, sin, x);
shim!(cos, cos, x);
shim!(sqrt, sqrt, x);
shim!(exp, exp, x);
shim!(ln, log, x);
shim!(abs, fabs, x);
shim!(atan2, atan2, x, y);
shim!(hypot, hypot, x, y);
shim!(round, round, x);

/// sin and cos in one call.
#[inline(always)]
pub fn sin_cos(x: f64) -> (f64, f64) {
    (sin(x), cos(x))
}
